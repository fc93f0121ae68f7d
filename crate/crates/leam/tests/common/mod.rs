#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use leam::backend::{ReplayBackend, ReplayMatch};
use leam::prompt::ImageInput;
use leam::{run_pipeline, Mode, PipelineConfig, PipelineError, PipelineState, UserInput};

pub const CASES: [&str; 4] = ["lslot", "vivaldi", "patch245", "monopole"];

pub fn fixtures(case: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(case)
}

pub fn mode(case: &str) -> Mode {
    if case == "patch245" {
        Mode::Weak
    } else {
        Mode::Strong
    }
}

pub fn input(case: &str) -> UserInput {
    let dir = fixtures(case);
    let mut images = Vec::new();
    let img = dir.join("images");
    if img.is_dir() {
        let mut paths: Vec<_> = fs::read_dir(&img).unwrap().map(|e| e.unwrap().path()).collect();
        paths.sort();
        images = paths.iter().map(|p| ImageInput::load(p).unwrap()).collect();
    }
    let checks = dir.join("checks.txt");
    UserInput {
        text: fs::read_to_string(dir.join("description.txt")).unwrap(),
        images,
        checks: checks.is_file().then(|| fs::read_to_string(&checks).unwrap()),
    }
}

pub fn config(case: &str) -> PipelineConfig {
    PipelineConfig {
        mode: mode(case),
        ..PipelineConfig::default()
    }
}

/// Replays `case` from its fixtures into `workspace`.
pub fn replay(case: &str, workspace: &Path, matching: ReplayMatch) -> Result<PipelineState, PipelineError> {
    let backend = ReplayBackend::open(&fixtures(case), matching).unwrap();
    run_pipeline(workspace, &input(case), &config(case), &backend)
}

/// Every file under `root` with its bytes, sorted by relative path.
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

/// Copies the request/response pairs of `case` into `dest`.
pub fn copy_fixtures(case: &str, dest: &Path) {
    fs::create_dir_all(dest).unwrap();
    for e in fs::read_dir(fixtures(case)).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".request.txt") || name.ends_with(".response.txt") {
            fs::copy(&p, dest.join(&name)).unwrap();
        }
    }
}
