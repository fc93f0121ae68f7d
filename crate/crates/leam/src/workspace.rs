//! Workspace files: atomic artifact writes, the run manifest and loading a
//! finished run back.
//!
//! ```text
//! <workspace>/
//!   description.txt          user text
//!   checks.txt               optional model checks
//!   Solid_List.txt           stage 1
//!   Para.bas  Solids_Dims.txt  Materials.bas
//!   3D_Model.bas  2D+_Model.bas  Boolean.bas
//!   UpdatePara.bas ...       one per update
//!   run_manifest.txt         `<sha256>  <file>` per macro, execution order
//!   transcript.log           one entry per tool invocation
//!   transcripts/             NN_<tool>.request.txt / .response.txt, images/
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use leam_core::checks::{parse_checks, Check};
use leam_core::ir::{parse_solid_list, SolidList};
use leam_core::macros::{parse_macro, solid_list_from_macros, MacroDoc};
use leam_core::ParamEnv;

use crate::prompt::sha256_hex;
use crate::tools::ArtifactKind;
use crate::PipelineError;

pub const MANIFEST: &str = "run_manifest.txt";
pub const TRANSCRIPT_LOG: &str = "transcript.log";
pub const TRANSCRIPTS: &str = "transcripts";
pub const DESCRIPTION: &str = "description.txt";
pub const CHECKS: &str = "checks.txt";

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn append_line(path: &Path, text: &str) -> Result<(), PipelineError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Creates an empty workspace directory. An existing non-empty one is refused.
pub fn create_workspace(root: &Path) -> Result<(), PipelineError> {
    if root.exists() {
        let mut entries = fs::read_dir(root).map_err(io_err(root))?;
        if entries.next().is_some() {
            return Err(PipelineError::Workspace {
                path: root.to_path_buf(),
                message: "directory is not empty".into(),
            });
        }
    }
    let t = root.join(TRANSCRIPTS).join("images");
    fs::create_dir_all(&t).map_err(io_err(&t))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub sha256: String,
    pub file: String,
}

impl ManifestEntry {
    pub fn of(file: &str, text: &str) -> Self {
        ManifestEntry {
            sha256: sha256_hex(text.as_bytes()),
            file: file.to_string(),
        }
    }

    pub fn line(&self) -> String {
        format!("{}  {}\n", self.sha256, self.file)
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let (h, f) = l
                .split_once("  ")
                .ok_or_else(|| format!("manifest line {}: expected `<sha256>  <file>`", i + 1))?;
            if h.len() != 64 || !h.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(format!("manifest line {}: bad hash", i + 1));
            }
            Ok(ManifestEntry {
                sha256: h.to_string(),
                file: f.to_string(),
            })
        })
        .collect()
}

/// A completed run read back from disk, with every manifest hash verified.
#[derive(Debug, Clone)]
pub struct LoadedWorkspace {
    pub root: PathBuf,
    pub manifest: Vec<ManifestEntry>,
    /// Macro documents in manifest order.
    pub docs: Vec<(String, MacroDoc)>,
    pub dims: SolidList,
    pub checks: Vec<Check>,
}

impl LoadedWorkspace {
    pub fn load(root: &Path) -> Result<Self, PipelineError> {
        let bad = |message: String| PipelineError::Workspace {
            path: root.to_path_buf(),
            message,
        };
        let manifest_path = root.join(MANIFEST);
        if !manifest_path.is_file() {
            return Err(bad("no run manifest; run `leam model` first".into()));
        }
        let manifest = parse_manifest(&read_text(&manifest_path)?).map_err(bad)?;
        let mut docs = Vec::with_capacity(manifest.len());
        for e in &manifest {
            let text = read_text(&root.join(&e.file))?;
            if sha256_hex(text.as_bytes()) != e.sha256 {
                return Err(bad(format!("{} does not match its manifest hash", e.file)));
            }
            let doc = parse_macro(&text).map_err(|err| bad(format!("{}: {err}", e.file)))?;
            docs.push((e.file.clone(), doc));
        }
        let dims_file = ArtifactKind::SolidsDims.file_name();
        let dims = parse_solid_list(&read_text(&root.join(dims_file))?, true)
            .map_err(|e| bad(format!("{dims_file}: {e}")))?;
        let checks_path = root.join(CHECKS);
        let checks = if checks_path.is_file() {
            parse_checks(&read_text(&checks_path)?)?
        } else {
            Vec::new()
        };
        Ok(LoadedWorkspace {
            root: root.to_path_buf(),
            manifest,
            docs,
            dims,
            checks,
        })
    }

    /// Current parameter values: the dimensioned list's, overridden by every
    /// macro file in manifest order (including updates).
    pub fn parameters(&self) -> Result<ParamEnv, PipelineError> {
        let docs: Vec<MacroDoc> = self.docs.iter().map(|(_, d)| d.clone()).collect();
        let lifted = solid_list_from_macros(&docs).map_err(|e| PipelineError::Workspace {
            path: self.root.clone(),
            message: e.to_string(),
        })?;
        let mut env = self.dims.parameters.clone();
        for (n, v) in lifted.parameters.iter() {
            if env.contains(n) {
                env.set(n, v).expect("declared");
            }
        }
        Ok(env)
    }

    /// Update files already in the manifest.
    pub fn update_count(&self) -> usize {
        self.manifest
            .iter()
            .filter(|e| e.file.starts_with("UpdatePara"))
            .count()
    }

    /// Number of recorded tool invocations.
    pub fn invocation_count(&self) -> usize {
        fs::read_dir(self.root.join(TRANSCRIPTS))
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter(|e| e.file_name().to_string_lossy().ends_with(".request.txt"))
                    .count()
            })
            .unwrap_or(0)
    }
}

/// File name of the `n`th update (1-based): `UpdatePara.bas`, `UpdatePara_2.bas`, ...
pub fn update_file_name(n: usize) -> String {
    if n <= 1 {
        ArtifactKind::UpdatePara.file_name().to_string()
    } else {
        format!("UpdatePara_{n}.bas")
    }
}
