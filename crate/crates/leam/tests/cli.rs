mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;

fn leam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leam")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `leam model` for a fixture case into `ws`.
fn model(case: &str, ws: &Path) -> Output {
    let dir = fixtures(case);
    let desc = dir.join("description.txt");
    let checks = dir.join("checks.txt");
    let mut args = vec!["model".to_string(), "--desc".into(), p(&desc).into()];
    args.extend(["--fixtures".into(), p(&dir).into(), "--workspace".into(), p(ws).into()]);
    if checks.is_file() {
        args.extend(["--checks".into(), p(&checks).into()]);
    }
    if case == "patch245" {
        args.extend(["--mode".into(), "weak".into()]);
    }
    let img = dir.join("images/monopole_topology.png");
    if img.is_file() {
        args.extend(["--image".into(), p(&img).into()]);
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    leam(&refs)
}

#[test]
fn model_prints_summary_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    let o = model("lslot", &ws);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("2 solids, 7 parameters, 1 material\n"), "{out}");
    assert!(out.contains("  3D_Model.bas\n"));
    assert!(ws.join("run_manifest.txt").is_file());

    let o = model("monopole", &tmp.path().join("mono"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("7 solids, 12 parameters, 2 materials\n"));
}

#[test]
fn model_usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let desc = fixtures("lslot").join("description.txt");
    let ws = tmp.path().join("ws");
    let missing = tmp.path().join("nowhere");
    let cases: Vec<Vec<&str>> = vec![
        vec!["model", "--desc", p(&desc), "--workspace", p(&ws)],
        vec!["model", "--desc", p(&desc), "--workspace", p(&ws), "--fixtures", p(&missing)],
        vec!["model", "--desc", p(&missing), "--workspace", p(&ws), "--fixtures", p(tmp.path())],
        vec!["model", "--workspace", p(&ws)],
        vec!["model", "--desc", p(&desc), "--workspace", p(&ws), "--mode", "medium"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = leam(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    let bad_cfg = tmp.path().join("bad.toml");
    fs::write(&bad_cfg, "[models\n").unwrap();
    let o = leam(&[
        "model", "--desc", p(&desc), "--workspace", p(&ws), "--fixtures", p(&fixtures("lslot")), "--config", p(&bad_cfg),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!ws.exists());
}

#[test]
fn fixture_miss_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let desc = tmp.path().join("d.txt");
    fs::write(&desc, "A different antenna.\n").unwrap();
    let o = leam(&[
        "model",
        "--desc",
        p(&desc),
        "--fixtures",
        p(&fixtures("lslot")),
        "--workspace",
        p(&tmp.path().join("ws")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("StrongD2S"), "{}", stderr(&o));
}

#[test]
fn update_reports_new_volume() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    assert_eq!(code(&model("lslot", &ws)), 0);
    let o = leam(&["update", "--workspace", p(&ws), "--param", "PatchW=12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("wrote UpdatePara.bas"), "{out}");
    assert!(out.contains("patch: exact volume 3.045 mm^3"), "{out}");
    assert_eq!(
        fs::read_to_string(ws.join("UpdatePara.bas")).unwrap(),
        "StoreParameter \"PatchW\", \"12\"\nRebuild\n"
    );

    let o = leam(&["update", "--workspace", p(&ws), "--param", "Nope=1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown parameter `Nope`"));
    assert!(!ws.join("UpdatePara_2.bas").exists());

    let o = leam(&["update", "--workspace", p(&ws), "--param", "PatchW"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn vivaldi_update_keeps_symmetry() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    assert_eq!(code(&model("vivaldi", &ws)), 0);
    let upd = fixtures("vivaldi").join("update.txt");
    let o = leam(&["update", "--workspace", p(&ws), "--params-file", p(&upd), "--samples", "100000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("symmetry of front_patch, plane x=15: asymmetry 0 (pass)"), "{out}");
    assert!(out.contains("x1 .. x20 ascending in (0, 15): pass"), "{out}");
}

#[test]
fn geom_report_writes_both_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    assert_eq!(code(&model("monopole", &ws)), 0);
    let o = leam(&["geom-report", "--workspace", p(&ws), "--samples", "20000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("S_L = M_L + DP_R + 0.2: pass (residual"), "{out}");
    assert!(out.contains("solid circular_patch"));
    let rec = fs::read_to_string(ws.join("geom_report.rec")).unwrap();
    assert!(rec.contains("samples: 20000") && rec.contains("status: pass"));
    assert_eq!(fs::read_to_string(ws.join("geom_report.txt")).unwrap(), out);

    let o = leam(&["geom-report", "--workspace", p(&tmp.path().join("none"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn failing_check_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    assert_eq!(code(&model("monopole", &ws)), 0);
    let o = leam(&["update", "--workspace", p(&ws), "--param", "S_L=40", "--samples", "1000"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("S_L = M_L + DP_R + 0.2: FAIL"), "{}", stdout(&o));
}

#[test]
fn validate_reports_statement_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("ws");
    assert_eq!(code(&model("lslot", &ws)), 0);
    let files: Vec<String> = ["Para.bas", "Materials.bas", "3D_Model.bas", "2D+_Model.bas", "Boolean.bas"]
        .iter()
        .map(|f| ws.join(f).to_string_lossy().into_owned())
        .collect();
    let refs: Vec<&str> = std::iter::once("validate").chain(files.iter().map(String::as_str)).collect();
    let o = leam(&refs);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("5 file(s) clean"));

    // Out of order: the boolean refers to solids not yet created.
    let o = leam(&["validate", &files[4], &files[0]]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("Boolean.bas statement 1:"), "{}", stderr(&o));

    let junk = tmp.path().join("junk.bas");
    fs::write(&junk, "With Brick\n").unwrap();
    assert_eq!(code(&leam(&["validate", p(&junk)])), 1);
    assert_eq!(code(&leam(&["validate"])), 2);
}

#[test]
fn design_patch_prints_dimensions() {
    let o = leam(&["design-patch", "--f0", "2.45e9", "--er", "4.3", "--h", "1.6"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    assert!((value("W =") - 38.0).abs() / 38.0 < 0.1);
    assert!((value("L =") - 28.0).abs() / 28.0 < 0.1);
    assert_eq!(code(&leam(&["design-patch", "--f0", "0", "--er", "4.3", "--h", "1.6"])), 2);
    assert_eq!(code(&leam(&["design-patch", "--f0", "2.45e9", "--er", "0.5", "--h", "1.6"])), 2);
}
