//! Command-line runs on a small pinned configuration, compared with stored
//! results. Set `UPDATE_GOLDEN=1` to rewrite the stored files.

use std::path::{Path, PathBuf};
use std::process::Command;

use unsat_poro::smoothers::{PatchKind, SmootherKind};
use unsat_poro_harness::ExperimentConfig;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.name = "small".into();
    cfg.mesh.n = 8;
    cfg.mesh.n_coarse = 2;
    cfg.time.n_t = vec![2, 4];
    cfg.time.reference_n_t = 8;
    cfg.fields.seed = 7;
    cfg.solver.grids = vec![8];
    cfg.solver.n_t = 3;
    cfg.solver.smoothers = vec![
        SmootherKind::GaussSeidel,
        SmootherKind::Vanka {
            patch: PatchKind::Cell { overlap: 2 },
            colors: 4,
        },
    ];
    cfg.solver.sweeps = vec![2];
    cfg.solver.m_values = vec![3];
    cfg
}

fn run(verb: &str, dir: &Path) -> PathBuf {
    let config = dir.join("config.json");
    std::fs::write(&config, serde_json::to_string_pretty(&small_config()).unwrap()).unwrap();
    let out = dir.join("runs");
    let status = Command::new(env!("CARGO_BIN_EXE_unsat-poro"))
        .args([verb, "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    out.join("small").join(verb)
}

fn check_golden(verb: &str) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = std::fs::read_to_string(run(verb, a.path()).join("results.csv")).unwrap();
    let second = std::fs::read_to_string(run(verb, b.path()).join("results.csv")).unwrap();
    assert_eq!(first, second, "{verb} output is not reproducible");
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{verb}.csv"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &first).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).unwrap();
    assert_eq!(first.lines().count(), expected.lines().count(), "{verb}: row count");
    for (got, want) in first.lines().zip(expected.lines()) {
        let (g, w): (Vec<_>, Vec<_>) = (got.split(',').collect(), want.split(',').collect());
        assert_eq!(g.len(), w.len(), "{verb}: {got}");
        for (a, b) in g.iter().zip(&w) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-6 * x.abs().max(y.abs()) + 1e-9, "{verb}: {got} vs {want}"),
                _ => assert_eq!(a, b, "{verb}: {got} vs {want}"),
            }
        }
    }
}

#[test]
fn time_study_matches_the_stored_results() {
    check_golden("time-study");
}

#[test]
fn solver_study_matches_the_stored_results() {
    check_golden("solver-study");
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"mesh": {"n": 1}}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_unsat-poro"))
        .args(["simulate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh.n"));
}
