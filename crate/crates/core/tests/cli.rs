use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use frontlab::config::{scenario, RunConfig};
use frontlab::front_builder::SolverSettings;

fn frontlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Frozen scenario on a narrow window and a short run.
fn small_frozen() -> RunConfig {
    let mut cfg = scenario("frozen").unwrap();
    cfg.start = -10.0;
    cfg.horizon = 20.0;
    cfg.run.solver = SolverSettings {
        window: 120.0,
        shift_margin: 30.0,
        ..cfg.run.solver
    };
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, cfg.to_toml().unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn wave_command_writes_versioned_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(&["wave"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("frozen/wave.json")).unwrap()).unwrap();
    assert_eq!(json["format_version"], 1);
    let c = json["summary"]["speed"].as_f64().unwrap();
    assert!((c - 0.5767).abs() < 1e-4, "{c}");
    assert!(json["tail_identity_error"].as_f64().unwrap() <= 1e-6);
    let csv = fs::read_to_string(dir.path().join("frozen/profile.csv")).unwrap();
    assert!(csv.starts_with("x,phi,dphi\n"));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_frozen());
    for out in ["a", "b"] {
        let o = frontlab(&["evolve", "--config", &cfg], &dir.path().join(out));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["run.json", "run_summary.json", "trace.csv", "snapshots.csv"] {
        let a = fs::read(dir.path().join("a/frozen").join(file)).unwrap();
        let b = fs::read(dir.path().join("b/frozen").join(file)).unwrap();
        assert!(a == b, "{file} differs between identical runs");
    }
}

#[test]
fn verify_passes_then_flags_an_injected_bump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_frozen());
    let o = frontlab(&["verify", "--config", &cfg, "--fresh"], dir.path());
    assert!(o.status.success(), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("frozen/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["reports"].as_array().unwrap().len(), 15);

    let o = frontlab(&["verify", "--config", &cfg, "--inject", "ahead-bump"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("failed: decay_ahead_pointwise\n"), "{}", stderr(&o));
}

#[test]
fn verify_without_a_recorded_run_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(&["verify"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.json"), "{}", stderr(&o));
}

#[test]
fn bad_configs_are_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_frozen().to_toml().unwrap().replace("[run.solver]", "[run.solver]\ndtt = 0.1");
    let p = dir.path().join("bad.toml");
    fs::write(&p, text).unwrap();
    let o = frontlab(&["evolve", "--config", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dtt"), "{}", stderr(&o));

    let o = frontlab(&["wave", "--scenario", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("telegraph_ensemble"), "{}", stderr(&o));
}

#[test]
fn ensemble_resumes_after_a_partial_run() {
    let mut cfg = scenario("telegraph_ensemble").unwrap();
    cfg.horizon = 16.0;
    cfg.seeds = vec![0, 1, 2];
    cfg.ensemble.burn_in = 4.0;
    cfg.ensemble.checkpoints = 4;
    cfg.ensemble.profile_half_width = 20.0;
    cfg.ensemble.solver = SolverSettings {
        window: 120.0,
        shift_margin: 30.0,
        ..SolverSettings::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &cfg);

    let whole = dir.path().join("whole");
    let o = frontlab(&["ensemble", "--config", &path], &whole);
    assert!(o.status.success(), "{}", stderr(&o));

    let split = dir.path().join("split");
    let o = frontlab(&["ensemble", "--config", &path, "--stop-after", "1"], &split);
    assert_eq!(o.status.code(), Some(1), "an incomplete ensemble is not a pass");
    let o = frontlab(&["ensemble", "--config", &path], &split);
    assert!(o.status.success(), "{}", stderr(&o));

    for file in ["ensemble.jsonl", "ensemble_summary.json", "psi_star.csv"] {
        let a = fs::read(whole.join("telegraph_ensemble").join(file)).unwrap();
        let b = fs::read(split.join("telegraph_ensemble").join(file)).unwrap();
        assert!(a == b, "{file} differs after resume");
    }
}
