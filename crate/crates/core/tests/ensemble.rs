use std::fs;

use frontlab::config::telegraph_medium;
use frontlab::ensemble_random::{averaged_profile, run_ensemble, run_realization, EnsembleRun, EnsembleSettings};
use frontlab::front_builder::{periodic_wave, PeriodicSettings, SolverSettings};
use frontlab::parallel::Execution;
use frontlab::reaction_env::{AmplitudeModel, ReactionEnv, Telegraph};
use frontlab::wave_profile::solve_ignition_wave;

fn medium(seed: u64) -> ReactionEnv {
    ReactionEnv::constant(0.25, 1.0)
        .unwrap()
        .with_amplitude(telegraph_medium(seed))
        .unwrap()
}

fn small() -> EnsembleSettings {
    EnsembleSettings {
        solver: SolverSettings {
            window: 160.0,
            shift_margin: 30.0,
            ..SolverSettings::default()
        },
        burn_in: 10.0,
        checkpoints: 4,
        profile_half_width: 20.0,
        ..EnsembleSettings::default()
    }
}

#[test]
fn interrupted_run_resumes_to_the_same_summary() {
    let seeds = [3, 1, 4, 5];
    let cfg = small();
    let whole = tempfile::tempdir().unwrap();
    let full = run_ensemble(
        &medium(0),
        &seeds,
        20.0,
        &cfg,
        &EnsembleRun {
            store: Some(whole.path().to_path_buf()),
            stop_after: None,
        },
    )
    .unwrap();

    let split = tempfile::tempdir().unwrap();
    let opts = |stop| EnsembleRun {
        store: Some(split.path().to_path_buf()),
        stop_after: stop,
    };
    let partial = run_ensemble(&medium(0), &seeds, 20.0, &cfg, &opts(Some(2))).unwrap();
    assert!(!partial.complete);
    assert_eq!(partial.realizations.len(), 2);
    // a torn trailing line from the interruption is dropped on resume
    let store = split.path().join("ensemble.jsonl");
    let mut text = fs::read_to_string(&store).unwrap();
    text.push_str("{\"format_version\":1,\"seed\":5,\"t\":");
    fs::write(&store, text).unwrap();
    let resumed = run_ensemble(&medium(0), &seeds, 20.0, &cfg, &opts(None)).unwrap();

    assert_eq!(
        serde_json::to_string(&resumed).unwrap(),
        serde_json::to_string(&full).unwrap()
    );
    assert_eq!(
        fs::read(&store).unwrap(),
        fs::read(whole.path().join("ensemble.jsonl")).unwrap()
    );
}

#[test]
fn execution_policy_does_not_change_the_report() {
    let seeds = [0, 1, 2, 3, 4, 5];
    let mut cfg = small();
    let seq = run_ensemble(&medium(0), &seeds, 20.0, &cfg, &EnsembleRun::default()).unwrap();
    cfg.execution = Execution::Parallel { workers: 3 };
    let par = run_ensemble(&medium(0), &seeds, 20.0, &cfg, &EnsembleRun::default()).unwrap();
    assert_eq!(serde_json::to_string(&seq).unwrap(), serde_json::to_string(&par).unwrap());
}

#[test]
fn rerun_and_finer_cadence_reproduce_the_speed_path() {
    let env = medium(11);
    let phi = solve_ignition_wave(&|u| env.f_inf(u), 0.25, 1e-8).unwrap();
    let cfg = small();
    let a = run_realization(&env, &phi, 24.0, &cfg).unwrap();
    let b = run_realization(&env, &phi, 24.0, &cfg).unwrap();
    let speeds = |r: &[frontlab::ensemble_random::CheckpointRecord]| r.iter().map(|c| c.speed.to_bits()).collect::<Vec<_>>();
    assert_eq!(speeds(&a), speeds(&b));

    let fine = EnsembleSettings {
        checkpoints: 12,
        ..cfg.clone()
    };
    let c = run_realization(&env, &phi, 24.0, &fine).unwrap();
    for rec in &a {
        let other = c.iter().find(|r| (r.t - rec.t).abs() < 1e-9).unwrap();
        assert_eq!(other.xi_theta.to_bits(), rec.xi_theta.to_bits(), "t = {}", rec.t);
    }
}

#[test]
fn degenerate_telegraph_ensemble() {
    let env = ReactionEnv::constant(0.25, 1.0)
        .unwrap()
        .with_amplitude(AmplitudeModel::Telegraph(Telegraph {
            holding_rate: 0.5,
            a_min: 1.0,
            a_max: 1.0,
            seed: 0,
        }))
        .unwrap();
    let cfg = EnsembleSettings {
        checkpoints: 4,
        ..small()
    };
    let rep = run_ensemble(&env, &[0, 1, 2], 100.0, &cfg, &EnsembleRun::default()).unwrap();
    let c_inf = rep.sandwich.0;
    let first = &rep.realizations[0].checkpoints;
    for r in &rep.realizations {
        assert_eq!(&r.checkpoints.iter().map(|c| c.speed).collect::<Vec<_>>(),
                   &first.iter().map(|c| c.speed).collect::<Vec<_>>());
    }
    assert!(rep.variance.iter().all(|&v| v == 0.0));
    let terminal = rep.mean_speed.last().copied().unwrap();
    assert!((terminal - c_inf).abs() <= 0.01 * c_inf, "{terminal} vs {c_inf}");
}

#[test]
fn averaged_profile_matches_periodic_average() {
    let env = ReactionEnv::constant(0.25, 1.0)
        .unwrap()
        .with_amplitude(AmplitudeModel::Periodic {
            mean: 1.0,
            rho: 0.5,
            period: 10.0,
        })
        .unwrap();
    let phi = solve_ignition_wave(&|u| env.f_inf(u), 0.25, 1e-8).unwrap();
    let cfg = EnsembleSettings {
        burn_in: 50.0,
        checkpoints: 2,
        profile_half_width: 40.0,
        ..EnsembleSettings::default()
    };
    let recs = run_realization(&env, &phi, 200.0, &cfg).unwrap();
    let psi = recs.last().unwrap().psi_star.clone().unwrap();
    assert!(psi.windows(2).all(|w| w[1] <= w[0]));

    let wave = periodic_wave(&env, &PeriodicSettings::default()).unwrap();
    let avg = wave.period_average();
    assert_eq!(avg.len(), psi.len());
    let gap = psi.iter().zip(&avg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-3, "gap {gap}");
}

#[test]
fn averaged_profile_limits_on_a_small_ensemble() {
    let cfg = EnsembleSettings {
        profile_half_width: 40.0,
        ..small()
    };
    let rep = run_ensemble(&medium(0), &[7], 40.0, &cfg, &EnsembleRun::default()).unwrap();
    let p = averaged_profile(&rep, 7, 1e-4).unwrap();
    assert!(p.values.windows(2).all(|w| w[1] <= w[0]));
    assert!(p.left_ok && p.right_ok, "{:?} {:?}", p.values.first(), p.values.last());
    assert!(averaged_profile(&rep, 8, 1e-4).is_err());
}
