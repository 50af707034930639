use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use frontlab::comparison_verify::{calibrate_ahead, inject_ahead_bump, verify_run, CheckName};
use frontlab::config::{scenario, RunConfig};
use frontlab::ensemble_random::{averaged_profile, run_ensemble, EnsembleRun};
use frontlab::front_builder::{build_front, periodic_wave, run_approximating};
use frontlab::interface_track::estimate_delay;
use frontlab::output::{self, Versioned};
use frontlab::parallel::Execution;
use frontlab::tolerances;
use frontlab::wave_profile::{solve_bistable_wave, solve_ignition_wave, WaveKind, WaveProfile, WaveSummary};
use frontlab::{FrontError, Result};

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Transition fronts in time-heterogeneous ignition media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the traveling-wave profile of the lower envelope (or its bistable companion).
    Wave {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
    /// Run one approximating solution and record its trace and snapshots.
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Approximating runs from receding start times and their Cauchy gaps.
    Front {
        #[command(flatten)]
        common: Common,
    },
    /// Period-map fixed point for a periodic medium.
    Periodic {
        #[command(flatten)]
        common: Common,
    },
    /// Seeded telegraph ensemble; resumes from an existing `ensemble.jsonl`.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Compute at most this many new realizations, then stop.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Replay the enabled checks over the run recorded by `evolve`.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Record the run first instead of reading it.
        #[arg(long)]
        fresh: bool,
        /// Corrupt the recorded run before checking.
        #[arg(long, value_enum)]
        inject: Option<Injection>,
    },
}

#[derive(Args)]
struct Common {
    /// Canonical scenario name.
    #[arg(long, default_value = "frozen", conflicts_with = "config")]
    scenario: String,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; files go to `<root>/<scenario>` unless the config names a directory.
    #[arg(long, env = "FRONTLAB_OUTPUT_ROOT", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Use seeds `0..n`.
    #[arg(long)]
    seeds: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ignition,
    Bistable,
}

#[derive(Clone, Copy, ValueEnum)]
enum Injection {
    /// Lift the far tail of the last snapshot above the calibrated decay.
    AheadBump,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => scenario(&self.scenario)?,
        };
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(w) = self.workers {
            cfg.ensemble.execution = Execution::Parallel { workers: w };
        }
        if let Some(n) = self.seeds {
            cfg.seeds = (0..n).collect();
        }
        cfg.validate()?;
        let dir = cfg.output_dir(&self.out);
        Ok((cfg, dir))
    }
}

fn lower_wave(cfg: &RunConfig) -> Result<WaveProfile> {
    let env = &cfg.env;
    solve_ignition_wave(&|u| env.f_inf(u), env.theta, cfg.wave.tol)
}

#[derive(Serialize)]
struct WaveReport {
    summary: WaveSummary,
    /// Speed of the upper envelope's wave; NaN for bistable runs.
    c_sup: f64,
    /// `sup |φ(x) - θ e^{-cx}|` on `[0, 10]`.
    tail_identity_error: Option<f64>,
}

fn cmd_wave(cfg: &RunConfig, dir: &Path, kind: Option<Kind>) -> Result<bool> {
    let env = &cfg.env;
    let kind = match kind {
        Some(Kind::Ignition) => WaveKind::Ignition,
        Some(Kind::Bistable) => WaveKind::Bistable,
        None => cfg.wave.kind,
    };
    let (phi, c_sup, tail) = match kind {
        WaveKind::Ignition => {
            let phi = lower_wave(cfg)?;
            let sup = env.sup_medium();
            let c_sup = solve_ignition_wave(&|u| sup.f_inf(u), env.theta, cfg.wave.tol)?.speed;
            let tail = phi.tail_error(10.0);
            (phi, c_sup, Some(tail))
        }
        WaveKind::Bistable => {
            let fb = env.bistable_companion(cfg.wave.bistable_delta)?;
            (solve_bistable_wave(&|u| fb.eval(u), env.theta, cfg.wave.tol)?, f64::NAN, None)
        }
    };
    output::write_profile(&dir.join("profile.csv"), &phi)?;
    output::write_json(
        &dir.join("wave.json"),
        &Versioned::new(WaveReport {
            summary: phi.summary(),
            c_sup,
            tail_identity_error: tail,
        }),
    )?;
    println!("speed {:.10}", phi.speed);
    if let Some(t) = tail {
        println!("tail identity error on [0, 10]: {t:.3e}");
        return Ok(t <= 1e-6);
    }
    Ok(true)
}

fn cmd_evolve(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let phi = lower_wave(cfg)?;
    let run = run_approximating(&cfg.env, &phi, cfg.start, cfg.horizon, &cfg.run)?;
    output::write_run(dir, &run)?;
    println!(
        "x_s {:.6}, ξ_θ({}) = {:.6}, {} trace samples, {} snapshots",
        run.x_s,
        run.t_end,
        run.trace.samples.last().map_or(f64::NAN, |s| s.xi_theta),
        run.trace.samples.len(),
        run.snapshots.len()
    );
    Ok(true)
}

fn cmd_front(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let phi = lower_wave(cfg)?;
    let mut run_cfg = cfg.run.clone();
    run_cfg.solver = cfg.front.solver.clone();
    run_cfg.tracker.every = run_cfg.tracker.every.max(run_cfg.solver.dt);
    match build_front(
        &cfg.env,
        &phi,
        &cfg.front.s_list,
        (0.0, cfg.front.window),
        &run_cfg,
        cfg.front.cauchy_tol,
        cfg.ensemble.execution,
    ) {
        Ok(est) => {
            output::write_front(dir, &est)?;
            for (s, g) in est.s_list.iter().zip(&est.gaps) {
                println!("s = {s:>8}: gap to next {g:.3e}");
            }
            println!("front speed on the window {:.6}", est.speed);
            Ok(true)
        }
        Err(FrontError::NonCauchy { gaps, tol }) => {
            eprintln!("approximating runs are not Cauchy within {tol:.1e}:");
            for (s, g) in cfg.front.s_list.iter().zip(&gaps) {
                eprintln!("  s = {s:>8}: gap to next {g:.3e}");
            }
            Err(FrontError::NonCauchy { gaps, tol })
        }
        Err(e) => Err(e),
    }
}

fn cmd_periodic(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let wave = periodic_wave(&cfg.env, &cfg.periodic)?;
    output::write_periodic(dir, &wave)?;
    println!(
        "c_T {:.6}, residual {:.3e}, drift {:.3e}, {} periods",
        wave.speed,
        wave.final_residual(),
        wave.final_drift(),
        wave.residuals.len()
    );
    Ok(true)
}

fn cmd_ensemble(cfg: &RunConfig, dir: &Path, stop_after: Option<usize>) -> Result<bool> {
    if cfg.seeds.is_empty() {
        return Err(FrontError::Config("the ensemble needs seeds".into()));
    }
    let opts = EnsembleRun {
        store: Some(dir.to_path_buf()),
        stop_after,
    };
    let report = run_ensemble(&cfg.env, &cfg.seeds, cfg.horizon, &cfg.ensemble, &opts)?;
    let psi = report
        .realizations
        .iter()
        .find(|r| r.ok())
        .map(|r| averaged_profile(&report, r.seed, tolerances::TAIL_TOL))
        .transpose()?;
    output::write_ensemble(dir, &report, psi.as_ref())?;
    println!(
        "{} of {} realizations, mean terminal speed {:.6}, sandwich [{:.6}, {:.6}]",
        report.n_effective,
        report.n,
        report.mean_speed.last().copied().unwrap_or(f64::NAN),
        report.sandwich.0,
        report.sandwich.1
    );
    for r in report.realizations.iter().filter(|r| !r.ok()) {
        eprintln!("seed {} failed: {}", r.seed, r.failure.as_deref().unwrap_or(""));
    }
    Ok(report.complete && report.n_effective == report.n && report.within_sandwich)
}

fn cmd_verify(cfg: &RunConfig, dir: &Path, fresh: bool, inject: Option<Injection>) -> Result<bool> {
    let phi = lower_wave(cfg)?;
    let mut run = if fresh {
        let run = run_approximating(&cfg.env, &phi, cfg.start, cfg.horizon, &cfg.run)?;
        output::write_run(dir, &run)?;
        run
    } else {
        output::read_run(dir)?
    };
    if let Some(Injection::AheadBump) = inject {
        let t_delay = estimate_delay(&run.trace).max(run.s + cfg.verify.startup_layer);
        let cal = calibrate_ahead(&run, t_delay)?;
        inject_ahead_bump(&mut run, cal.c_hat, 12.0)?;
    }
    let manifest = verify_run(&run, &cfg.env, &phi, &cfg.scenario, &cfg.verify);
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    for r in &manifest.reports {
        println!(
            "{:<24} {}  margin {:>11.3e}  tol {:.1e}",
            r.check.as_str(),
            if r.passed { "pass" } else { "FAIL" },
            r.worst_margin,
            r.tolerance
        );
    }
    let failed: Vec<CheckName> = manifest.failed();
    if !failed.is_empty() {
        eprintln!(
            "failed: {}",
            failed.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
        );
    }
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Wave { common, kind } => common.load().and_then(|(c, d)| cmd_wave(&c, &d, *kind)),
        Command::Evolve { common } => common.load().and_then(|(c, d)| cmd_evolve(&c, &d)),
        Command::Front { common } => common.load().and_then(|(c, d)| cmd_front(&c, &d)),
        Command::Periodic { common } => common.load().and_then(|(c, d)| cmd_periodic(&c, &d)),
        Command::Ensemble { common, stop_after } => {
            common.load().and_then(|(c, d)| cmd_ensemble(&c, &d, *stop_after))
        }
        Command::Verify { common, fresh, inject } => {
            common.load().and_then(|(c, d)| cmd_verify(&c, &d, *fresh, *inject))
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
