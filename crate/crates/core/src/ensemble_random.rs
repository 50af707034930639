//! Seeded telegraph-media ensembles: per-seed front positions, the speed
//! estimator `ξ_θ(t)/t`, and time-averaged front-centered profiles.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::front_builder::{front_centered, offsets, SolverSettings};
use crate::interface_track::xi_lambda;
use crate::parallel::{self, Execution};
use crate::pde_core::{evolve, lattice_count, Field};
use crate::reaction_env::{AmplitudeModel, ReactionEnv};
use crate::tolerances;
use crate::wave_profile::{solve_ignition_wave, WaveProfile};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSettings {
    pub solver: SolverSettings,
    /// Evolution time before statistics start.
    pub burn_in: f64,
    /// Checkpoints at `horizon·k/checkpoints`, `k = 1..=checkpoints`.
    pub checkpoints: usize,
    /// Cadence of the front-centered profiles entering the time average.
    pub profile_every: f64,
    pub profile_half_width: f64,
    /// Terminal speeds must lie within this distance of the frozen-media speeds.
    pub speed_tol: f64,
    pub execution: Execution,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            burn_in: tolerances::T_BURN,
            checkpoints: 8,
            profile_every: 1.0,
            profile_half_width: 60.0,
            speed_tol: 0.01,
            execution: Execution::Sequential,
        }
    }
}

impl EnsembleSettings {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        self.solver.validate()?;
        if !(self.burn_in >= 0.0) {
            return Err(invalid("burn_in", "must be nonnegative"));
        }
        if self.checkpoints == 0 {
            return Err(invalid("checkpoints", "need at least one"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if !(self.profile_half_width > 0.0) {
            return Err(invalid("profile_half_width", "must be positive"));
        }
        lattice_count(self.burn_in, self.solver.dt, "burn_in")?;
        lattice_count(self.profile_every, self.solver.dt, "profile_every")?;
        lattice_count(horizon / self.checkpoints as f64, self.profile_every, "checkpoints")?;
        Ok(())
    }

    pub fn checkpoint_times(&self, horizon: f64) -> Vec<f64> {
        (1..=self.checkpoints)
            .map(|k| horizon * k as f64 / self.checkpoints as f64)
            .collect()
    }
}

/// One line of `ensemble.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub format_version: u32,
    pub seed: u64,
    pub t: f64,
    /// `ξ_θ(t) - ξ_θ(0)`.
    pub xi_theta: f64,
    pub speed: f64,
    /// Running time average of the front-centered profile; kept on the last checkpoint only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub seed: u64,
    pub failure: Option<String>,
    pub checkpoints: Vec<CheckpointRecord>,
}

impl Realization {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn terminal_speed(&self) -> Option<f64> {
        if self.ok() {
            self.checkpoints.last().map(|c| c.speed)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub format_version: u32,
    pub n: usize,
    pub n_effective: usize,
    pub seeds: Vec<u64>,
    pub horizon: f64,
    pub checkpoint_times: Vec<f64>,
    /// Profile offsets from `ξ_θ`.
    pub offsets: Vec<f64>,
    pub realizations: Vec<Realization>,
    pub mean_speed: Vec<f64>,
    pub variance: Vec<f64>,
    /// `(c(f_inf), c(f_sup))`.
    pub sandwich: (f64, f64),
    pub speed_tol: f64,
    /// Every terminal speed lies in the widened sandwich.
    pub within_sandwich: bool,
    /// All requested seeds are present.
    pub complete: bool,
}

impl EnsembleReport {
    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }

    /// Standard deviation of `ξ(t)/t` at the checkpoint nearest `t`.
    pub fn std_at(&self, t: f64) -> Option<f64> {
        let k = self
            .checkpoint_times
            .iter()
            .position(|&c| (c - t).abs() < 1e-9)?;
        Some(self.variance[k].sqrt())
    }

    /// First checkpoint index from which the variance never increases.
    pub fn variance_nonincreasing_from(&self) -> usize {
        let mut from = 0;
        for k in 1..self.variance.len() {
            if self.variance[k] > self.variance[k - 1] {
                from = k;
            }
        }
        from
    }

    pub fn realization(&self, seed: u64) -> Option<&Realization> {
        self.realizations.iter().find(|r| r.seed == seed)
    }
}

/// Options that do not change the numbers: persistence and early stopping.
#[derive(Debug, Clone, Default)]
pub struct EnsembleRun {
    /// Directory holding `ensemble.jsonl`; records already there are reused.
    pub store: Option<PathBuf>,
    /// Stop after computing this many new realizations.
    pub stop_after: Option<usize>,
}

fn telegraph_seeded(env: &ReactionEnv, seed: u64) -> Result<ReactionEnv> {
    match &env.amplitude {
        AmplitudeModel::Telegraph(tg) => {
            let mut tg = *tg;
            tg.seed = seed;
            env.with_amplitude(AmplitudeModel::Telegraph(tg))
        }
        _ => Err(invalid("amplitude", "ensembles need a telegraph amplitude model")),
    }
}

/// Trapezoidal time average of equally spaced profiles.
pub fn time_average(profiles: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = profiles.len();
    if n < 2 {
        return Err(FrontError::InsufficientSnapshots { need: 2, have: n });
    }
    let mut avg = vec![0.0; profiles[0].len()];
    for (k, p) in profiles.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        for (a, v) in avg.iter_mut().zip(p) {
            *a += w * v;
        }
    }
    let scale = 1.0 / (n - 1) as f64;
    avg.iter_mut().for_each(|a| *a *= scale);
    Ok(avg)
}

/// Evolves one realization from `φ` at `-burn_in` and records checkpoints.
pub fn run_realization(
    env: &ReactionEnv,
    phi: &WaveProfile,
    horizon: f64,
    cfg: &EnsembleSettings,
) -> Result<Vec<CheckpointRecord>> {
    let seed = match &env.amplitude {
        AmplitudeModel::Telegraph(tg) => tg.seed,
        _ => 0,
    };
    let theta = env.theta;
    let offs = offsets(cfg.profile_half_width, cfg.solver.dx);
    let mut field = Field::from_fn(cfg.solver.grid(0.0)?, -cfg.burn_in, |x| phi.eval(x));
    let mut stepper = cfg.solver.stepper(env)?;
    evolve(&mut field, env, &mut stepper, 0.0, None, &mut |_| Ok(()))?;
    // positions are measured from the front at t = 0, so that ξ_θ(0) = 0
    let origin = xi_lambda(&field, theta)?;
    let checkpoints = cfg.checkpoint_times(horizon);
    let mut sum = vec![0.0; offs.len()];
    let mut prev = front_centered(&field, theta, &offs)?;
    let mut elapsed = 0.0;
    let mut records = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    evolve(&mut field, env, &mut stepper, horizon, Some(cfg.profile_every), &mut |f| {
        let cur = front_centered(f, theta, &offs)?;
        let h = f.t - elapsed;
        for ((s, a), b) in sum.iter_mut().zip(&prev).zip(&cur) {
            *s += 0.5 * h * (a + b);
        }
        elapsed = f.t;
        prev = cur;
        if next < checkpoints.len() && (f.t - checkpoints[next]).abs() < 1e-9 {
            let xi = xi_lambda(f, theta)? - origin;
            let last = next + 1 == checkpoints.len();
            records.push(CheckpointRecord {
                format_version: FORMAT_VERSION,
                seed,
                t: checkpoints[next],
                xi_theta: xi,
                speed: xi / checkpoints[next],
                psi_star: last.then(|| sum.iter().map(|s| s / f.t).collect()),
                error: None,
            });
            next += 1;
        }
        Ok(())
    })?;
    Ok(records)
}

fn read_store(path: &Path) -> Result<Vec<CheckpointRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted write is dropped
        if let Ok(rec) = serde_json::from_str::<CheckpointRecord>(&line) {
            out.push(rec);
        }
    }
    Ok(out)
}

fn write_records(w: &mut impl Write, records: &[CheckpointRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs every seed not already complete in the store and assembles the report.
pub fn run_ensemble(
    template: &ReactionEnv,
    seeds: &[u64],
    horizon: f64,
    cfg: &EnsembleSettings,
    opts: &EnsembleRun,
) -> Result<EnsembleReport> {
    cfg.validate(horizon)?;
    telegraph_seeded(template, 0)?;
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = seeds.iter().find(|s| !seen.insert(**s)) {
        return Err(invalid("seeds", format!("seed {dup} appears twice")));
    }
    let phi = solve_ignition_wave(&|u| template.f_inf(u), template.theta, tolerances::SHOOT_TOL)?;
    let sup = template.sup_medium();
    let c_sup = solve_ignition_wave(&|u| sup.f_inf(u), template.theta, tolerances::SHOOT_TOL)?.speed;
    let times = cfg.checkpoint_times(horizon);

    let store = opts.store.as_ref().map(|d| d.join("ensemble.jsonl"));
    let mut done: BTreeMap<u64, Vec<CheckpointRecord>> = BTreeMap::new();
    if let Some(p) = &store {
        for rec in read_store(p)? {
            done.entry(rec.seed).or_default().push(rec);
        }
        done.retain(|seed, recs| {
            seeds.contains(seed)
                && (recs.iter().any(|r| r.error.is_some())
                    || (recs.len() == times.len()
                        && recs.iter().zip(&times).all(|(r, t)| (r.t - t).abs() < 1e-9)
                        && recs.last().is_some_and(|r| r.psi_star.is_some())))
        });
        if let Some(dir) = &opts.store {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(p)?);
        for recs in done.values() {
            write_records(&mut w, recs)?;
        }
        w.flush()?;
    }

    let mut todo: Vec<u64> = seeds.iter().copied().filter(|s| !done.contains_key(s)).collect();
    if let Some(k) = opts.stop_after {
        todo.truncate(k);
    }
    let sink = match &store {
        Some(p) => Some(Mutex::new(OpenOptions::new().append(true).open(p)?)),
        None => None,
    };
    let fresh = parallel::map(cfg.execution, &todo, |&seed| {
        let recs = telegraph_seeded(template, seed)
            .and_then(|env| run_realization(&env, &phi, horizon, cfg))
            .unwrap_or_else(|e| {
                vec![CheckpointRecord {
                    format_version: FORMAT_VERSION,
                    seed,
                    t: f64::NAN,
                    xi_theta: f64::NAN,
                    speed: f64::NAN,
                    psi_star: None,
                    error: Some(e.to_string()),
                }]
            });
        if let Some(m) = &sink {
            let mut buf = Vec::new();
            let written = write_records(&mut buf, &recs).is_ok();
            if let (true, Ok(mut f)) = (written, m.lock()) {
                let _ = f.write_all(&buf).and_then(|_| f.flush());
            }
        }
        (seed, recs)
    });
    drop(sink);
    done.extend(fresh);

    let realizations: Vec<Realization> = seeds
        .iter()
        .filter_map(|s| done.get(s).map(|recs| (*s, recs)))
        .map(|(seed, recs)| {
            let failure = recs.iter().find_map(|r| r.error.clone());
            Realization {
                seed,
                failure: failure.clone(),
                checkpoints: if failure.is_some() { Vec::new() } else { recs.clone() },
            }
        })
        .collect();

    // rewrite the store in seed order so the file does not depend on completion order
    if let Some(p) = &store {
        let mut w = BufWriter::new(File::create(p)?);
        for r in &realizations {
            write_records(&mut w, &done[&r.seed])?;
        }
        w.flush()?;
    }

    let ok: Vec<&Realization> = realizations.iter().filter(|r| r.ok()).collect();
    let n_eff = ok.len();
    let mut mean_speed = Vec::with_capacity(times.len());
    let mut variance = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let v: Vec<f64> = ok.iter().map(|r| r.checkpoints[k].speed).collect();
        let m = v.iter().sum::<f64>() / n_eff.max(1) as f64;
        let var = if n_eff > 1 {
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n_eff - 1) as f64
        } else {
            0.0
        };
        mean_speed.push(if n_eff > 0 { m } else { f64::NAN });
        variance.push(var);
    }
    let (lo, hi) = (phi.speed - cfg.speed_tol, c_sup + cfg.speed_tol);
    let within = ok
        .iter()
        .filter_map(|r| r.terminal_speed())
        .all(|c| c >= lo && c <= hi);
    Ok(EnsembleReport {
        format_version: FORMAT_VERSION,
        n: seeds.len(),
        n_effective: n_eff,
        seeds: seeds.to_vec(),
        horizon,
        checkpoint_times: times,
        offsets: offsets(cfg.profile_half_width, cfg.solver.dx),
        complete: realizations.len() == seeds.len(),
        realizations,
        mean_speed,
        variance,
        sandwich: (phi.speed, c_sup),
        speed_tol: cfg.speed_tol,
        within_sandwich: within,
    })
}

/// `Ψ̂*` for one seed, with its limits checked against `2·tail_tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedProfile {
    pub seed: u64,
    pub offsets: Vec<f64>,
    pub values: Vec<f64>,
    pub left_ok: bool,
    pub right_ok: bool,
}

pub fn averaged_profile(report: &EnsembleReport, seed: u64, tail_tol: f64) -> Result<AveragedProfile> {
    let r = report
        .realization(seed)
        .ok_or_else(|| FrontError::MissingArtifact(format!("seed {seed} is not in the report")))?;
    let values = r
        .checkpoints
        .last()
        .and_then(|c| c.psi_star.clone())
        .ok_or(FrontError::InsufficientSnapshots { need: 2, have: 0 })?;
    Ok(AveragedProfile {
        seed,
        offsets: report.offsets.clone(),
        left_ok: values.first().is_some_and(|&v| v >= 1.0 - 2.0 * tail_tol),
        right_ok: values.last().is_some_and(|&v| v <= 2.0 * tail_tol),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction_env::Telegraph;

    fn template(a_min: f64, a_max: f64) -> ReactionEnv {
        ReactionEnv::constant(0.25, 1.0)
            .unwrap()
            .with_amplitude(AmplitudeModel::Telegraph(Telegraph {
                holding_rate: 0.5,
                a_min,
                a_max,
                seed: 0,
            }))
            .unwrap()
    }

    fn small() -> EnsembleSettings {
        EnsembleSettings {
            solver: SolverSettings {
                window: 160.0,
                shift_margin: 30.0,
                ..Default::default()
            },
            burn_in: 10.0,
            checkpoints: 4,
            profile_half_width: 20.0,
            ..Default::default()
        }
    }

    #[test]
    fn trapezoid_average() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]];
        assert_eq!(time_average(&p).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            time_average(&p[..1]),
            Err(FrontError::InsufficientSnapshots { .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = small();
        let frozen = ReactionEnv::constant(0.25, 1.0).unwrap();
        assert!(run_ensemble(&frozen, &[1], 20.0, &cfg, &EnsembleRun::default()).is_err());
        assert!(run_ensemble(&template(0.5, 2.0), &[1, 1], 20.0, &cfg, &EnsembleRun::default()).is_err());
        assert!(run_ensemble(&template(0.5, 2.0), &[1], 20.3, &cfg, &EnsembleRun::default()).is_err());
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let cfg = small();
        let env = template(0.5, 2.0);
        let a = run_ensemble(&env, &[3, 4], 20.0, &cfg, &EnsembleRun::default()).unwrap();
        let b = run_ensemble(&env, &[4, 3], 20.0, &cfg, &EnsembleRun::default()).unwrap();
        for seed in [3, 4] {
            assert_eq!(a.realization(seed), b.realization(seed));
        }
        assert_ne!(a.realizations[0].checkpoints, a.realizations[1].checkpoints);
        assert_eq!(a.n_effective, 2);
    }
}
