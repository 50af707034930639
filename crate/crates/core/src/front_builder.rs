//! Approximating solutions started from shifted wave profiles, their Cauchy
//! diagnostics as the start time recedes, and the period-map fixed point for
//! periodic media.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::interface_track::{interpolate_at, xi_lambda, InterfaceTrace};
use crate::parallel::{self, Execution};
use crate::pde_core::{evolve, lattice_count, Field, Grid, Medium, Stepper, StepperConfig};
use crate::reaction_env::{AmplitudeModel, ReactionEnv};
use crate::tolerances;
use crate::wave_profile::{solve_ignition_wave, WaveProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub dx: f64,
    pub dt: f64,
    pub window: f64,
    pub shift_margin: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dx: tolerances::DX,
            dt: tolerances::DT,
            window: tolerances::WINDOW_WIDTH,
            shift_margin: tolerances::SHIFT_MARGIN,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dx", self.dx),
            ("dt", self.dt),
            ("window", self.window),
            ("shift_margin", self.shift_margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if 2.0 * self.shift_margin >= self.window {
            return Err(invalid("shift_margin", "must be less than half the window"));
        }
        Ok(())
    }

    pub fn grid(&self, center: f64) -> Result<Grid> {
        Grid::centered(center, self.window, self.dx)
    }

    pub fn stepper<M: Medium + ?Sized>(&self, medium: &M) -> Result<Stepper> {
        Ok(Stepper::new(StepperConfig::new(
            self.dt,
            medium.lipschitz(),
            self.shift_margin,
        )?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerSettings {
    /// Levels tracked besides θ.
    pub levels: Vec<f64>,
    /// Envelope exponent parameter; `(c_inf/2)²` when absent.
    pub kappa: Option<f64>,
    /// Radii of the steepness windows.
    pub radii: Vec<f64>,
    /// Trace cadence.
    pub every: f64,
}

impl Default for TrackerSettings {
    fn default() -> Self {
        Self {
            levels: (1..=19).map(|k| k as f64 * 0.05).collect(),
            kappa: None,
            radii: vec![0.0, 1.0, 2.0, 5.0],
            every: 0.1,
        }
    }
}

impl TrackerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(invalid("levels", "every level must lie in (0, 1)"));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) {
                return Err(invalid("kappa", format!("must be positive, got {k}")));
            }
        }
        if self.radii.iter().any(|&m| !(m >= 0.0)) {
            return Err(invalid("radii", "radii must be nonnegative"));
        }
        if !(self.every > 0.0) {
            return Err(invalid("every", "trace cadence must be positive"));
        }
        Ok(())
    }

    pub fn kappa_for(&self, phi: &WaveProfile) -> f64 {
        self.kappa.unwrap_or((0.5 * phi.speed).powi(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxConfig {
    pub solver: SolverSettings,
    pub tracker: TrackerSettings,
    /// Snapshot cadence; a whole multiple of the trace cadence.
    pub snapshot_every: f64,
    /// Snapshots before this time are not kept.
    pub snapshot_from: Option<f64>,
    pub shift_tol: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            tracker: TrackerSettings::default(),
            snapshot_every: 1.0,
            snapshot_from: None,
            shift_tol: tolerances::SHIFT_TOL,
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.tracker.validate()?;
        lattice_count(self.tracker.every, self.solver.dt, "tracker.every")?;
        let ratio = lattice_count(self.snapshot_every, self.tracker.every, "snapshot_every")?;
        if ratio == 0 {
            return Err(invalid("snapshot_every", "must be at least the trace cadence"));
        }
        if !(self.shift_tol > 0.0) {
            return Err(invalid("shift_tol", "must be positive"));
        }
        Ok(())
    }
}

/// `u(t, x; s)` started from `φ(x - x_s)` at time `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximatingRun {
    pub s: f64,
    pub x_s: f64,
    pub t_end: f64,
    pub theta: f64,
    /// `u(0, 0; s)`, or NaN when `t = 0` is outside the run.
    #[serde(deserialize_with = "crate::output::nullable")]
    pub u_origin: f64,
    pub trace: InterfaceTrace,
    pub snapshots: Vec<Field>,
}

impl ApproximatingRun {
    /// Snapshot recorded at time `t`, if any.
    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.t - t).abs() < 1e-6)
    }
}

fn initial_field(phi: &WaveProfile, y: f64, s: f64, solver: &SolverSettings) -> Result<Field> {
    let grid = solver.grid(y)?;
    Ok(Field::from_fn(grid, s, |x| phi.eval(x - y)))
}

/// `(u(0, 0), ξ_θ(0))` for initial data `φ(x - y)` at time `s`.
fn origin_state(env: &ReactionEnv, phi: &WaveProfile, s: f64, y: f64, solver: &SolverSettings) -> Result<(f64, f64)> {
    let mut field = initial_field(phi, y, s, solver)?;
    let mut stepper = solver.stepper(env)?;
    evolve(&mut field, env, &mut stepper, 0.0, None, &mut |_| Ok(()))?;
    Ok((field.at_lattice(0.0), xi_lambda(&field, env.theta)?))
}

/// The shift `x_s` with `u(0, 0; s) = θ` for initial data `φ(x - x_s)` at time `s`.
///
/// `u(0, 0)` is increasing in the shift. Each trial uses the position of the
/// θ-crossing at time 0 to propose the next shift (exact for a translation
/// invariant problem), falling back to bisection whenever the proposal leaves
/// the current bracket.
pub fn find_shift(env: &ReactionEnv, phi: &WaveProfile, s: f64, tol: f64, solver: &SolverSettings) -> Result<f64> {
    if !(s < 0.0) {
        return Err(invalid("s", format!("start time must be negative, got {s}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    solver.validate()?;
    let theta = env.theta;
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut y = phi.speed * s;
    let mut reach = solver.dx;
    for _ in 0..tolerances::BISECTION_CAP {
        let (u0, xi0) = origin_state(env, phi, s, y, solver)?;
        let g = u0 - theta;
        if g.abs() <= tol {
            return Ok(y);
        }
        if g > 0.0 {
            hi = Some(hi.map_or(y, |h: f64| h.min(y)));
        } else {
            lo = Some(lo.map_or(y, |l: f64| l.max(y)));
        }
        let proposal = y - xi0;
        y = match (lo, hi) {
            (Some(l), Some(h)) => {
                if h - l <= f64::EPSILON * h.abs().max(1.0) {
                    return Err(FrontError::NonConvergence {
                        what: "shift search",
                        iterations: tolerances::BISECTION_CAP,
                    });
                }
                if proposal > l && proposal < h {
                    proposal
                } else {
                    0.5 * (l + h)
                }
            }
            (None, Some(h)) => {
                reach *= 2.0;
                if proposal < h { proposal } else { h - reach }
            }
            (Some(l), None) => {
                reach *= 2.0;
                if proposal > l { proposal } else { l + reach }
            }
            (None, None) => unreachable!("one side is always set"),
        };
        if reach > 1e6 {
            break;
        }
    }
    match (lo, hi) {
        (Some(_), Some(_)) => Err(FrontError::NonConvergence {
            what: "shift search",
            iterations: tolerances::BISECTION_CAP,
        }),
        _ => Err(FrontError::BracketFailure {
            lo: lo.unwrap_or(f64::NEG_INFINITY),
            hi: hi.unwrap_or(f64::INFINITY),
        }),
    }
}

/// Finds `x_s` and evolves the approximating solution from `s` to `t_end`.
pub fn run_approximating(env: &ReactionEnv, phi: &WaveProfile, s: f64, t_end: f64, cfg: &ApproxConfig) -> Result<ApproximatingRun> {
    cfg.validate()?;
    if !(t_end >= 0.0) {
        return Err(invalid("t_end", format!("must be nonnegative, got {t_end}")));
    }
    let x_s = find_shift(env, phi, s, cfg.shift_tol, &cfg.solver)?;
    run_from_shift(env, phi, s, x_s, t_end, cfg)
}

/// Evolves `φ(x - x_s)` from `s` to `t_end`, tracing and snapshotting along the way.
pub fn run_from_shift(
    env: &ReactionEnv,
    phi: &WaveProfile,
    s: f64,
    x_s: f64,
    t_end: f64,
    cfg: &ApproxConfig,
) -> Result<ApproximatingRun> {
    cfg.validate()?;
    if t_end < s {
        return Err(invalid("t_end", format!("{t_end} precedes the start {s}")));
    }
    let mut field = initial_field(phi, x_s, s, &cfg.solver)?;
    let mut stepper = cfg.solver.stepper(env)?;
    let tr = &cfg.tracker;
    let mut trace = InterfaceTrace::new(
        env.theta,
        tr.levels.clone(),
        tr.kappa_for(phi),
        tr.radii.clone(),
        cfg.solver.shift_margin,
    );
    let ratio = lattice_count(cfg.snapshot_every, tr.every, "snapshot_every")?;
    let from = cfg.snapshot_from.unwrap_or(f64::NEG_INFINITY);
    let mut snapshots = Vec::new();
    let mut count = 0usize;
    let mut observe = |f: &Field| -> Result<()> {
        trace.record(f, env)?;
        if count % ratio == 0 && f.t >= from - 1e-9 {
            snapshots.push(f.clone());
        }
        count += 1;
        Ok(())
    };
    observe(&field)?;
    let mut u_origin = f64::NAN;
    if s < 0.0 && t_end >= 0.0 {
        evolve(&mut field, env, &mut stepper, 0.0, Some(tr.every), &mut observe)?;
        u_origin = field.at_lattice(0.0);
        evolve(&mut field, env, &mut stepper, t_end, Some(tr.every), &mut observe)?;
    } else {
        evolve(&mut field, env, &mut stepper, t_end, Some(tr.every), &mut observe)?;
    }
    Ok(ApproximatingRun {
        s,
        x_s,
        t_end,
        theta: env.theta,
        u_origin,
        trace,
        snapshots,
    })
}

/// Front-centered samples `u(t, x + ξ_θ(t))` on `offsets`.
pub fn front_centered(field: &Field, theta: f64, offsets: &[f64]) -> Result<Vec<f64>> {
    let xi = xi_lambda(field, theta)?;
    let g = field.grid;
    Ok(offsets
        .iter()
        .map(|&o| {
            let x = xi + o;
            if x <= g.x_left() {
                field.boundary.0
            } else if x >= g.x_right() {
                field.boundary.1
            } else {
                interpolate_at(field, &field.values, x)
            }
        })
        .collect())
}

/// `-L, -L + dx, …, L`.
pub fn offsets(half_width: f64, dx: f64) -> Vec<f64> {
    let k = (half_width / dx).round() as i64;
    (-k..=k).map(|j| j as f64 * dx).collect()
}

/// Sup-norm distance between two fields on the union of their windows, both
/// padded with their boundary data.
pub fn sup_distance(a: &Field, b: &Field) -> f64 {
    let dx = a.grid.dx;
    let lo = a.grid.i_left.min(b.grid.i_left);
    let hi = (a.grid.i_left + a.grid.n as i64).max(b.grid.i_left + b.grid.n as i64);
    (lo..hi)
        .map(|k| {
            let x = k as f64 * dx;
            (a.at_lattice(x) - b.at_lattice(x)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEstimate {
    pub s_list: Vec<f64>,
    pub x_s: Vec<f64>,
    /// `sup |u(·;s_n) - u(·;s_{n+1})|` over the window, one per consecutive pair.
    pub gaps: Vec<f64>,
    pub window: (f64, f64),
    pub times: Vec<f64>,
    /// `ξ_θ` of the deepest run at `times`.
    pub path: Vec<f64>,
    /// Mean speed of the deepest run over the window.
    pub speed: f64,
    pub offsets: Vec<f64>,
    /// Front-centered profiles of the deepest run at the snapshot times.
    pub profile_times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    /// Sup distance between the front-centered profiles of the two deepest runs.
    pub profile_gap: f64,
    /// Largest `|u(t, ξ(t)) - θ|` along the path.
    pub level_residual: f64,
}

/// Runs every start time in `s_list` and measures how far consecutive runs
/// differ on `t ∈ window`.
pub fn build_front(
    env: &ReactionEnv,
    phi: &WaveProfile,
    s_list: &[f64],
    window: (f64, f64),
    cfg: &ApproxConfig,
    cauchy_tol: f64,
    exec: Execution,
) -> Result<FrontEstimate> {
    if s_list.len() < 2 {
        return Err(invalid("s_list", "need at least two start times"));
    }
    if s_list.iter().any(|&s| !(s < 0.0)) || s_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("s_list", "start times must be negative and strictly decreasing"));
    }
    let (ta, tb) = window;
    if !(0.0 <= ta && ta <= tb) {
        return Err(invalid("window", format!("need 0 ≤ start ≤ end, got ({ta}, {tb})")));
    }
    let mut run_cfg = cfg.clone();
    run_cfg.snapshot_from = Some(ta);
    let runs = parallel::map(exec, s_list, |&s| run_approximating(env, phi, s, tb, &run_cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = runs
        .windows(2)
        .map(|pair| {
            pair[0]
                .snapshots
                .iter()
                .filter_map(|a| pair[1].snapshot_at(a.t).map(|b| sup_distance(a, b)))
                .fold(0.0, f64::max)
        })
        .collect();
    let deep = runs.last().expect("two runs");
    let prev = &runs[runs.len() - 2];
    let half = 0.25 * cfg.solver.window;
    let offs = offsets(half, cfg.solver.dx);
    let mut profiles = Vec::new();
    let mut profile_times = Vec::new();
    let mut profile_gap: f64 = 0.0;
    let mut level_residual: f64 = 0.0;
    for f in &deep.snapshots {
        let p = front_centered(f, env.theta, &offs)?;
        if let Some(g) = prev.snapshot_at(f.t) {
            let q = front_centered(g, env.theta, &offs)?;
            profile_gap = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(profile_gap, f64::max);
        }
        let xi = xi_lambda(f, env.theta)?;
        level_residual = level_residual.max((interpolate_at(f, &f.values, xi) - env.theta).abs());
        profile_times.push(f.t);
        profiles.push(p);
    }
    let (times, path): (Vec<f64>, Vec<f64>) = deep
        .trace
        .after(ta)
        .map(|s| (s.t, s.xi_theta))
        .unzip();
    let speed = if times.len() >= 2 {
        (path[path.len() - 1] - path[0]) / (times[times.len() - 1] - times[0])
    } else {
        f64::NAN
    };
    if gaps.last().is_some_and(|&g| g > cauchy_tol) {
        return Err(FrontError::NonCauchy { gaps, tol: cauchy_tol });
    }
    Ok(FrontEstimate {
        s_list: s_list.to_vec(),
        x_s: runs.iter().map(|r| r.x_s).collect(),
        gaps,
        window,
        times,
        path,
        speed,
        offsets: offs,
        profile_times,
        profiles,
        profile_gap,
        level_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicSettings {
    pub solver: SolverSettings,
    /// Periods evolved before the residual is examined.
    pub burn_in_periods: usize,
    pub max_periods: usize,
    pub per_tol: f64,
    /// Bound on the change of the per-period displacement between periods.
    pub drift_tol: f64,
    /// Profiles are compared on `[-half_width, half_width]` around `ξ_θ`.
    pub half_width: f64,
    /// Profiles stored per period once converged.
    pub phases: usize,
}

impl Default for PeriodicSettings {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            burn_in_periods: 3,
            max_periods: 200,
            per_tol: tolerances::PER_TOL,
            drift_tol: 1e-4,
            half_width: 40.0,
            phases: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWave {
    pub period: f64,
    pub speed: f64,
    /// Speed of the traveling wave of the mean medium used as initial data.
    pub mean_speed: f64,
    pub offsets: Vec<f64>,
    /// Front-centered profile at the converged period boundary.
    pub profile: Vec<f64>,
    /// `r_k = ||ψ_{k+1} - ψ_k||_∞`.
    pub residuals: Vec<f64>,
    /// `ξ_θ(t_{k+1}) - ξ_θ(t_k)`.
    pub displacements: Vec<f64>,
    /// Front-centered profiles at `phases` equally spaced times of one extra period.
    pub phase_times: Vec<f64>,
    pub phase_profiles: Vec<Vec<f64>>,
    /// `ξ_θ` at the phase times.
    pub phase_fronts: Vec<f64>,
}

impl PeriodicWave {
    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }

    /// Largest change of the per-period displacement over the last two periods.
    pub fn final_drift(&self) -> f64 {
        let d = &self.displacements;
        if d.len() < 2 {
            return f64::NAN;
        }
        (d[d.len() - 1] - d[d.len() - 2]).abs()
    }

    /// Trapezoidal average over one period of the phase profiles.
    pub fn period_average(&self) -> Vec<f64> {
        let m = self.phase_profiles.len();
        if m == 0 {
            return Vec::new();
        }
        // the phase samples cover [t, t+T); the profile at t+T equals the first sample
        let mut avg = vec![0.0; self.offsets.len()];
        for p in &self.phase_profiles {
            for (a, v) in avg.iter_mut().zip(p) {
                *a += v / m as f64;
            }
        }
        avg
    }
}

/// Evolves the mean-medium wave until the front-centered period map contracts.
pub fn periodic_wave(env: &ReactionEnv, cfg: &PeriodicSettings) -> Result<PeriodicWave> {
    cfg.solver.validate()?;
    let period = env
        .amplitude
        .period()
        .ok_or_else(|| invalid("amplitude", "periodic_wave needs a periodic amplitude model"))?;
    let mean = match &env.amplitude {
        AmplitudeModel::Periodic { mean, .. } => *mean,
        AmplitudeModel::Constant { a } => *a,
        _ => unreachable!("period() is only defined for periodic models"),
    };
    if cfg.phases == 0 {
        return Err(invalid("phases", "need at least one phase sample"));
    }
    let steps_per_period = lattice_count(period, cfg.solver.dt, "period")?;
    let phase_stride = steps_per_period / cfg.phases;
    if phase_stride == 0 || phase_stride * cfg.phases != steps_per_period {
        return Err(invalid("phases", "must divide the number of steps per period"));
    }
    let mean_env = env.frozen(mean)?;
    let phi = solve_ignition_wave(&|u| mean_env.f_inf(u), env.theta, tolerances::SHOOT_TOL)?;
    let mut field = initial_field(&phi, 0.0, 0.0, &cfg.solver)?;
    let mut stepper = cfg.solver.stepper(env)?;
    let offs = offsets(cfg.half_width, cfg.solver.dx);
    let mut prev = front_centered(&field, env.theta, &offs)?;
    let mut prev_xi = xi_lambda(&field, env.theta)?;
    let mut residuals = Vec::new();
    let mut displacements = Vec::new();
    for k in 1..=cfg.max_periods {
        let t_next = k as f64 * period;
        evolve(&mut field, env, &mut stepper, t_next, None, &mut |_| Ok(()))?;
        let cur = front_centered(&field, env.theta, &offs)?;
        let xi = xi_lambda(&field, env.theta)?;
        residuals.push(cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        displacements.push(xi - prev_xi);
        prev = cur;
        prev_xi = xi;
        let converged = k > cfg.burn_in_periods
            && residuals[k - 1] <= cfg.per_tol
            && displacements.len() >= 2
            && (displacements[k - 1] - displacements[k - 2]).abs() <= cfg.drift_tol;
        if converged {
            let mut phase_times = Vec::with_capacity(cfg.phases);
            let mut phase_profiles = Vec::with_capacity(cfg.phases);
            let t0 = field.t;
            let mut phase_fronts = vec![xi];
            phase_times.push(t0);
            phase_profiles.push(prev.clone());
            let every = phase_stride as f64 * cfg.solver.dt;
            let theta = env.theta;
            evolve(&mut field, env, &mut stepper, t0 + period, Some(every), &mut |f| {
                if phase_profiles.len() < cfg.phases {
                    phase_times.push(f.t);
                    phase_profiles.push(front_centered(f, theta, &offs)?);
                    phase_fronts.push(xi_lambda(f, theta)?);
                }
                Ok(())
            })?;
            return Ok(PeriodicWave {
                period,
                speed: displacements[k - 1] / period,
                mean_speed: phi.speed,
                offsets: offs,
                profile: prev,
                residuals,
                displacements,
                phase_times,
                phase_profiles,
                phase_fronts,
            });
        }
    }
    Err(FrontError::NoContraction {
        residual: *residuals.last().unwrap_or(&f64::NAN),
        tol: cfg.per_tol,
        periods: cfg.max_periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave_profile::solve_ignition_wave;

    fn quick() -> ApproxConfig {
        ApproxConfig {
            solver: SolverSettings {
                window: 160.0,
                shift_margin: 20.0,
                ..SolverSettings::default()
            },
            tracker: TrackerSettings {
                every: 0.5,
                ..TrackerSettings::default()
            },
            snapshot_every: 1.0,
            ..ApproxConfig::default()
        }
    }

    #[test]
    fn shift_normalizes_origin_value() {
        let env = ReactionEnv::constant(0.25, 1.0)
            .unwrap()
            .with_amplitude(AmplitudeModel::Periodic {
                mean: 1.0,
                rho: 0.5,
                period: 10.0,
            })
            .unwrap();
        let phi = solve_ignition_wave(&|u| env.f_inf(u), 0.25, 1e-8).unwrap();
        let cfg = quick();
        let mut prev = f64::INFINITY;
        for s in [-10.0, -20.0, -40.0] {
            let run = run_approximating(&env, &phi, s, 2.0, &cfg).unwrap();
            assert!((run.u_origin - 0.25).abs() <= cfg.shift_tol, "{}", run.u_origin);
            assert!(run.x_s < prev);
            // the real medium is faster than the slowest frozen one
            assert!(run.x_s <= phi.speed * s);
            prev = run.x_s;
            assert!(run.snapshots.iter().all(|f| f.is_nonincreasing()));
        }
    }

    #[test]
    fn shift_rejects_bad_input() {
        let env = ReactionEnv::constant(0.25, 1.0).unwrap();
        let phi = solve_ignition_wave(&|u| env.f_inf(u), 0.25, 1e-8).unwrap();
        assert!(find_shift(&env, &phi, 1.0, 1e-8, &SolverSettings::default()).is_err());
        assert!(find_shift(&env, &phi, -1.0, 0.0, &SolverSettings::default()).is_err());
        let mut cfg = quick();
        cfg.snapshot_every = 0.75;
        assert!(run_approximating(&env, &phi, -1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn sup_distance_pads_with_boundary_data() {
        let a = Field::from_fn(Grid::new(-1.0, 0.05, 41).unwrap(), 0.0, |x| if x < 0.0 { 1.0 } else { 0.0 });
        let b = Field::from_fn(Grid::new(-0.5, 0.05, 41).unwrap(), 0.0, |x| if x < 0.0 { 1.0 } else { 0.0 });
        assert_eq!(sup_distance(&a, &b), 0.0);
        let c = Field::from_fn(Grid::new(-0.5, 0.05, 41).unwrap(), 0.0, |x| if x < 0.1 { 1.0 } else { 0.0 });
        assert_eq!(sup_distance(&a, &c), 1.0);
    }

    #[test]
    fn offsets_are_symmetric() {
        let o = offsets(1.0, 0.25);
        assert_eq!(o, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
