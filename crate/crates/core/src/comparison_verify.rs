//! Executable versions of the comparison arguments: each check evaluates an
//! inequality on a recorded run and reports its worst signed margin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::front_builder::ApproximatingRun;
use crate::interface_track::{
    envelope_speed_margin, estimate_delay, fd_speed, interpolate_at, lower_propagation, median, width, xi_lambda,
    InterfaceTrace,
};
use crate::pde_core::Field;
use crate::reaction_env::ReactionEnv;
use crate::tolerances::U_FLOOR;
use crate::wave_profile::{kappa0, WaveProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Monotone,
    SuperExponential,
    LowerTranslate,
    OmegaPair,
    OmegaSandwich,
    EnvelopeSpeed,
    Width,
    Steepness,
    SpeedFormula,
    DecayBehind,
    DecayAheadPointwise,
    DecayAheadRate,
    Sliding,
    LowerPropagation,
    BistablePush,
}

impl CheckName {
    pub const ALL: [CheckName; 15] = [
        CheckName::Monotone,
        CheckName::SuperExponential,
        CheckName::LowerTranslate,
        CheckName::OmegaPair,
        CheckName::OmegaSandwich,
        CheckName::EnvelopeSpeed,
        CheckName::Width,
        CheckName::Steepness,
        CheckName::SpeedFormula,
        CheckName::DecayBehind,
        CheckName::DecayAheadPointwise,
        CheckName::DecayAheadRate,
        CheckName::Sliding,
        CheckName::LowerPropagation,
        CheckName::BistablePush,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Monotone => "monotone",
            CheckName::SuperExponential => "super_exponential",
            CheckName::LowerTranslate => "lower_translate",
            CheckName::OmegaPair => "omega_pair",
            CheckName::OmegaSandwich => "omega_sandwich",
            CheckName::EnvelopeSpeed => "envelope_speed",
            CheckName::Width => "width",
            CheckName::Steepness => "steepness",
            CheckName::SpeedFormula => "speed_formula",
            CheckName::DecayBehind => "decay_behind",
            CheckName::DecayAheadPointwise => "decay_ahead_pointwise",
            CheckName::DecayAheadRate => "decay_ahead_rate",
            CheckName::Sliding => "sliding",
            CheckName::LowerPropagation => "lower_propagation",
            CheckName::BistablePush => "bistable_push",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckName,
    pub scenario: String,
    pub passed: bool,
    /// Signed distance to the asserted inequality; negative means violated.
    pub worst_margin: f64,
    /// `(t, x)` of the worst margin.
    pub location: (f64, f64),
    pub tolerance: f64,
    /// Constants and estimates the check used or produced.
    pub witnesses: BTreeMap<String, f64>,
    pub note: Option<String>,
}

impl CheckReport {
    fn new(check: CheckName, scenario: &str, worst: Worst, tolerance: f64) -> Self {
        Self {
            check,
            scenario: scenario.to_string(),
            passed: worst.margin >= -tolerance,
            worst_margin: worst.margin,
            location: (worst.t, worst.x),
            tolerance,
            witnesses: BTreeMap::new(),
            note: None,
        }
    }

    /// Report for a check that could not be evaluated.
    pub fn errored(check: CheckName, scenario: &str, err: &FrontError) -> Self {
        Self {
            check,
            scenario: scenario.to_string(),
            passed: false,
            worst_margin: f64::NEG_INFINITY,
            location: (f64::NAN, f64::NAN),
            tolerance: 0.0,
            witnesses: BTreeMap::new(),
            note: Some(err.to_string()),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.witnesses.insert(key.to_string(), value);
        self
    }

    pub fn witness(&self, key: &str) -> Option<f64> {
        self.witnesses.get(key).copied()
    }
}

/// Running minimum of a margin with its location.
#[derive(Debug, Clone, Copy)]
struct Worst {
    margin: f64,
    t: f64,
    x: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            t: f64::NAN,
            x: f64::NAN,
        }
    }

    #[inline]
    fn update(&mut self, margin: f64, t: f64, x: f64) {
        if margin < self.margin || (self.margin.is_nan() && !margin.is_nan()) {
            *self = Self { margin, t, x };
        }
    }
}

/// Every snapshot is nonincreasing, and strictly decreasing by at least
/// `strict` wherever `u ∈ [0.01, 0.99]`.
pub fn check_monotone(run: &ApproximatingRun, scenario: &str, strict: f64) -> CheckReport {
    let mut worst = Worst::new();
    for f in &run.snapshots {
        for i in 0..f.values.len() - 1 {
            let (a, b) = (f.values[i], f.values[i + 1]);
            let drop = a - b;
            let inside = (0.01..=0.99).contains(&a) || (0.01..=0.99).contains(&b);
            let m = if inside { drop - strict } else { drop };
            worst.update(m, f.t, f.grid.x(i));
        }
    }
    CheckReport::new(CheckName::Monotone, scenario, worst, 0.0).with("strict_decrease", strict)
}

/// `(c, y0, M)` for the exponential super-solution: `M = sup f(t,u)/u`,
/// `c = c_inf + M/c_inf` and `y0 = max_x (x + ln φ(x)/c_inf)`.
pub fn super_exponential_params(env: &ReactionEnv, phi: &WaveProfile) -> (f64, f64, f64) {
    let m = kappa0(&|u| env.f_sup(u));
    let ci = phi.speed;
    let y0 = phi
        .xs()
        .zip(&phi.phi)
        .map(|(x, &p)| x + p.ln() / ci)
        .fold(f64::NEG_INFINITY, f64::max);
    (ci + m / ci, y0, m)
}

/// `u(t,x;s) ≤ exp(-c_inf (x - x_s - y0 - c (t - s)))` at every recorded node.
pub fn check_super_exponential(
    run: &ApproximatingRun,
    scenario: &str,
    c_inf: f64,
    c: f64,
    y0: f64,
    tol: f64,
) -> CheckReport {
    let mut worst = Worst::new();
    for f in &run.snapshots {
        let shift = run.x_s + y0 + c * (f.t - run.s);
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.grid.x(i);
            let bound = (-c_inf * (x - shift)).exp();
            worst.update(bound - u, f.t, x);
        }
    }
    CheckReport::new(CheckName::SuperExponential, scenario, worst, tol)
        .with("c_inf", c_inf)
        .with("c", c)
        .with("y0", y0)
        .with("lemma_condition", c_inf * (c - c_inf))
}

/// `u(t,x;s) ≥ φ(x - x_s - c_inf (t - s))` at every recorded node; the
/// interface consequence `ξ_θ ≥ x_s + c_inf (t - s)` is reported as a witness.
///
/// `allowance` widens the tolerance where the bound is attained and the
/// solver's own speed error shows up as a violation.
pub fn check_lower_translate(
    run: &ApproximatingRun,
    scenario: &str,
    phi: &WaveProfile,
    tol: f64,
    allowance: f64,
) -> CheckReport {
    let ci = phi.speed;
    let mut worst = Worst::new();
    for f in &run.snapshots {
        let shift = run.x_s + ci * (f.t - run.s);
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.grid.x(i);
            worst.update(u - phi.eval(x - shift), f.t, x);
        }
    }
    let interface = run
        .trace
        .samples
        .iter()
        .map(|s| s.xi_theta - run.x_s - ci * (s.t - run.s))
        .fold(f64::INFINITY, f64::min);
    CheckReport::new(CheckName::LowerTranslate, scenario, worst, tol + allowance)
        .with("c_inf", ci)
        .with("interface_margin", interface)
        .with("value_tol", tol)
        .with("lag_allowance", allowance)
}

/// Largest distance by which `ξ_θ` trails `x_s + c_inf (t - s)`.
pub fn interface_lag(run: &ApproximatingRun, c_inf: f64) -> f64 {
    run.trace
        .samples
        .iter()
        .map(|p| run.x_s + c_inf * (p.t - run.s) - p.xi_theta)
        .fold(0.0, f64::max)
}

/// Solver-error allowance for the lower translate in a frozen medium, where the
/// bound is an equality: the value change of `φ` over the measured interface
/// lag, plus the distance of the discrete front shape from `φ`. The shape term
/// is the smallest front-centered distance over the second half of the
/// snapshots, where the discrete shape has settled.
pub fn lag_allowance(run: &ApproximatingRun, phi: &WaveProfile) -> Result<f64> {
    let lag = interface_lag(run, phi.speed);
    let slope = phi.dphi.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let n = run.snapshots.len();
    let mut shape = if n == 0 { 0.0 } else { f64::INFINITY };
    for f in &run.snapshots[n / 2..] {
        let xi = xi_lambda(f, run.theta)?;
        let d = f
            .values
            .iter()
            .enumerate()
            .map(|(i, &u)| (u - phi.eval(f.grid.x(i) - xi)).abs())
            .fold(0.0, f64::max);
        shape = shape.min(d);
    }
    Ok(lag * slope + shape)
}

/// Space-time grid on which the ω± inequalities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGrid {
    /// Moving coordinate `z` ranges over `[-z_half, z_half]`.
    pub z_half: f64,
    pub dz: f64,
    pub dt: f64,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        Self {
            z_half: 40.0,
            dz: 0.05,
            dt: 0.1,
        }
    }
}

/// `u^o(t; t0, a)` on `t0, t0 + dt, …, t0 + horizon`.
fn ode_path(env: &ReactionEnv, t0: f64, a0: f64, horizon: f64, dt: f64) -> Result<Vec<(f64, f64)>> {
    let n = (horizon / dt).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut v = a0;
    out.push((t0, v));
    for k in 1..=n {
        let (ta, tb) = (t0 + (k - 1) as f64 * dt, t0 + k as f64 * dt);
        v = env.ode_flow(ta, v, tb)?;
        out.push((tb, v));
    }
    Ok(out)
}

/// Extremes of the ω± residuals for a trial speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaResiduals {
    /// `min (ω+)_t - (ω+)_xx - f(t, ω+)`, required `≥ 0`.
    pub plus_min: f64,
    pub plus_at: (f64, f64),
    /// `max (ω-)_t - (ω-)_xx - f(t, ω-)`, required `≤ 0`.
    pub minus_max: f64,
    pub minus_at: (f64, f64),
}

/// Residuals of ω± in the moving coordinate `z`; `φ''` is taken from the
/// profile equation `φ'' = -c_inf φ' - f_inf(φ)`.
pub fn omega_residuals(
    env: &ReactionEnv,
    phi: &WaveProfile,
    t0: f64,
    delta: f64,
    c: f64,
    horizon: f64,
    grid: OmegaGrid,
) -> Result<OmegaResiduals> {
    let th = env.theta;
    if !(delta > 0.0 && delta < 1.0 - th) {
        return Err(invalid("delta", format!("must lie in (0, 1 - θ), got {delta}")));
    }
    let ci = phi.speed;
    let up = ode_path(env, t0, 1.0 + delta, horizon, grid.dt)?;
    let um = ode_path(env, t0, th + delta, horizon, grid.dt)?;
    let nz = (grid.z_half / grid.dz).round() as i64;
    let profile: Vec<(f64, f64, f64)> = (-nz..=nz)
        .map(|j| {
            let z = j as f64 * grid.dz;
            (z, phi.eval(z), phi.derivative(z))
        })
        .collect();
    let mut out = OmegaResiduals {
        plus_min: f64::INFINITY,
        plus_at: (f64::NAN, f64::NAN),
        minus_max: f64::NEG_INFINITY,
        minus_at: (f64::NAN, f64::NAN),
    };
    for (&(t, p), &(_, m)) in up.iter().zip(&um) {
        let fp = env.eval_f(t, p);
        let fm = env.eval_f(t, m);
        for &(z, ph, dph) in &profile {
            let fi = env.f_inf(ph);
            let w_plus = (th - delta) * (1.0 - ph) + p * ph;
            let r_plus = (c - ci) * (th - delta - p) * dph + (p - th + delta) * fi + fp * ph
                - env.eval_f(t, w_plus);
            if r_plus < out.plus_min {
                out.plus_min = r_plus;
                out.plus_at = (t, z);
            }
            let w_minus = -delta * (1.0 - ph) + m * ph;
            let r_minus = (c + ci) * (delta + m) * dph + (delta + m) * fi + fm * ph - env.eval_f(t, w_minus);
            if r_minus > out.minus_max {
                out.minus_max = r_minus;
                out.minus_at = (t, z);
            }
        }
    }
    Ok(out)
}

/// Doubles `C` from `c_inf` until both ω± inequalities hold on the grid.
#[allow(clippy::too_many_arguments)]
pub fn check_omega_pair(
    env: &ReactionEnv,
    phi: &WaveProfile,
    scenario: &str,
    t0: f64,
    delta: f64,
    horizon: f64,
    grid: OmegaGrid,
    c_cap: f64,
) -> Result<CheckReport> {
    let tol = 1e-12;
    let mut c = phi.speed;
    let mut tried = 0.0;
    while c <= c_cap {
        let r = omega_residuals(env, phi, t0, delta, c, horizon, grid)?;
        if r.plus_min >= -tol && r.minus_max <= tol {
            let (margin, at) = if r.plus_min <= -r.minus_max {
                (r.plus_min, r.plus_at)
            } else {
                (-r.minus_max, r.minus_at)
            };
            let worst = Worst {
                margin,
                t: at.0,
                x: at.1,
            };
            return Ok(CheckReport::new(CheckName::OmegaPair, scenario, worst, tol)
                .with("C", c)
                .with("C_rejected", tried)
                .with("delta", delta)
                .with("t0", t0)
                .with("horizon", horizon));
        }
        tried = c;
        c *= 2.0;
    }
    Err(FrontError::NoAdmissibleC { cap: c_cap })
}

/// Evaluates the ω± inequalities for one fixed speed; used to exhibit failures.
pub fn check_omega_fixed(
    env: &ReactionEnv,
    phi: &WaveProfile,
    scenario: &str,
    t0: f64,
    delta: f64,
    c: f64,
    horizon: f64,
    grid: OmegaGrid,
) -> Result<CheckReport> {
    let r = omega_residuals(env, phi, t0, delta, c, horizon, grid)?;
    let (margin, at) = if r.plus_min <= -r.minus_max {
        (r.plus_min, r.plus_at)
    } else {
        (-r.minus_max, r.minus_at)
    };
    Ok(CheckReport::new(
        CheckName::OmegaPair,
        scenario,
        Worst {
            margin,
            t: at.0,
            x: at.1,
        },
        1e-12,
    )
    .with("C", c)
    .with("delta", delta))
}

/// Smallest shift `a` with `lhs(x; a) ≥ rhs(x)` on a field, for `lhs` increasing in `a`.
fn bisect_shift(start: f64, ok: impl Fn(f64) -> bool, increasing: bool) -> f64 {
    // `ok` is monotone: true for a ≥ a* when increasing, for a ≤ a* otherwise
    let dir = if increasing { 1.0 } else { -1.0 };
    let mut bad = start;
    let mut good = start;
    let mut step = 1.0;
    while !ok(good) {
        bad = good;
        good += dir * step;
        step *= 2.0;
        if step > 1e6 {
            return f64::NAN;
        }
    }
    if good == start {
        let mut step = 1.0;
        bad = start - dir * step;
        while ok(bad) {
            good = bad;
            step *= 2.0;
            bad = start - dir * step;
            if step > 1e6 {
                return good;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (bad + good);
        if mid == bad || mid == good {
            break;
        }
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Places ω± around the snapshot at `t0` and checks that later snapshots stay between them.
#[allow(clippy::too_many_arguments)]
pub fn check_omega_sandwich(
    run: &ApproximatingRun,
    env: &ReactionEnv,
    phi: &WaveProfile,
    scenario: &str,
    t0: f64,
    delta: f64,
    c: f64,
    tol: f64,
) -> Result<CheckReport> {
    let th = env.theta;
    let start = run
        .snapshots
        .iter()
        .find(|f| f.t >= t0 - 1e-9)
        .ok_or(FrontError::InsufficientSnapshots { need: 1, have: 0 })?;
    let t0 = start.t;
    let xi = xi_lambda(start, th)?;
    let nodes: Vec<(f64, f64)> = start
        .values
        .iter()
        .enumerate()
        .map(|(i, &u)| (start.grid.x(i), u))
        .collect();
    let upper = |a: f64| {
        nodes
            .iter()
            .all(|&(x, u)| (th - delta) * (1.0 - phi.eval(x - a)) + (1.0 + delta) * phi.eval(x - a) >= u)
    };
    let lower = |b: f64| {
        nodes
            .iter()
            .all(|&(x, u)| -delta * (1.0 - phi.eval(x - b)) + (th + delta) * phi.eval(x - b) <= u)
    };
    let a = bisect_shift(xi, upper, true);
    let b = bisect_shift(xi, lower, false);
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("omega_sandwich", "could not place ω± around the initial snapshot"));
    }
    let mut worst = Worst::new();
    let mut prev = (t0, 1.0 + delta, th + delta);
    for f in run.snapshots.iter().filter(|f| f.t >= t0 - 1e-9) {
        let up = env.ode_flow(prev.0, prev.1, f.t)?;
        let um = env.ode_flow(prev.0, prev.2, f.t)?;
        prev = (f.t, up, um);
        let dt = f.t - t0;
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.grid.x(i);
            let pp = phi.eval(x - a - c * dt);
            let pm = phi.eval(x - b + c * dt);
            let w_plus = (th - delta) * (1.0 - pp) + up * pp;
            let w_minus = -delta * (1.0 - pm) + um * pm;
            worst.update((w_plus - u).min(u - w_minus), f.t, x);
        }
    }
    Ok(CheckReport::new(CheckName::OmegaSandwich, scenario, worst, tol)
        .with("C", c)
        .with("delta", delta)
        .with("t0", t0)
        .with("upper_shift", a)
        .with("lower_shift", b))
}

/// `ξ(t) - ξ(t₀) ≤ c_{κ₀} (t - t₀)` along the envelope interface.
pub fn check_envelope_speed(trace: &InterfaceTrace, scenario: &str, c_kappa0: f64, tol: f64) -> CheckReport {
    let (margin, t) = envelope_speed_margin(trace, c_kappa0);
    CheckReport::new(
        CheckName::EnvelopeSpeed,
        scenario,
        Worst {
            margin,
            t,
            x: f64::NAN,
        },
        tol,
    )
    .with("c_kappa0", c_kappa0)
    .with("kappa", trace.kappa)
}

/// `min{u > 0 : f_sup(u) = κu}`, or NaN when `f_sup(u) < κu` on all of `(0, 1]`.
pub fn lambda_star(env: &ReactionEnv, kappa: f64) -> f64 {
    let n = 100_000;
    let h = |u: f64| env.f_sup(u) - kappa * u;
    let mut prev = 0.0;
    for k in 1..=n {
        let u = k as f64 / n as f64;
        if h(u) >= 0.0 {
            let (mut lo, mut hi) = (prev, u);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if h(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        prev = u;
    }
    f64::NAN
}

/// Width `|ξ_{l1} - ξ_{l2}|` late in the run stays within `ratio` of its post-delay level.
pub fn check_width(
    trace: &InterfaceTrace,
    scenario: &str,
    (l1, l2): (f64, f64),
    t_delay: f64,
    split: f64,
    ratio: f64,
) -> Result<CheckReport> {
    let stats = width(trace, l1, l2, t_delay)?;
    let end = *stats.times.last().unwrap_or(&split);
    let early = stats.max_over(t_delay, split);
    let late = stats.max_over(split, end);
    let worst = Worst {
        margin: ratio * early - late,
        t: split,
        x: f64::NAN,
    };
    Ok(CheckReport::new(CheckName::Width, scenario, worst, 0.0)
        .with("early_max", early)
        .with("late_max", late)
        .with("median", stats.median)
        .with("t_delay", t_delay)
        .with("split", split))
}

/// Post-delay `-u_x(ξ_θ)` stays above `frac` of its median and above `ĉθ(1 - slack)`.
pub fn check_steepness(
    trace: &InterfaceTrace,
    scenario: &str,
    t_delay: f64,
    c_hat: f64,
    frac: f64,
    slack: f64,
) -> CheckReport {
    let post: Vec<(f64, f64)> = trace.after(t_delay).map(|s| (s.t, -s.slope_theta)).collect();
    let med = median(&post.iter().map(|p| p.1).collect::<Vec<_>>());
    let floor = c_hat * trace.theta * (1.0 - slack);
    let mut worst = Worst::new();
    for &(t, v) in &post {
        worst.update((v / med - frac).min(v / floor - 1.0), t, f64::NAN);
    }
    let inf = post.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    CheckReport::new(CheckName::Steepness, scenario, worst, 0.0)
        .with("infimum", inf)
        .with("median", med)
        .with("slope_floor", floor)
        .with("t_delay", t_delay)
}

/// `|-u_t/u_x - dξ_θ/dt| ≤ tol` post-delay, the derivative taken by centered
/// differences. Stencils containing one of `kinks` (switches of a piecewise
/// constant amplitude, where `ξ_θ` has no derivative) are skipped.
pub fn check_speed_formula(
    trace: &InterfaceTrace,
    scenario: &str,
    t_delay: f64,
    tol: f64,
    kinks: &[f64],
) -> CheckReport {
    let fd = trace.speed_fd();
    let n = fd.len();
    let s = &trace.samples;
    let mut worst = Worst::new();
    let mut skipped = 0;
    for i in 1..n.saturating_sub(1) {
        if s[i].t < t_delay {
            continue;
        }
        let (a, b) = (s[i - 1].t, s[i + 1].t);
        if kinks.iter().any(|&k| k >= a && k <= b) {
            skipped += 1;
            continue;
        }
        worst.update(-(s[i].speed_formula - fd[i]).abs(), s[i].t, s[i].xi_theta);
    }
    CheckReport::new(CheckName::SpeedFormula, scenario, worst, tol)
        .with("degenerate_events", trace.degenerate_events as f64)
        .with("t_delay", t_delay)
        .with("skipped_at_kinks", skipped as f64)
}

/// `(λ₀, β₀)` among `candidates ∩ (θ, 1)` maximizing `β₀(1 - λ₀)`, where
/// `β₀ = a_min · min_{u ∈ [λ₀, 1)} g(u)/(1 - u)` by a grid scan.
pub fn behind_params(env: &ReactionEnv, candidates: &[f64]) -> Result<(f64, f64)> {
    let th = env.theta;
    candidates
        .iter()
        .filter(|&&l| l > th && l < 1.0)
        .map(|&l| {
            let n = 2000;
            let beta = (0..n)
                .map(|k| l + (1.0 - l) * k as f64 / n as f64)
                .map(|u| env.f_inf(u) / (1.0 - u))
                .fold(f64::INFINITY, f64::min);
            (l, beta)
        })
        .fold(None, |best: Option<(f64, f64)>, (l, b)| match best {
            Some((bl, bb)) if bb * (1.0 - bl) >= b * (1.0 - l) => Some((bl, bb)),
            _ => Some((l, b)),
        })
        .ok_or_else(|| invalid("levels", "no tracked level lies in (θ, 1)"))
}

/// Positive root of `r² + C r - β₀ = 0`.
pub fn behind_rate(c_lambda: f64, beta0: f64) -> f64 {
    0.5 * (-c_lambda + (c_lambda * c_lambda + 4.0 * beta0).sqrt())
}

/// `u(t, x + ξ_θ) ≥ 1 - (1 - λ₀)[e^{-β₀(t-s)} + e^{r(x + C)}]` for `x ≤ -C`,
/// with `C` the measured post-delay width `ξ_θ - ξ_λ₀` and `r` from the
/// measured top speed of `ξ_λ₀`.
pub fn check_decay_behind(
    run: &ApproximatingRun,
    scenario: &str,
    lambda0: f64,
    beta0: f64,
    t_delay: f64,
    tol: f64,
) -> Result<CheckReport> {
    let path = run
        .trace
        .path(lambda0)
        .ok_or_else(|| invalid("lambda0", format!("level {lambda0} is not tracked")))?;
    let times = run.trace.times();
    let speeds = fd_speed(&times, &path);
    let mut c_width: f64 = 0.0;
    let mut c_lambda = f64::NEG_INFINITY;
    for (k, s) in run.trace.samples.iter().enumerate() {
        if s.t >= t_delay - 1e-9 {
            c_width = c_width.max(s.xi_theta - path[k]);
            c_lambda = c_lambda.max(speeds[k]);
        }
    }
    let r = behind_rate(c_lambda.max(0.0), beta0);
    let mut worst = Worst::new();
    for f in run.snapshots.iter().filter(|f| f.t >= t_delay - 1e-9) {
        let xi = xi_lambda(f, run.theta)?;
        let time_part = (-beta0 * (f.t - run.s)).exp();
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.grid.x(i) - xi;
            if x > -c_width {
                break;
            }
            let bound = 1.0 - (1.0 - lambda0) * (time_part + (r * (x + c_width)).exp());
            worst.update(u - bound, f.t, f.grid.x(i));
        }
    }
    Ok(CheckReport::new(CheckName::DecayBehind, scenario, worst, tol)
        .with("lambda0", lambda0)
        .with("beta0", beta0)
        .with("r", r)
        .with("C_lambda0", c_lambda)
        .with("width", c_width)
        .with("t_delay", t_delay))
}

/// Rate of `ln u` against `x - ξ_θ` fitted by least squares on `[0, span]`.
pub fn fitted_rate(field: &Field, theta: f64, span: f64) -> Result<f64> {
    let xi = xi_lambda(field, theta)?;
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &u) in field.values.iter().enumerate() {
        let x = field.grid.x(i) - xi;
        if x < 0.0 || x > span || u <= U_FLOOR {
            continue;
        }
        let y = u.ln();
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if n < 3.0 {
        return Err(FrontError::AllBelowFloor { floor: U_FLOOR });
    }
    Ok(-(n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// `inf -ln(u/θ)/x` over nodes ahead of `ξ_θ` (farther than half a cell) above the floor.
pub fn ahead_rate(field: &Field, theta: f64) -> Result<f64> {
    let xi = xi_lambda(field, theta)?;
    let half = 0.5 * field.grid.dx;
    Ok(field
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, &u)| {
            let x = field.grid.x(i) - xi;
            (x > half && u > U_FLOOR).then(|| -(u / theta).ln() / x)
        })
        .fold(f64::INFINITY, f64::min))
}

/// `ĉ` calibrated on the first quarter of the post-delay snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AheadCalibration {
    pub c_hat: f64,
    pub t_delay: f64,
    /// Snapshots with `t < calibrated_until` were used for ĉ.
    pub calibrated_until: f64,
}

pub fn calibrate_ahead(run: &ApproximatingRun, t_delay: f64) -> Result<AheadCalibration> {
    let post: Vec<&Field> = run.snapshots.iter().filter(|f| f.t >= t_delay - 1e-9).collect();
    if post.len() < 4 {
        return Err(FrontError::InsufficientSnapshots {
            need: 4,
            have: post.len(),
        });
    }
    let q = post.len().div_ceil(4);
    let mut c_hat = f64::INFINITY;
    for f in &post[..q] {
        c_hat = c_hat.min(ahead_rate(f, run.theta)?);
    }
    Ok(AheadCalibration {
        c_hat,
        t_delay,
        calibrated_until: post[q].t,
    })
}

/// `u(t, x + ξ_θ) ≤ θ e^{-ĉx}(1 + tol)` for `x ≥ 0` on the snapshots after calibration.
/// The margin is relative: `1 - u / (θ e^{-ĉx})`.
pub fn check_decay_ahead_pointwise(
    run: &ApproximatingRun,
    scenario: &str,
    cal: AheadCalibration,
    tol: f64,
) -> Result<CheckReport> {
    let th = run.theta;
    let mut worst = Worst::new();
    for f in run.snapshots.iter().filter(|f| f.t >= cal.calibrated_until - 1e-9) {
        let xi = xi_lambda(f, th)?;
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.grid.x(i) - xi;
            if x < 0.0 || u <= U_FLOOR {
                continue;
            }
            worst.update(1.0 - u / (th * (-cal.c_hat * x).exp()), f.t, f.grid.x(i));
        }
    }
    Ok(CheckReport::new(CheckName::DecayAheadPointwise, scenario, worst, tol)
        .with("c_hat", cal.c_hat)
        .with("t_delay", cal.t_delay)
        .with("calibrated_until", cal.calibrated_until))
}

/// Fitted decay rates on `[ξ_θ, ξ_θ + span]` stay at least `frac·ĉ` after the delay.
pub fn check_decay_ahead_rate(
    run: &ApproximatingRun,
    scenario: &str,
    cal: AheadCalibration,
    span: f64,
    frac: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new();
    let mut rates = Vec::new();
    for f in run.snapshots.iter().filter(|f| f.t >= cal.t_delay - 1e-9) {
        let rate = fitted_rate(f, run.theta, span)?;
        rates.push(rate);
        worst.update(rate / cal.c_hat - frac, f.t, f64::NAN);
    }
    let inf = rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CheckReport::new(CheckName::DecayAheadRate, scenario, worst, 0.0)
        .with("c_hat", cal.c_hat)
        .with("fitted_infimum", inf)
        .with("fitted_median", median(&rates))
        .with("frac", frac))
}

/// First-hitting construction of the sliding envelope.
///
/// With `h_D` the largest advance of `ξ_θ` over the delay, the line
/// `η(t) = x_s + h_D + x_D + c (t - s)` starts ahead of the interface; the
/// interface, which moves at least at speed `c_inf`, must catch it at some
/// `s + T_s` with `T_D ≤ T_s ≤ (h_D + x_D)/(c_inf - c)`.
///
/// With `allow_lag` the tolerance grows by the time the solver front needs to
/// make up its measured lag behind `x_s + c_inf (t - s)`.
pub fn check_sliding(
    run: &ApproximatingRun,
    scenario: &str,
    c_inf: f64,
    t_delay: f64,
    x_d: f64,
    tol: f64,
    allow_lag: bool,
) -> CheckReport {
    let th = run.theta;
    let s0 = run.s;
    let h_d = run
        .trace
        .samples
        .iter()
        .filter(|p| p.t <= t_delay + 1e-9)
        .map(|p| p.xi_theta - run.x_s)
        .fold(0.0, f64::max);
    let c = (0.5 * c_inf).min(0.5 * (1.0 / th).ln() / (h_d + x_d));
    let theta_star = th * (c * (h_d + x_d)).exp();
    let eta0 = run.x_s + h_d + x_d;
    let hit = run
        .trace
        .samples
        .iter()
        .find(|p| p.xi_theta >= eta0 + c * (p.t - s0))
        .map(|p| p.t - s0);
    let t_d = t_delay - s0;
    let bound = (h_d + x_d) / (c_inf - c);
    // a solver front trailing x_s + c_inf (t - s) reaches the line later by lag / (c_inf - c)
    let t_hit = hit.map_or(f64::INFINITY, |ts| s0 + ts);
    let lag = run
        .trace
        .samples
        .iter()
        .take_while(|p| p.t <= t_hit)
        .map(|p| run.x_s + c_inf * (p.t - s0) - p.xi_theta)
        .fold(0.0, f64::max);
    let lag_time = if allow_lag { lag / (c_inf - c) } else { 0.0 };
    let tol = tol + lag_time;
    let (margin, t) = match hit {
        Some(ts) => ((ts - t_d).min(bound - ts), s0 + ts),
        None => (f64::NEG_INFINITY, f64::NAN),
    };
    let mut rep = CheckReport::new(
        CheckName::Sliding,
        scenario,
        Worst {
            margin,
            t,
            x: f64::NAN,
        },
        tol,
    )
    .with("c", c)
    .with("theta_star", theta_star)
    .with("h_D", h_d)
    .with("x_D", x_d)
    .with("T_D", t_d)
    .with("bound", bound)
    .with("lag_time", lag_time);
    if let Some(ts) = hit {
        rep = rep.with("T_s", ts);
    } else {
        rep.note = Some("the interface never reached the sliding line".into());
    }
    rep
}

/// `ξ_θ(t + T*) - ξ_θ(t) ≥ h*` on the second half of the post-delay trace, with
/// `h*` half the smallest advance seen on the first half.
pub fn check_lower_propagation(trace: &InterfaceTrace, scenario: &str, t_delay: f64, t_star: f64) -> CheckReport {
    let end = trace.samples.last().map_or(t_delay, |s| s.t);
    let mid = 0.5 * (t_delay + end);
    let first = InterfaceTrace {
        samples: trace
            .samples
            .iter()
            .filter(|s| s.t <= mid + t_star + 1e-9)
            .cloned()
            .collect(),
        ..trace.clone()
    };
    let h_star = 0.5 * lower_propagation(&first, t_delay, t_star);
    let late = lower_propagation(trace, mid, t_star);
    CheckReport::new(
        CheckName::LowerPropagation,
        scenario,
        Worst {
            margin: late - h_star,
            t: mid,
            x: f64::NAN,
        },
        0.0,
    )
    .with("T_star", t_star)
    .with("h_star", h_star)
    .with("late_min", late)
}

/// Smallest delay `t̂ ≥ 0` with `ξ_λ(t) - ξ_λ(t₀) ≥ (c_B - ε)(t - t₀ - t̂)` for
/// all recorded `t ≥ t₀`, where `ε = eps_frac·c_B`.
pub fn bistable_delay(trace: &InterfaceTrace, c_b: f64, level: f64, t0: f64, eps_frac: f64) -> Result<f64> {
    let path = trace
        .path(level)
        .ok_or_else(|| invalid("lambda", format!("level {level} is not tracked")))?;
    let k0 = trace
        .samples
        .iter()
        .position(|s| s.t >= t0 - 1e-9)
        .ok_or(FrontError::InsufficientSnapshots { need: 1, have: 0 })?;
    let v = c_b * (1.0 - eps_frac);
    let base = path[k0];
    let t_base = trace.samples[k0].t;
    Ok(trace.samples[k0..]
        .iter()
        .zip(&path[k0..])
        .map(|(s, &x)| s.t - t_base - (x - base) / v)
        .fold(0.0, f64::max))
}

pub fn check_bistable_push(
    trace: &InterfaceTrace,
    scenario: &str,
    c_b: f64,
    level: f64,
    t0: f64,
    cap: f64,
) -> Result<CheckReport> {
    let eps_frac = 0.1;
    let t_hat = bistable_delay(trace, c_b, level, t0, eps_frac)?;
    if t_hat > cap {
        return Err(FrontError::NoAdmissibleDelay { cap });
    }
    let worst = Worst {
        margin: cap - t_hat,
        t: t0,
        x: f64::NAN,
    };
    Ok(CheckReport::new(CheckName::BistablePush, scenario, worst, 0.0)
        .with("c_B", c_b)
        .with("epsilon", eps_frac * c_b)
        .with("lambda", level)
        .with("t0", t0)
        .with("t_hat", t_hat)
        .with("cap", cap))
}

/// Settings of the full check suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub checks: Vec<CheckName>,
    pub value_tol: f64,
    pub envelope_tol: f64,
    pub speed_tol: f64,
    pub ahead_tol: f64,
    pub behind_tol: f64,
    pub omega_delta: f64,
    pub omega_horizon: f64,
    pub omega_cap: f64,
    pub omega_grid: OmegaGrid,
    pub width_levels: (f64, f64),
    pub width_ratio: f64,
    pub steep_frac: f64,
    pub steep_slack: f64,
    pub fit_span: f64,
    pub fit_frac: f64,
    pub sliding_offset: f64,
    pub propagation_time: f64,
    pub bistable_delta: f64,
    pub bistable_level: f64,
    pub bistable_cap: f64,
    /// Checks that start "after the delay" never start earlier than this
    /// long after the run start: the solver's relaxation of the sampled datum.
    pub startup_layer: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            checks: CheckName::ALL.to_vec(),
            value_tol: 1e-6,
            envelope_tol: 1e-6,
            speed_tol: 1e-3,
            ahead_tol: 1e-3,
            behind_tol: 1e-4,
            omega_delta: 0.1,
            omega_horizon: 20.0,
            omega_cap: 1e4,
            omega_grid: OmegaGrid::default(),
            width_levels: (0.1, 0.9),
            width_ratio: 1.1,
            steep_frac: 0.5,
            steep_slack: 0.05,
            fit_span: 10.0,
            fit_frac: 0.9,
            sliding_offset: 1.0,
            propagation_time: 5.0,
            bistable_delta: 1.0,
            bistable_level: 0.5,
            bistable_cap: 50.0,
            startup_layer: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub scenario: String,
    pub passed: bool,
    /// Steepness-based delay estimate.
    pub t_delay_estimate: f64,
    /// Start of the post-delay window actually used.
    pub t_delay: f64,
    pub c_hat: Option<f64>,
    pub reports: Vec<CheckReport>,
}

impl Manifest {
    pub fn report(&self, check: CheckName) -> Option<&CheckReport> {
        self.reports.iter().find(|r| r.check == check)
    }

    pub fn failed(&self) -> Vec<CheckName> {
        self.reports.iter().filter(|r| !r.passed).map(|r| r.check).collect()
    }
}

/// Runs every enabled check over a recorded run.
pub fn verify_run(
    run: &ApproximatingRun,
    env: &ReactionEnv,
    phi: &WaveProfile,
    scenario: &str,
    cfg: &VerifySettings,
) -> Manifest {
    let t_delay_estimate = estimate_delay(&run.trace);
    let t_delay = t_delay_estimate.max(run.s + cfg.startup_layer);
    let cal = calibrate_ahead(run, t_delay);
    let c_inf = phi.speed;
    let mut reports = Vec::new();
    for &check in &cfg.checks {
        let res: Result<CheckReport> = match check {
            CheckName::Monotone => Ok(check_monotone(run, scenario, 1e-10)),
            CheckName::SuperExponential => {
                let (c, y0, _) = super_exponential_params(env, phi);
                Ok(check_super_exponential(run, scenario, c_inf, c, y0, cfg.value_tol))
            }
            CheckName::LowerTranslate => {
                // the bound is attained when the medium is frozen at its lower envelope
                let allowance = if env.a_min() == env.a_max() {
                    lag_allowance(run, phi)
                } else {
                    Ok(0.0)
                };
                allowance.map(|a| check_lower_translate(run, scenario, phi, cfg.value_tol, a))
            }
            CheckName::OmegaPair => check_omega_pair(
                env,
                phi,
                scenario,
                run.s,
                cfg.omega_delta,
                cfg.omega_horizon,
                cfg.omega_grid,
                cfg.omega_cap,
            ),
            CheckName::OmegaSandwich => check_omega_pair(
                env,
                phi,
                scenario,
                t_delay,
                cfg.omega_delta,
                cfg.omega_horizon,
                cfg.omega_grid,
                cfg.omega_cap,
            )
            .and_then(|p| {
                let c = p.witness("C").unwrap_or(f64::NAN);
                check_omega_sandwich(run, env, phi, scenario, t_delay, cfg.omega_delta, c, cfg.value_tol)
            }),
            CheckName::EnvelopeSpeed => crate::wave_profile::envelope_speed_bound(env, run.trace.kappa).map(|ck| {
                check_envelope_speed(&run.trace, scenario, ck, cfg.envelope_tol)
                    .with("lambda_star", lambda_star(env, run.trace.kappa))
            }),
            CheckName::Width => {
                let split = 0.5 * run.t_end.max(t_delay);
                check_width(&run.trace, scenario, cfg.width_levels, t_delay, split.max(t_delay), cfg.width_ratio)
            }
            CheckName::Steepness => cal
                .as_ref()
                .map_err(clone_err)
                .map(|c| check_steepness(&run.trace, scenario, t_delay, c.c_hat, cfg.steep_frac, cfg.steep_slack)),
            CheckName::SpeedFormula => {
                let kinks = match &env.amplitude {
                    crate::reaction_env::AmplitudeModel::Telegraph(tg) => tg.switches(run.s, run.t_end + 1.0),
                    _ => Vec::new(),
                };
                Ok(check_speed_formula(&run.trace, scenario, t_delay, cfg.speed_tol, &kinks))
            }
            CheckName::DecayBehind => behind_params(env, &run.trace.levels)
                .and_then(|(l, b)| check_decay_behind(run, scenario, l, b, t_delay, cfg.behind_tol)),
            CheckName::DecayAheadPointwise => cal
                .as_ref()
                .map_err(clone_err)
                .and_then(|c| check_decay_ahead_pointwise(run, scenario, *c, cfg.ahead_tol)),
            CheckName::DecayAheadRate => cal
                .as_ref()
                .map_err(clone_err)
                .and_then(|c| check_decay_ahead_rate(run, scenario, *c, cfg.fit_span, cfg.fit_frac)),
            CheckName::Sliding => Ok(check_sliding(
                run,
                scenario,
                c_inf,
                t_delay,
                cfg.sliding_offset,
                run.trace.every().unwrap_or(0.0),
                env.a_min() == env.a_max(),
            )),
            CheckName::LowerPropagation => Ok(check_lower_propagation(
                &run.trace,
                scenario,
                t_delay,
                cfg.propagation_time,
            )),
            CheckName::BistablePush => env.bistable_companion(cfg.bistable_delta).and_then(|fb| {
                let w = crate::wave_profile::solve_bistable_wave(&|u| fb.eval(u), env.theta, 1e-8)?;
                check_bistable_push(&run.trace, scenario, w.speed, cfg.bistable_level, t_delay, cfg.bistable_cap)
            }),
        };
        reports.push(res.unwrap_or_else(|e| CheckReport::errored(check, scenario, &e)));
    }
    Manifest {
        format_version: 1,
        scenario: scenario.to_string(),
        passed: reports.iter().all(|r| r.passed),
        t_delay_estimate,
        t_delay,
        c_hat: cal.as_ref().ok().map(|c| c.c_hat),
        reports,
    }
}

fn clone_err(e: &FrontError) -> FrontError {
    match e {
        FrontError::InsufficientSnapshots { need, have } => FrontError::InsufficientSnapshots {
            need: *need,
            have: *have,
        },
        other => FrontError::Config(other.to_string()),
    }
}

/// Replaces `u` on `[ξ_θ + from, ξ_θ + 2 from]` of the last snapshot by
/// `u(ξ_θ + from) e^{-ĉ (x - from) / 2}`. The snapshot stays monotone and under
/// the exponential super-solution; only the pointwise ahead-decay check sees it.
pub fn inject_ahead_bump(run: &mut ApproximatingRun, c_hat: f64, from: f64) -> Result<()> {
    let th = run.theta;
    let f = run
        .snapshots
        .last_mut()
        .ok_or(FrontError::InsufficientSnapshots { need: 1, have: 0 })?;
    let xi = xi_lambda(f, th)?;
    let base = interpolate_at(f, &f.values, xi + from);
    for i in 0..f.values.len() {
        let x = f.grid.x(i) - xi;
        if x >= from && x <= 2.0 * from {
            f.values[i] = f.values[i].max(base * (-0.5 * c_hat * (x - from)).exp());
        }
    }
    Ok(())
}
