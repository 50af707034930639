//! Traveling waves `φ'' + c φ' + f(φ) = 0`, `φ(-∞) = 1`, `φ(+∞) = 0`, by shooting.
//!
//! Ignition waves are integrated backward from `x = 0`, where the profile is
//! known in closed form (`φ = θ e^{-cx}` for `x ≥ 0`). Bistable waves are
//! launched from the unstable manifold of `u = 1`. In both cases the speed is
//! bracketed by the two ways a wrong trajectory fails and refined by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::tolerances::{
    BISECTION_CAP, BISTABLE_LAUNCH, BISTABLE_X_MAX, PROFILE_DX, PROFILE_X_HI, PROFILE_X_LO,
    TAIL_SWITCH, TAIL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    Ignition,
    Bistable,
}

/// Sampled wave profile with analytic tails outside the stored range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub kind: WaveKind,
    pub speed: f64,
    pub theta: f64,
    /// First stored abscissa; node `i` sits at `x0 + i·h`.
    pub x0: f64,
    pub h: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `1 - φ ∝ e^{left_rate·x}` left of the stored range.
    pub left_rate: f64,
    /// `φ ∝ e^{-right_rate·x}` right of the stored range.
    pub right_rate: f64,
    /// Speeds `c(1 ± 10·tol)` at which the shooting fails in the two opposite ways.
    pub witnesses: (f64, f64),
    pub tol: f64,
    /// Largest finite-difference residual of the ODE over interior nodes.
    pub residual: f64,
    /// Distance from 1 of the bistable launch point.
    pub launch_offset: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WaveSummary {
    pub kind: WaveKind,
    pub speed: f64,
    pub theta: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub h: f64,
    pub tol: f64,
    pub residual: f64,
    pub tail_error: f64,
    pub witnesses: (f64, f64),
    pub launch_offset: Option<f64>,
}

impl WaveProfile {
    pub fn x_lo(&self) -> f64 {
        self.x0
    }

    pub fn x_hi(&self) -> f64 {
        self.x0 + (self.phi.len() - 1) as f64 * self.h
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.phi.len()).map(move |i| self.x0 + i as f64 * self.h)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.x0) / self.h;
        let i = (s.floor() as usize).min(self.phi.len() - 2);
        (i, s - i as f64)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x_lo() {
            let w = 1.0 - self.phi[0];
            return 1.0 - w * (self.left_rate * (x - self.x_lo())).exp();
        }
        if x > self.x_hi() {
            let last = *self.phi.last().expect("nonempty");
            return last * (-self.right_rate * (x - self.x_hi())).exp();
        }
        let (i, s) = self.locate(x);
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * self.h, self.dphi[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        // increment form: on the plateau near 1 the rounding of p0 + δ stays monotone
        p0 + ((-2.0 * s3 + 3.0 * s2) * (p1 - p0) + (s3 - 2.0 * s2 + s) * m0 + (s3 - s2) * m1)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.x_lo() {
            let w = 1.0 - self.phi[0];
            return -self.left_rate * w * (self.left_rate * (x - self.x_lo())).exp();
        }
        if x > self.x_hi() {
            let last = *self.phi.last().expect("nonempty");
            return -self.right_rate * last * (-self.right_rate * (x - self.x_hi())).exp();
        }
        let (i, s) = self.locate(x);
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * self.h, self.dphi[i + 1] * self.h);
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1)
            / self.h
    }

    /// `max |φ(x) - θ e^{-cx}|` over the stored nodes in `[0, x_max]`.
    pub fn tail_error(&self, x_max: f64) -> f64 {
        self.xs()
            .zip(&self.phi)
            .filter(|(x, _)| *x >= 0.0 && *x <= x_max)
            .map(|(x, p)| (p - self.theta * (-self.speed * x).exp()).abs())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> WaveSummary {
        WaveSummary {
            kind: self.kind,
            speed: self.speed,
            theta: self.theta,
            x_lo: self.x_lo(),
            x_hi: self.x_hi(),
            h: self.h,
            tol: self.tol,
            residual: self.residual,
            tail_error: match self.kind {
                WaveKind::Ignition => self.tail_error(self.x_hi()),
                WaveKind::Bistable => f64::NAN,
            },
            witnesses: self.witnesses,
            launch_offset: self.launch_offset,
        }
    }
}

/// Shooting parameters.
#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub tol: f64,
    pub h: f64,
    /// Initial speed bracket; derived from the nonlinearity when absent.
    pub bracket: Option<(f64, f64)>,
}

impl ShootOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            h: PROFILE_DX,
            bracket: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    /// Speed too large.
    Fast,
    /// Speed too small.
    Slow,
}

type Rhs<'a> = &'a dyn Fn(f64) -> f64;

#[inline]
fn rk4(f: Rhs, c: f64, (p, q): (f64, f64), h: f64) -> (f64, f64) {
    let d = |p: f64, q: f64| (q, -c * q - f(p));
    let (k1p, k1q) = d(p, q);
    let (k2p, k2q) = d(p + 0.5 * h * k1p, q + 0.5 * h * k1q);
    let (k3p, k3q) = d(p + 0.5 * h * k2p, q + 0.5 * h * k2q);
    let (k4p, k4q) = d(p + h * k3p, q + h * k3q);
    (
        p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
    )
}

/// Rate of `1 - φ → 0` as `x → -∞`: the positive root of `r² + c r - β = 0`, `β = -f'(1)`.
fn left_rate(f: Rhs, c: f64) -> f64 {
    let eps = 1e-7;
    let beta = f(1.0 - eps) / eps;
    0.5 * (-c + (c * c + 4.0 * beta).sqrt())
}

const SHOOT_X_BUDGET: f64 = 2000.0;

/// Backward ignition trajectory from `(θ, -cθ)`. Returns the verdict and, when
/// `keep` is set, the samples `(φ, φ')` from `x = 0` leftward up to the tail switch.
fn shoot_ignition(f: Rhs, theta: f64, c: f64, h: f64, keep: bool) -> (Option<Verdict>, Vec<(f64, f64)>) {
    let mut y = (theta, -c * theta);
    let mut path = Vec::new();
    if keep {
        path.push(y);
    }
    let steps = (SHOOT_X_BUDGET / h) as usize;
    for _ in 0..steps {
        let next = rk4(f, c, y, -h);
        if next.0 >= 1.0 {
            return (Some(Verdict::Fast), path);
        }
        if next.1 >= 0.0 {
            return (Some(Verdict::Slow), path);
        }
        y = next;
        if keep {
            path.push(y);
            if 1.0 - y.0 <= TAIL_SWITCH {
                return (None, path);
            }
        }
    }
    (None, path)
}

/// Forward bistable trajectory launched at `1 - ε` along the unstable direction.
fn shoot_bistable(f: Rhs, c: f64, h: f64, keep: bool, stop_below: f64) -> (Option<Verdict>, Vec<(f64, f64)>) {
    let eps = BISTABLE_LAUNCH;
    let r = left_rate(f, c);
    let mut y = (1.0 - eps, -r * eps);
    let mut path = Vec::new();
    if keep {
        path.push(y);
    }
    let steps = (BISTABLE_X_MAX / h) as usize;
    for _ in 0..steps {
        let next = rk4(f, c, y, h);
        if next.0 <= 0.0 {
            return (Some(Verdict::Slow), path);
        }
        if next.1 >= 0.0 {
            return (Some(Verdict::Fast), path);
        }
        y = next;
        if keep {
            path.push(y);
            if y.0 <= stop_below {
                return (None, path);
            }
        }
    }
    (None, path)
}

/// Bisection on the speed given a classifier, widening the bracket up to 4 times.
fn bisect_speed(
    classify: impl Fn(f64) -> Option<Verdict>,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, (f64, f64))> {
    let (mut lo, mut hi) = bracket;
    let mut widen = 0;
    loop {
        let lo_ok = classify(lo) == Some(Verdict::Slow);
        let hi_ok = classify(hi) == Some(Verdict::Fast);
        if lo_ok && hi_ok {
            break;
        }
        if widen == 4 {
            return Err(FrontError::BracketFailure { lo, hi });
        }
        widen += 1;
        if !lo_ok {
            lo /= 10.0;
        }
        if !hi_ok {
            hi *= 10.0;
        }
    }
    // The saddle at u = 1 amplifies speed errors exponentially, so the bracket
    // is driven down to rounding level whatever the requested tolerance.
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let fast = mid * (1.0 + 10.0 * tol);
            let slow = mid * (1.0 - 10.0 * tol);
            return Ok((mid, (fast, slow)));
        }
        match classify(mid) {
            Some(Verdict::Fast) => hi = mid,
            Some(Verdict::Slow) => lo = mid,
            // indistinguishable from the true speed at this resolution
            None => {
                return Ok((mid, (mid * (1.0 + 10.0 * tol), mid * (1.0 - 10.0 * tol))));
            }
        }
    }
    Err(FrontError::NonConvergence {
        what: "speed bisection",
        iterations: BISECTION_CAP,
    })
}

fn default_bracket(f: Rhs, theta: f64) -> (f64, f64) {
    // largest slope of f against the distance to the ignition level
    let slope = (1..1000)
        .map(|k| theta + (1.0 - theta) * k as f64 / 1000.0)
        .map(|u| f(u) / (u - theta))
        .fold(0.0, f64::max);
    (1e-3, 10.0 * slope.max(1e-6).sqrt())
}

fn fd_residual(f: Rhs, c: f64, h: f64, phi: &[f64]) -> f64 {
    phi.windows(3)
        .map(|w| {
            let d2 = (w[0] - 2.0 * w[1] + w[2]) / (h * h);
            let d1 = (w[2] - w[0]) / (2.0 * h);
            (d2 + c * d1 + f(w[1])).abs()
        })
        .fold(0.0, f64::max)
}

/// Ignition wave for `f` with ignition level `θ`, normalized by `φ(0) = θ`.
pub fn solve_ignition_wave(f: Rhs, theta: f64, tol: f64) -> Result<WaveProfile> {
    solve_ignition_wave_with(f, theta, ShootOptions::new(tol))
}

pub fn solve_ignition_wave_with(f: Rhs, theta: f64, opts: ShootOptions) -> Result<WaveProfile> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("theta", format!("must lie in (0, 1), got {theta}")));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let h = opts.h;
    let bracket = opts.bracket.unwrap_or_else(|| default_bracket(f, theta));
    let (c, witnesses) = bisect_speed(|c| shoot_ignition(f, theta, c, h, false).0, bracket, opts.tol)?;

    // left part, from x = 0 down to the tail switch
    let (_, mut left) = shoot_ignition(f, theta, c, h, true);
    while left.len() > 1 && left.last().is_some_and(|p| p.0 >= 1.0 || p.1 >= 0.0) {
        left.pop();
    }
    let r = left_rate(f, c);
    let n_num = left.len() - 1;
    let x_switch = -(n_num as f64) * h;
    let w_switch = 1.0 - left[n_num].0;
    let x_lo_target = PROFILE_X_LO.min(x_switch - (w_switch / (0.01 * TAIL_TOL)).ln() / r);
    let n_left = ((-x_lo_target) / h).ceil() as usize;

    // right part, integrated rather than written down
    let x_hi_target = PROFILE_X_HI.max((theta / TAIL_TOL).ln() / c);
    let n_right = (x_hi_target / h).ceil() as usize;

    let mut phi = Vec::with_capacity(n_left + n_right + 1);
    let mut dphi = Vec::with_capacity(n_left + n_right + 1);
    for i in (n_num + 1..=n_left).rev() {
        let x = -(i as f64) * h;
        let w = w_switch * (r * (x - x_switch)).exp();
        phi.push(1.0 - w);
        dphi.push(-r * w);
    }
    for i in (0..=n_num.min(n_left)).rev() {
        phi.push(left[i].0);
        dphi.push(left[i].1);
    }
    let mut y = (theta, -c * theta);
    for _ in 0..n_right {
        y = rk4(f, c, y, h);
        phi.push(y.0);
        dphi.push(y.1);
    }
    let residual = fd_residual(f, c, h, &phi);
    Ok(WaveProfile {
        kind: WaveKind::Ignition,
        speed: c,
        theta,
        x0: -(n_left as f64) * h,
        h,
        phi,
        dphi,
        left_rate: r,
        right_rate: c,
        witnesses,
        tol: opts.tol,
        residual,
        launch_offset: None,
    })
}

/// Bistable wave for `f` (negative on `(0, θ)`, positive integral), normalized by `φ(0) = θ`.
pub fn solve_bistable_wave(f: Rhs, theta: f64, tol: f64) -> Result<WaveProfile> {
    solve_bistable_wave_with(f, theta, ShootOptions::new(tol))
}

pub fn solve_bistable_wave_with(f: Rhs, theta: f64, opts: ShootOptions) -> Result<WaveProfile> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("theta", format!("must lie in (0, 1), got {theta}")));
    }
    let h = opts.h;
    let bracket = opts.bracket.unwrap_or_else(|| default_bracket(f, theta));
    // a trajectory that neither crosses zero nor turns within the budget is
    // creeping toward the saddle at 0 and counts as too fast
    let classify = |c| shoot_bistable(f, c, h, false, 0.0).0.or(Some(Verdict::Fast));
    let (c, witnesses) = bisect_speed(classify, bracket, opts.tol)?;

    let eps0 = 1e-7;
    let delta0 = -f(eps0) / eps0;
    if !(delta0 > 0.0) {
        return Err(invalid("f", "bistable nonlinearity must have f'(0) < 0"));
    }
    let mu = 0.5 * (c + (c * c + 4.0 * delta0).sqrt());
    let (_, mut path) = shoot_bistable(f, c, h, true, TAIL_SWITCH);
    while path.len() > 1 && path.last().is_some_and(|p| p.0 <= 0.0 || p.1 >= 0.0) {
        path.pop();
    }
    let r = left_rate(f, c);
    let k_theta = path
        .iter()
        .position(|p| p.0 <= theta)
        .ok_or(FrontError::NonConvergence {
            what: "bistable profile reaching θ",
            iterations: path.len(),
        })?;
    // sub-node location of the θ crossing; the profile is re-anchored there
    let (a, b) = (path[k_theta - 1].0, path[k_theta].0);
    let x_theta = (k_theta - 1) as f64 * h + h * (a - theta) / (a - b);

    let w0 = BISTABLE_LAUNCH;
    let n_pre = ((w0 / (0.01 * TAIL_TOL)).ln() / r / h).ceil() as usize;
    let last = *path.last().expect("nonempty");
    let n_post = ((last.0 / (0.01 * TAIL_TOL)).ln() / mu / h).ceil() as usize;
    let mut phi = Vec::with_capacity(n_pre + path.len() + n_post);
    let mut dphi = Vec::with_capacity(phi.capacity());
    for i in (1..=n_pre).rev() {
        let w = w0 * (-r * i as f64 * h).exp();
        phi.push(1.0 - w);
        dphi.push(-r * w);
    }
    for p in &path {
        phi.push(p.0);
        dphi.push(p.1);
    }
    for i in 1..=n_post {
        let v = last.0 * (-mu * i as f64 * h).exp();
        phi.push(v);
        dphi.push(-mu * v);
    }
    let residual = fd_residual(f, c, h, &phi);
    let mut wave = WaveProfile {
        kind: WaveKind::Bistable,
        speed: c,
        theta,
        x0: -(n_pre as f64) * h - x_theta,
        h,
        phi,
        dphi,
        left_rate: r,
        right_rate: mu,
        witnesses,
        tol: opts.tol,
        residual,
        launch_offset: Some(w0),
    };
    // polish the anchor on the interpolant
    let (mut lo, mut hi) = (-h, h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if wave.eval(mid) > theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    wave.x0 -= 0.5 * (lo + hi);
    Ok(wave)
}

/// Speed classification used by the bracket certificate: `Some(true)` when `c`
/// overshoots (too fast), `Some(false)` when it falls short.
pub fn ignition_overshoots(f: Rhs, theta: f64, c: f64) -> Option<bool> {
    shoot_ignition(f, theta, c, PROFILE_DX, false).0.map(|v| v == Verdict::Fast)
}

pub fn bistable_overshoots(f: Rhs, c: f64) -> Option<bool> {
    Some(shoot_bistable(f, c, PROFILE_DX, false, 0.0).0 != Some(Verdict::Slow))
}

/// `(λ_κ, c*_κ) = (√κ, 2√κ)`, the double root of `λ² - c λ + κ = 0`.
pub fn kpp_envelope_params(kappa: f64) -> Result<(f64, f64)> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid("kappa", format!("must be positive, got {kappa}")));
    }
    let lambda = kappa.sqrt();
    let c = 2.0 * lambda;
    debug_assert!((lambda * lambda - c * lambda + kappa).abs() <= 4.0 * f64::EPSILON * kappa);
    Ok((lambda, c))
}

/// `κ₀ = sup_{u ∈ (0,1)} f(u)/u` by a grid search refined with golden sections.
pub fn kappa0(f: Rhs) -> f64 {
    let n = 10_000;
    let ratio = |u: f64| f(u) / u;
    let (mut best_k, mut best) = (1, f64::NEG_INFINITY);
    for k in 1..n {
        let v = ratio(k as f64 / n as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let (mut a, mut b) = ((best_k - 1) as f64 / n as f64, (best_k + 1) as f64 / n as f64);
    a = a.max(1e-12);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..100 {
        if ratio(c) > ratio(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    best.max(ratio(0.5 * (a + b)))
}

/// `c_{κ₀} = κ₀/λ_κ + λ_κ` for an upper nonlinearity `f_sup`.
pub fn envelope_speed_bound_for(f_sup: Rhs, kappa: f64) -> Result<f64> {
    let (lambda, _) = kpp_envelope_params(kappa)?;
    Ok(kappa0(f_sup) / lambda + lambda)
}

pub fn envelope_speed_bound(env: &crate::reaction_env::ReactionEnv, kappa: f64) -> Result<f64> {
    envelope_speed_bound_for(&|u| env.f_sup(u), kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction_env::ReactionEnv;
    use approx::assert_abs_diff_eq;

    fn quad(a: f64) -> impl Fn(f64) -> f64 {
        move |u: f64| if u <= 0.25 { 0.0 } else { a * (u - 0.25) * (1.0 - u) }
    }

    #[test]
    fn ignition_wave_invariants() {
        let f = quad(1.0);
        let w = solve_ignition_wave(&f, 0.25, 1e-8).unwrap();
        assert!(w.speed > 0.0);
        assert!(w.residual <= crate::tolerances::RESIDUAL_TOL, "residual {}", w.residual);
        assert!(w.phi[0] >= 1.0 - TAIL_TOL);
        assert!(*w.phi.last().unwrap() <= TAIL_TOL);
        for p in w.phi.windows(2) {
            assert!(p[1] <= p[0]);
            if p[0] < 1.0 - 1e-12 {
                assert!(p[1] < p[0]);
            }
        }
        assert_abs_diff_eq!(w.eval(0.0), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(w.eval(2.0), 0.25 * (-2.0 * w.speed).exp(), epsilon = 1e-8);
        assert!(w.tail_error(w.x_hi()) <= 1e-8);
        assert_eq!(ignition_overshoots(&f, 0.25, w.witnesses.0), Some(true));
        assert_eq!(ignition_overshoots(&f, 0.25, w.witnesses.1), Some(false));
    }

    #[test]
    fn speed_scales_with_reaction() {
        let f = quad(1.0);
        let f4 = quad(4.0);
        let c1 = solve_ignition_wave(&f, 0.25, 1e-8).unwrap().speed;
        let c4 = solve_ignition_wave(&f4, 0.25, 1e-8).unwrap().speed;
        assert!((c4 - 2.0 * c1).abs() <= 2.0 * 1e-8 * c4 + 1e-9, "{c4} vs {}", 2.0 * c1);
    }

    #[test]
    fn bracket_independent_speed() {
        let f = quad(1.0);
        let a = solve_ignition_wave(&f, 0.25, 1e-9).unwrap().speed;
        let mut o = ShootOptions::new(1e-9);
        o.bracket = Some((0.2, 0.9));
        let b = solve_ignition_wave_with(&f, 0.25, o).unwrap().speed;
        assert!((a - b).abs() <= 2e-9);
    }

    #[test]
    fn narrow_bracket_is_widened_or_rejected() {
        let f = quad(1.0);
        let mut o = ShootOptions::new(1e-6);
        o.bracket = Some((0.01, 0.02));
        assert!(solve_ignition_wave_with(&f, 0.25, o).is_ok());
        o.bracket = Some((1e6, 2e6));
        assert!(matches!(
            solve_ignition_wave_with(&f, 0.25, o),
            Err(FrontError::BracketFailure { .. })
        ));
    }

    #[test]
    fn cubic_bistable_speed() {
        let a = 0.25;
        let f = move |u: f64| u * (u - a) * (1.0 - u);
        let w = solve_bistable_wave(&f, 0.25, 1e-8).unwrap();
        let exact = (1.0 - 2.0 * a) / 2f64.sqrt();
        assert!((w.speed - exact).abs() <= 1e-3, "{} vs {exact}", w.speed);
        assert_abs_diff_eq!(w.eval(0.0), 0.25, epsilon = 1e-9);
        assert!(w.residual <= crate::tolerances::RESIDUAL_TOL);
        assert!(w.dphi.iter().all(|&d| d < 0.0));
        // tanh profile 1/(1+e^{x/√2}) up to translation
        let x_half = {
            let mut lo = -20.0;
            let mut hi = 20.0;
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if w.eval(m) > 0.5 {
                    lo = m
                } else {
                    hi = m
                }
            }
            lo
        };
        for x in [-5.0, -1.0, 0.0, 2.0, 6.0] {
            let exact = 1.0 / (1.0 + ((x) / 2f64.sqrt()).exp());
            assert!((w.eval(x + x_half) - exact).abs() < 1e-4);
        }
    }

    #[test]
    fn companion_is_slower_than_ignition_wave() {
        let env = ReactionEnv::constant(0.25, 0.5).unwrap();
        let fb = env.bistable_companion(0.05).unwrap();
        let wb = solve_bistable_wave(&|u| fb.eval(u), 0.25, 1e-8).unwrap();
        let wi = solve_ignition_wave(&|u| env.f_inf(u), 0.25, 1e-8).unwrap();
        assert!(wb.speed > 0.0);
        assert!(wb.speed < wi.speed);
    }

    #[test]
    fn kpp_params() {
        let (l, c) = kpp_envelope_params(0.04).unwrap();
        assert_abs_diff_eq!(l, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 0.4, epsilon = 1e-15);
        assert_eq!(kpp_envelope_params(1.0).unwrap(), (1.0, 2.0));
        let cinf = 0.37;
        assert_abs_diff_eq!(kpp_envelope_params(cinf * cinf).unwrap().0, cinf, epsilon = 1e-15);
        assert!(kpp_envelope_params(0.0).is_err());
    }

    #[test]
    fn envelope_bound() {
        let k0 = 0.3;
        let lin = move |u: f64| k0 * u;
        let got = envelope_speed_bound_for(&lin, 0.09).unwrap();
        assert_abs_diff_eq!(got, k0 / 0.3 + 0.3, epsilon = 1e-12);
        // (u-θ)(1-u)/u peaks at u = √θ with value (1-√θ)²
        let env = ReactionEnv::constant(0.25, 1.0).unwrap();
        assert_abs_diff_eq!(kappa0(&|u| env.f_sup(u)), 0.25, epsilon = 1e-12);
        let (a, b) = (0.16, 0.04);
        let ca = envelope_speed_bound(&env, a).unwrap();
        let cb = envelope_speed_bound(&env, b).unwrap();
        assert_abs_diff_eq!(ca, 0.25 / a.sqrt() + a.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(cb, 0.25 / b.sqrt() + b.sqrt(), epsilon = 1e-12);
    }
}
