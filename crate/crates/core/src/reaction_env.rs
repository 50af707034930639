//! Ignition reaction families `f(t, u) = a(t) g(u)` and their time environments.
//!
//! The environment is separable: a fixed ignition profile `g` in the state
//! variable, scaled by a positive amplitude `a(t)` drawn from one of four time
//! models. With `a(t)` confined to `[a_min, a_max]` the lower and upper
//! envelopes are exactly `a_min g` and `a_max g`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::pde_core::Medium;

/// Fixed ignition profile in the state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `g(u) = (u - θ)(1 - u)` for `u ≥ θ`, zero below.
    Quadratic,
}

impl Shape {
    #[inline]
    pub fn value(self, theta: f64, u: f64) -> f64 {
        match self {
            Shape::Quadratic => {
                if u <= theta {
                    0.0
                } else {
                    (u - theta) * (1.0 - u)
                }
            }
        }
    }

    /// One-sided derivative `g'(u)`, taken from the right at `u = θ`.
    pub fn derivative(self, theta: f64, u: f64) -> f64 {
        match self {
            Shape::Quadratic => {
                if u < theta {
                    0.0
                } else {
                    1.0 + theta - 2.0 * u
                }
            }
        }
    }

    /// `max |g'|` over `[0, 1]`.
    pub fn lipschitz(self, theta: f64) -> f64 {
        match self {
            Shape::Quadratic => 1.0 - theta,
        }
    }

    /// `∫_θ^1 g(u) du`.
    pub fn integral(self, theta: f64) -> f64 {
        match self {
            Shape::Quadratic => (1.0 - theta).powi(3) / 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub amplitude: f64,
    pub frequency: f64,
}

/// Length of the time blocks the telegraph schedule is generated in.
const TELEGRAPH_BLOCK: f64 = 50.0;
const TELEGRAPH_MAX_LOOKBACK: i64 = 1_000_000;

/// Piecewise-constant amplitude holding i.i.d. `Uniform[a_min, a_max]` values
/// over exponential holding times.
///
/// The switch times form a Poisson process, generated independently on
/// disjoint blocks of length 50 from a ChaCha stream keyed by the block index.
/// Every query is a pure function of `(seed, t)`; no state is kept between calls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Telegraph {
    pub holding_rate: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub seed: u64,
}

impl Telegraph {
    fn block_events(&self, block: i64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block as u64);
        let start = block as f64 * TELEGRAPH_BLOCK;
        let end = start + TELEGRAPH_BLOCK;
        let holding = Exp::new(self.holding_rate).expect("validated positive rate");
        let mut events = Vec::new();
        let mut t = start;
        loop {
            t += holding.sample(&mut rng);
            if t >= end {
                break;
            }
            let a = if self.a_max > self.a_min {
                rng.random_range(self.a_min..=self.a_max)
            } else {
                self.a_min
            };
            events.push((t, a));
        }
        events
    }

    fn block_of(t: f64) -> i64 {
        (t / TELEGRAPH_BLOCK).floor() as i64
    }

    pub fn sample(&self, t: f64) -> f64 {
        let k = Self::block_of(t);
        if let Some(&(_, a)) = self.block_events(k).iter().rev().find(|(s, _)| *s <= t) {
            return a;
        }
        for back in 1..TELEGRAPH_MAX_LOOKBACK {
            if let Some(&(_, a)) = self.block_events(k - back).last() {
                return a;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        rng.random_range(self.a_min..=self.a_max)
    }

    /// First switch time strictly inside `(t0, t1)`. A degenerate process
    /// (`a_min = a_max`) never switches.
    pub fn next_switch(&self, t0: f64, t1: f64) -> Option<f64> {
        if t1 <= t0 || self.a_min == self.a_max {
            return None;
        }
        let (k0, k1) = (Self::block_of(t0), Self::block_of(t1));
        (k0..=k1)
            .flat_map(|k| self.block_events(k))
            .map(|(s, _)| s)
            .find(|&s| s > t0 && s < t1)
    }

    /// All switch times in `[t0, t1)`.
    pub fn switches(&self, t0: f64, t1: f64) -> Vec<f64> {
        if self.a_min == self.a_max {
            return Vec::new();
        }
        (Self::block_of(t0)..=Self::block_of(t1))
            .flat_map(|k| self.block_events(k))
            .map(|(s, _)| s)
            .filter(|&s| s >= t0 && s < t1)
            .collect()
    }
}

/// Time model for the amplitude `a(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeModel {
    Constant { a: f64 },
    /// `a(t) = mean (1 + ρ sin(2πt/T))`.
    Periodic { mean: f64, rho: f64, period: f64 },
    /// `a(t) = mean + Σ_k amplitude_k sin(2π frequency_k t)`.
    QuasiPeriodic { mean: f64, modes: Vec<Mode> },
    Telegraph(Telegraph),
}

impl AmplitudeModel {
    pub fn sample(&self, t: f64) -> f64 {
        match self {
            AmplitudeModel::Constant { a } => *a,
            AmplitudeModel::Periodic { mean, rho, period } => {
                mean * (1.0 + rho * (2.0 * PI * t / period).sin())
            }
            AmplitudeModel::QuasiPeriodic { mean, modes } => {
                mean + modes
                    .iter()
                    .map(|m| m.amplitude * (2.0 * PI * m.frequency * t).sin())
                    .sum::<f64>()
            }
            AmplitudeModel::Telegraph(tg) => tg.sample(t),
        }
    }

    /// `(a_min, a_max)` envelope of the model.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            AmplitudeModel::Constant { a } => (*a, *a),
            AmplitudeModel::Periodic { mean, rho, .. } => (mean * (1.0 - rho), mean * (1.0 + rho)),
            AmplitudeModel::QuasiPeriodic { mean, modes } => {
                let spread: f64 = modes.iter().map(|m| m.amplitude.abs()).sum();
                (mean - spread, mean + spread)
            }
            AmplitudeModel::Telegraph(tg) => (tg.a_min, tg.a_max),
        }
    }

    pub fn next_switch(&self, t0: f64, t1: f64) -> Option<f64> {
        match self {
            AmplitudeModel::Telegraph(tg) => tg.next_switch(t0, t1),
            _ => None,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            AmplitudeModel::Constant { .. } => None,
            AmplitudeModel::Periodic { rho, period, .. } => (*rho != 0.0).then_some(*period),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        match self {
            AmplitudeModel::Constant { a } => pos("a", *a)?,
            AmplitudeModel::Periodic { mean, rho, period } => {
                pos("mean", *mean)?;
                pos("period", *period)?;
                if !(0.0..1.0).contains(rho) {
                    return Err(invalid("rho", format!("must lie in [0, 1), got {rho}")));
                }
            }
            AmplitudeModel::QuasiPeriodic { mean, modes } => {
                pos("mean", *mean)?;
                for m in modes {
                    pos("frequency", m.frequency)?;
                }
            }
            AmplitudeModel::Telegraph(tg) => {
                pos("holding_rate", tg.holding_rate)?;
                pos("a_min", tg.a_min)?;
                if !(tg.a_max >= tg.a_min && tg.a_max.is_finite()) {
                    return Err(invalid("a_max", "must be finite and at least a_min"));
                }
            }
        }
        let (lo, _) = self.bounds();
        if lo <= 0.0 {
            return Err(invalid("amplitude", format!("lower envelope {lo} is not positive")));
        }
        Ok(())
    }
}

/// Time-dependent ignition nonlinearity `f(t, u) = a(t) g(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionEnv {
    pub theta: f64,
    pub shape: Shape,
    pub amplitude: AmplitudeModel,
}

impl ReactionEnv {
    pub fn new(theta: f64, shape: Shape, amplitude: AmplitudeModel) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(invalid("theta", format!("must lie in (0, 1), got {theta}")));
        }
        amplitude.validate()?;
        Ok(Self {
            theta,
            shape,
            amplitude,
        })
    }

    /// Quadratic family with a constant amplitude.
    pub fn constant(theta: f64, a: f64) -> Result<Self> {
        Self::new(theta, Shape::Quadratic, AmplitudeModel::Constant { a })
    }

    /// Same shape and θ with the amplitude frozen at `a`.
    pub fn frozen(&self, a: f64) -> Result<Self> {
        Self::new(self.theta, self.shape, AmplitudeModel::Constant { a })
    }

    pub fn with_amplitude(&self, amplitude: AmplitudeModel) -> Result<Self> {
        Self::new(self.theta, self.shape, amplitude)
    }

    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        self.shape.value(self.theta, u)
    }

    pub fn sample_amplitude(&self, t: f64) -> f64 {
        self.amplitude.sample(t)
    }

    pub fn eval_f(&self, t: f64, u: f64) -> f64 {
        if u <= self.theta {
            return 0.0;
        }
        self.sample_amplitude(t) * self.g(u)
    }

    pub fn a_min(&self) -> f64 {
        self.amplitude.bounds().0
    }

    pub fn a_max(&self) -> f64 {
        self.amplitude.bounds().1
    }

    pub fn f_inf(&self, u: f64) -> f64 {
        self.a_min() * self.g(u)
    }

    pub fn f_sup(&self, u: f64) -> f64 {
        self.a_max() * self.g(u)
    }

    /// The homogeneous medium `u_t = u_xx + f_inf(u)`.
    pub fn inf_medium(&self) -> ReactionEnv {
        self.frozen(self.a_min()).expect("envelope of a valid env is valid")
    }

    pub fn sup_medium(&self) -> ReactionEnv {
        self.frozen(self.a_max()).expect("envelope of a valid env is valid")
    }

    /// Solution of `u' = f(t, u)`, `u(t0) = a0`, evaluated at `t1`.
    pub fn ode_flow(&self, t0: f64, a0: f64, t1: f64) -> Result<f64> {
        ode_flow(self, t0, a0, t1)
    }

    /// Bistable nonlinearity agreeing with `f_inf` on `[θ, 1]` and equal to
    /// `-δ_B u (θ - u)` below θ.
    pub fn bistable_companion(&self, delta_b: f64) -> Result<BistableCompanion> {
        BistableCompanion::new(self, delta_b)
    }
}

impl Medium for ReactionEnv {
    #[inline]
    fn rate(&self, t: f64, u: f64) -> f64 {
        self.eval_f(t, u)
    }

    fn rate_field(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let a = self.sample_amplitude(t);
        let (theta, shape) = (self.theta, self.shape);
        for (o, &v) in out.iter_mut().zip(u) {
            *o = a * shape.value(theta, v);
        }
    }

    fn lipschitz(&self) -> f64 {
        self.a_max() * self.shape.lipschitz(self.theta)
    }

    fn next_switch(&self, t0: f64, t1: f64) -> Option<f64> {
        self.amplitude.next_switch(t0, t1)
    }

    fn tracking_level(&self) -> f64 {
        self.theta
    }
}

/// Companion bistable nonlinearity used to push ignition fronts from below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistableCompanion {
    pub theta: f64,
    pub delta_b: f64,
    pub shape: Shape,
    /// Amplitude of `f_inf` on `[θ, 1]`.
    pub inf_amplitude: f64,
    /// `∫_0^1 f_B(u) du`, computed by quadrature at construction.
    pub integral: f64,
}

impl BistableCompanion {
    pub fn new(env: &ReactionEnv, delta_b: f64) -> Result<Self> {
        if !(delta_b > 0.0 && delta_b.is_finite()) {
            return Err(invalid("delta_B", format!("must be positive, got {delta_b}")));
        }
        let mut companion = Self {
            theta: env.theta,
            delta_b,
            shape: env.shape,
            inf_amplitude: env.a_min(),
            integral: 0.0,
        };
        // Simpson on each smooth piece.
        let below = simpson(|u| companion.eval(u), 0.0, env.theta, 2000);
        let above = simpson(|u| companion.eval(u), env.theta, 1.0, 2000);
        companion.integral = below + above;
        if companion.integral <= 0.0 {
            return Err(FrontError::IntegralNonPositive {
                integral: companion.integral,
            });
        }
        Ok(companion)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u < self.theta {
            -self.delta_b * u * (self.theta - u)
        } else {
            self.inf_amplitude * self.shape.value(self.theta, u)
        }
    }
}

impl Medium for BistableCompanion {
    fn rate(&self, _t: f64, u: f64) -> f64 {
        self.eval(u)
    }

    fn lipschitz(&self) -> f64 {
        (self.delta_b * self.theta).max(self.inf_amplitude * self.shape.lipschitz(self.theta))
    }

    fn tracking_level(&self) -> f64 {
        self.theta
    }
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const ODE_RTOL: f64 = 1e-11;
const ODE_ATOL: f64 = 1e-13;

/// Adaptive Dormand-Prince integration of `u' = f(t, u)` from `(t0, a0)` to `t1`,
/// restarting at every switch time of the medium.
pub fn ode_flow<M: Medium + ?Sized>(medium: &M, t0: f64, a0: f64, t1: f64) -> Result<f64> {
    if t1 < t0 {
        return Err(invalid("t1", format!("must be >= t0 = {t0}, got {t1}")));
    }
    let mut t = t0;
    let mut u = a0;
    while t < t1 {
        let stop = medium.next_switch(t, t1).unwrap_or(t1);
        u = dopri_segment(medium, t, u, stop)?;
        t = stop;
    }
    Ok(u)
}

fn dopri_segment<M: Medium + ?Sized>(medium: &M, t0: f64, u0: f64, t1: f64) -> Result<f64> {
    let mut t = t0;
    let mut u = u0;
    let mut h = (t1 - t0).min(0.05);
    let mut k = [0.0; 7];
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        for s in 0..7 {
            let incr: f64 = (0..s).map(|j| DP_A[s][j] * k[j]).sum();
            k[s] = medium.rate(t + DP_C[s] * h, u + h * incr);
        }
        let u5 = u + h * (0..7).map(|s| DP_B5[s] * k[s]).sum::<f64>();
        let u4 = u + h * (0..7).map(|s| DP_B4[s] * k[s]).sum::<f64>();
        let scale = ODE_ATOL + ODE_RTOL * u.abs().max(u5.abs());
        let err = ((u5 - u4) / scale).abs();
        if err <= 1.0 {
            t += h;
            u = u5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if err > 1.0 && h < 1e-14 * t.abs().max(1.0) {
            return Err(FrontError::StepFailure { t });
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn default_env() -> ReactionEnv {
        ReactionEnv::constant(0.25, 1.0).unwrap()
    }

    #[test]
    fn eval_f_at_named_points() {
        let env = default_env();
        assert_eq!(env.eval_f(3.0, 0.25), 0.0);
        assert_eq!(env.eval_f(3.0, 1.0), 0.0);
        assert_abs_diff_eq!(env.eval_f(3.0, 0.5), 0.125, epsilon = 1e-15);
        assert_eq!(env.eval_f(0.0, -0.3), 0.0);
        assert!(env.eval_f(0.0, 1.2) < 0.0);
    }

    #[test]
    fn amplitude_models() {
        let c = AmplitudeModel::Constant { a: 1.0 };
        assert_eq!(c.sample(123.4), 1.0);
        let p = AmplitudeModel::Periodic {
            mean: 1.0,
            rho: 0.5,
            period: 10.0,
        };
        assert_abs_diff_eq!(p.sample(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.sample(2.5), 1.5, epsilon = 1e-15);
        let tg = AmplitudeModel::Telegraph(Telegraph {
            holding_rate: 0.2,
            a_min: 0.5,
            a_max: 2.0,
            seed: 7,
        });
        assert_eq!(tg.sample(17.3).to_bits(), tg.sample(17.3).to_bits());
        assert_eq!(tg.sample(-817.3).to_bits(), tg.sample(-817.3).to_bits());
    }

    #[test]
    fn telegraph_is_piecewise_constant_between_switches() {
        let tg = Telegraph {
            holding_rate: 0.5,
            a_min: 0.5,
            a_max: 2.0,
            seed: 11,
        };
        let switches = tg.switches(0.0, 200.0);
        assert!(switches.len() > 50, "{} switches", switches.len());
        for w in switches.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let a = tg.sample(lo);
            for frac in [0.1, 0.5, 0.9] {
                assert_eq!(tg.sample(lo + frac * (hi - lo)), a);
            }
            assert_eq!(tg.next_switch(lo, 1e9), Some(hi));
        }
        // switch values actually change
        let distinct = switches
            .windows(2)
            .filter(|w| tg.sample(w[0]) != tg.sample(w[1]))
            .count();
        assert_eq!(distinct, switches.len() - 1);
    }

    #[test]
    fn invalid_envs_rejected() {
        assert!(ReactionEnv::constant(1.2, 1.0).is_err());
        assert!(ReactionEnv::constant(0.25, 0.0).is_err());
        let p = AmplitudeModel::Periodic {
            mean: 1.0,
            rho: 1.0,
            period: 10.0,
        };
        assert!(ReactionEnv::new(0.25, Shape::Quadratic, p).is_err());
        let q = AmplitudeModel::QuasiPeriodic {
            mean: 0.5,
            modes: vec![Mode {
                amplitude: 0.6,
                frequency: 0.1,
            }],
        };
        assert!(ReactionEnv::new(0.25, Shape::Quadratic, q).is_err());
    }

    #[test]
    fn one_sided_derivatives_at_one_are_ordered() {
        let env = ReactionEnv::new(
            0.25,
            Shape::Quadratic,
            AmplitudeModel::Periodic {
                mean: 1.0,
                rho: 0.5,
                period: 10.0,
            },
        )
        .unwrap();
        let h = 1e-6;
        let d_inf = (env.f_inf(1.0) - env.f_inf(1.0 - h)) / h;
        let d_sup = (env.f_sup(1.0) - env.f_sup(1.0 - h)) / h;
        assert!(d_inf < 0.0);
        assert!(d_sup <= d_inf);
    }

    #[test]
    fn bistable_companion_integral() {
        let env = ReactionEnv::constant(0.25, 0.5).unwrap();
        let fb = env.bistable_companion(0.05).unwrap();
        // closed form: a (1-θ)^3 / 6 - δ θ^3 / 6
        let exact = 0.5 * 0.75f64.powi(3) / 6.0 - 0.05 * 0.25f64.powi(3) / 6.0;
        assert_abs_diff_eq!(fb.integral, exact, epsilon = 1e-12);
        assert_eq!(fb.eval(0.0), 0.0);
        assert!(fb.eval(0.1) < 0.0);
        assert_eq!(fb.eval(0.6), env.f_inf(0.6));

        let tiny = env.bistable_companion(1e-12).unwrap();
        assert_abs_diff_eq!(tiny.integral, 0.5 * Shape::Quadratic.integral(0.25), epsilon = 1e-12);

        match env.bistable_companion(1e3) {
            Err(FrontError::IntegralNonPositive { integral }) => assert!(integral < 0.0),
            other => panic!("expected IntegralNonPositive, got {other:?}"),
        }
        assert!(env.bistable_companion(-1.0).is_err());
    }

    /// Closed-form flow of the separable ODE `u' = a(t)(u-θ)(1-u)`.
    fn separable_oracle(theta: f64, a0: f64, integrated_amplitude: f64) -> f64 {
        if a0 <= theta || a0 == 1.0 {
            return a0;
        }
        let k = 1.0 - theta;
        let r = (a0 - theta) / (1.0 - a0) * (k * integrated_amplitude).exp();
        (theta + r) / (1.0 + r)
    }

    #[test]
    fn ode_flow_matches_separable_closed_form() {
        let env = default_env();
        assert_eq!(env.ode_flow(0.0, 0.25, 10.0).unwrap(), 0.25);
        assert_eq!(env.ode_flow(0.0, 0.1, 10.0).unwrap(), 0.1);
        assert_eq!(env.ode_flow(0.0, 1.0, 10.0).unwrap(), 1.0);
        for &a0 in &[0.3, 0.6, 0.99, 1.05, 1.5] {
            let got = env.ode_flow(0.0, a0, 7.0).unwrap();
            assert_abs_diff_eq!(got, separable_oracle(0.25, a0, 7.0), epsilon = 1e-9);
        }
        // periodic: ∫_0^t a = t - ρT/(2π) (cos(2πt/T) - 1)
        let per = env
            .with_amplitude(AmplitudeModel::Periodic {
                mean: 1.0,
                rho: 0.5,
                period: 10.0,
            })
            .unwrap();
        let t = 13.0;
        let integral = t - 0.5 * 10.0 / (2.0 * PI) * ((2.0 * PI * t / 10.0).cos() - 1.0);
        assert_abs_diff_eq!(
            per.ode_flow(0.0, 0.4, t).unwrap(),
            separable_oracle(0.25, 0.4, integral),
            epsilon = 1e-9
        );
    }

    #[test]
    fn ode_flow_telegraph_uses_switch_times() {
        let tg = Telegraph {
            holding_rate: 1.0,
            a_min: 0.5,
            a_max: 2.0,
            seed: 3,
        };
        let env = ReactionEnv::new(0.25, Shape::Quadratic, AmplitudeModel::Telegraph(tg)).unwrap();
        let (t0, t1) = (0.0, 6.0);
        let mut knots = vec![t0];
        knots.extend(tg.switches(t0, t1).into_iter().filter(|&s| s > t0));
        knots.push(t1);
        let integral: f64 = knots.windows(2).map(|w| tg.sample(w[0]) * (w[1] - w[0])).sum();
        assert_abs_diff_eq!(
            env.ode_flow(t0, 0.3, t1).unwrap(),
            separable_oracle(0.25, 0.3, integral),
            epsilon = 1e-9
        );
    }

    #[test]
    fn ode_flow_approaches_one_monotonically() {
        let env = default_env();
        let mut prev = 0.3;
        for k in 1..20 {
            let u = env.ode_flow(0.0, 0.3, k as f64).unwrap();
            assert!(u > prev && u < 1.0);
            prev = u;
        }
        assert!(env.ode_flow(0.0, 0.3, 80.0).unwrap() > 1.0 - 1e-9);
        let mut prev = 1.3;
        for k in 1..20 {
            let u = env.ode_flow(0.0, 1.3, k as f64).unwrap();
            assert!(u < prev && u > 1.0);
            prev = u;
        }
    }

    /// Exact time average of a piecewise-constant amplitude over `[0, t_end]`.
    fn telegraph_average(tg: &Telegraph, t_end: f64) -> f64 {
        let mut knots = vec![0.0];
        knots.extend(tg.switches(0.0, t_end).into_iter().filter(|&s| s > 0.0));
        knots.push(t_end);
        knots
            .windows(2)
            .map(|w| (w[1] - w[0]) * tg.sample(0.5 * (w[0] + w[1])))
            .sum::<f64>()
            / t_end
    }

    #[test]
    fn telegraph_time_average_approaches_mean() {
        for seed in 0..5 {
            let tg = Telegraph {
                holding_rate: 0.5,
                a_min: 0.5,
                a_max: 2.0,
                seed,
            };
            let sigma2 = (tg.a_max - tg.a_min).powi(2) / 12.0;
            let mean = 0.5 * (tg.a_min + tg.a_max);
            for t_end in [1e3, 1e4] {
                // correlation e^{-rτ} integrates to 2/r
                let se = (2.0 * sigma2 / (tg.holding_rate * t_end)).sqrt();
                let avg = telegraph_average(&tg, t_end);
                assert!((avg - mean).abs() <= 3.0 * se, "seed {seed}, T {t_end}: {avg} vs {mean} ± {se}");
            }
        }
    }

    fn any_env() -> impl Strategy<Value = ReactionEnv> {
        let periodic = (0.5f64..2.0, 0.0f64..0.9, 1.0f64..20.0).prop_map(|(mean, r, period)| AmplitudeModel::Periodic {
            mean,
            rho: r,
            period,
        });
        let telegraph = (0.1f64..2.0, 0.2f64..1.0, 0.0f64..2.0, any::<u64>()).prop_map(|(rate, lo, span, seed)| {
            AmplitudeModel::Telegraph(Telegraph {
                holding_rate: rate,
                a_min: lo,
                a_max: lo + span,
                seed,
            })
        });
        let constant = (0.1f64..3.0).prop_map(|a| AmplitudeModel::Constant { a });
        (0.05f64..0.9, prop_oneof![constant, periodic, telegraph])
            .prop_map(|(theta, amp)| ReactionEnv::new(theta, Shape::Quadratic, amp).unwrap())
    }

    proptest! {
        #[test]
        fn reaction_lies_between_envelopes(env in any_env(), t in -500.0f64..500.0, w in 0.0f64..=1.0) {
            let u = env.theta + w * (1.0 - env.theta);
            let f = env.eval_f(t, u);
            prop_assert!(env.f_inf(u) <= f && f <= env.f_sup(u));
            let a = env.sample_amplitude(t);
            prop_assert!(env.a_min() <= a && a <= env.a_max());
        }

        #[test]
        fn ignition_sign_pattern(env in any_env(), t in -500.0f64..500.0, u in -1.0f64..3.0) {
            let f = env.eval_f(t, u);
            if u <= env.theta || u == 1.0 {
                prop_assert_eq!(f, 0.0);
            } else if u < 1.0 {
                prop_assert!(f > 0.0);
            } else {
                prop_assert!(f < 0.0);
            }
        }

        #[test]
        fn ode_flow_is_order_preserving(
            env in any_env(),
            t0 in -50.0f64..50.0,
            span in 0.0f64..20.0,
            a0 in -0.5f64..1.5,
            gap in 0.0f64..1.0,
        ) {
            let lo = env.ode_flow(t0, a0, t0 + span).unwrap();
            let hi = env.ode_flow(t0, a0 + gap, t0 + span).unwrap();
            // separate adaptive step sequences agree only to the local tolerance
            prop_assert!(lo <= hi + 10.0 * ODE_RTOL, "{} > {}", lo, hi);
        }
    }
}
