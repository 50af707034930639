//! Level-set interfaces, the exponential-envelope interface, interface speeds
//! and the width and steepness statistics built from them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::pde_core::{derivatives, Field, Medium};
use crate::tolerances::{STEEP_FLOOR, U_FLOOR};

/// Index of the bracketing cell `[i, i+1]` with `u_i ≥ λ > u_{i+1}`.
fn crossing_cell(field: &Field, level: f64) -> Result<usize> {
    let u = &field.values;
    let out_of_range = || {
        let (min, max) = u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        FrontError::LevelOutOfRange { level, min, max }
    };
    match field.last_at_least(level) {
        Some(i) if i + 1 < u.len() => Ok(i),
        _ => Err(out_of_range()),
    }
}

/// Start of the four-node stencil around cell `i`.
fn stencil_start(i: usize, n: usize) -> usize {
    i.saturating_sub(1).min(n - 4)
}

/// Cubic Lagrange interpolation through four equispaced nodes starting at `x0`.
#[inline]
fn cubic4(x0: f64, h: f64, v: &[f64], x: f64) -> f64 {
    let s = (x - x0) / h;
    let (s0, s1, s2, s3) = (s, s - 1.0, s - 2.0, s - 3.0);
    -v[0] * s1 * s2 * s3 / 6.0 + v[1] * s0 * s2 * s3 / 2.0 - v[2] * s0 * s1 * s3 / 2.0
        + v[3] * s0 * s1 * s2 / 6.0
}

/// Interpolates `values` (sampled on the field grid) at `x` with the cubic
/// stencil around the cell containing `x`.
pub fn interpolate_at(field: &Field, values: &[f64], x: f64) -> f64 {
    let g = &field.grid;
    let s = ((x - g.x_left()) / g.dx).floor().clamp(0.0, (g.n - 2) as f64) as usize;
    let j = stencil_start(s, g.n);
    cubic4(g.x(j), g.dx, &values[j..j + 4], x)
}

/// Position where the monotone field crosses `level`.
///
/// The crossing cell is found by a scan from the right; inside it the root of
/// the cubic through the four surrounding nodes is taken.
pub fn xi_lambda(field: &Field, level: f64) -> Result<f64> {
    let i = crossing_cell(field, level)?;
    let g = &field.grid;
    let j = stencil_start(i, g.n);
    let v = &field.values[j..j + 4];
    let (mut lo, mut hi) = (g.x(i), g.x(i + 1));
    if field.values[i] == level {
        return Ok(lo);
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if cubic4(g.x(j), g.dx, v, mid) >= level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `sup_i (x_i + ln u_i / λ_κ)` over nodes above `u_floor`, the smallest `y`
/// with `u ≤ e^{-λ_κ (x - y)}` on the admissible nodes.
pub fn xi_envelope(field: &Field, kappa: f64) -> Result<f64> {
    xi_envelope_with_floor(field, kappa, U_FLOOR)
}

pub fn xi_envelope_with_floor(field: &Field, kappa: f64, floor: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(invalid("kappa", format!("must be positive, got {kappa}")));
    }
    let inv = 1.0 / kappa.sqrt();
    let g = &field.grid;
    field
        .values
        .iter()
        .enumerate()
        .filter(|(_, &u)| u > floor)
        .map(|(i, &u)| g.x(i) + u.ln() * inv)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(FrontError::AllBelowFloor { floor })
}

/// `(ξ_λ, u_x(ξ_λ), u_t(ξ_λ))` with both derivative fields interpolated at the crossing.
pub fn interface_derivatives<M: Medium + ?Sized>(
    field: &Field,
    medium: &M,
    level: f64,
) -> Result<(f64, f64, f64)> {
    let xi = xi_lambda(field, level)?;
    let (ux, ut) = derivatives(field, medium);
    Ok((xi, interpolate_at(field, &ux, xi), interpolate_at(field, &ut, xi)))
}

/// `-u_t / u_x` at `ξ_λ`.
pub fn interface_speed<M: Medium + ?Sized>(field: &Field, medium: &M, level: f64) -> Result<f64> {
    let (_, ux, ut) = interface_derivatives(field, medium, level)?;
    speed_from(ux, ut)
}

fn speed_from(ux: f64, ut: f64) -> Result<f64> {
    if ux.abs() < STEEP_FLOOR {
        return Err(FrontError::DegenerateSlope {
            slope: ux,
            floor: STEEP_FLOOR,
        });
    }
    Ok(-ut / ux)
}

/// Observation of one time slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub xi_theta: f64,
    /// `ξ_λ` for each tracked level, in the order of `InterfaceTrace::levels`.
    pub xi: Vec<f64>,
    pub xi_envelope: f64,
    /// `u_x(t, ξ_θ)`.
    pub slope_theta: f64,
    /// `-u_t/u_x` at `ξ_θ`; NaN when the slope is degenerate.
    #[serde(deserialize_with = "crate::output::nullable")]
    pub speed_formula: f64,
    /// `min -u_x` over `[ξ_θ - M, ξ_θ + M]` for each radius `M`.
    pub steepness: Vec<f64>,
    /// Largest `|u|` within the outer shift margin on the right.
    pub edge_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTrace {
    pub theta: f64,
    pub levels: Vec<f64>,
    pub kappa: f64,
    pub radii: Vec<f64>,
    pub edge_margin: f64,
    pub samples: Vec<TraceSample>,
    /// Number of samples whose slope fell below the floor.
    pub degenerate_events: usize,
}

impl InterfaceTrace {
    pub fn new(theta: f64, levels: Vec<f64>, kappa: f64, radii: Vec<f64>, edge_margin: f64) -> Self {
        Self {
            theta,
            levels,
            kappa,
            radii,
            edge_margin,
            samples: Vec::new(),
            degenerate_events: 0,
        }
    }

    pub fn record<M: Medium + ?Sized>(&mut self, field: &Field, medium: &M) -> Result<()> {
        let g = &field.grid;
        let xi_theta = xi_lambda(field, self.theta)?;
        let xi = self
            .levels
            .iter()
            .map(|&l| xi_lambda(field, l))
            .collect::<Result<Vec<_>>>()?;
        let xi_envelope = xi_envelope(field, self.kappa)?;
        let (ux, ut) = derivatives(field, medium);
        let slope_theta = interpolate_at(field, &ux, xi_theta);
        let speed_formula = match speed_from(slope_theta, interpolate_at(field, &ut, xi_theta)) {
            Ok(v) => v,
            Err(_) => {
                self.degenerate_events += 1;
                f64::NAN
            }
        };
        let steepness = self
            .radii
            .iter()
            .map(|&m| {
                let mut lo = -interpolate_at(field, &ux, xi_theta - m);
                lo = lo.min(-interpolate_at(field, &ux, (xi_theta + m).min(g.x_right())));
                lo = lo.min(-slope_theta);
                (0..g.n)
                    .filter(|&i| (g.x(i) - xi_theta).abs() <= m)
                    .map(|i| -ux[i])
                    .fold(lo, f64::min)
            })
            .collect();
        let edge_from = g.x_right() - self.edge_margin;
        let edge_value = (0..g.n)
            .filter(|&i| g.x(i) >= edge_from)
            .map(|i| field.values[i].abs())
            .fold(0.0, f64::max);
        self.samples.push(TraceSample {
            t: field.t,
            xi_theta,
            xi,
            xi_envelope,
            slope_theta,
            speed_formula,
            steepness,
            edge_value,
        });
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&l| (l - level).abs() < 1e-12)
    }

    /// Positions of a tracked level (θ included).
    pub fn path(&self, level: f64) -> Option<Vec<f64>> {
        if (level - self.theta).abs() < 1e-12 {
            return Some(self.samples.iter().map(|s| s.xi_theta).collect());
        }
        let k = self.level_index(level)?;
        Some(self.samples.iter().map(|s| s.xi[k]).collect())
    }

    /// Centered finite-difference speed of `ξ_θ` (one-sided at the ends).
    pub fn speed_fd(&self) -> Vec<f64> {
        fd_speed(&self.times(), &self.path(self.theta).expect("θ is tracked"))
    }

    /// Samples with `t ≥ t_from`.
    /// Median sampling interval.
    pub fn every(&self) -> Option<f64> {
        let gaps: Vec<f64> = self.samples.windows(2).map(|w| w[1].t - w[0].t).collect();
        (!gaps.is_empty()).then(|| median(&gaps))
    }

    pub fn after(&self, t_from: f64) -> impl Iterator<Item = &TraceSample> {
        self.samples.iter().filter(move |s| s.t >= t_from - 1e-9)
    }
}

/// Centered differences of a path on (possibly uneven) sample times.
pub fn fd_speed(t: &[f64], x: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Delay after which the steepness at `ξ_θ` stays comparable to its long-run level:
/// the first time `-u_x(ξ_θ)` reaches half the median over the second half of the run.
pub fn estimate_delay(trace: &InterfaceTrace) -> f64 {
    let s = &trace.samples;
    if s.is_empty() {
        return f64::NAN;
    }
    let half = median(&s[s.len() / 2..].iter().map(|x| -x.slope_theta).collect::<Vec<_>>());
    s.iter()
        .find(|x| -x.slope_theta >= 0.5 * half)
        .map_or(s[s.len() - 1].t, |x| x.t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthStats {
    pub times: Vec<f64>,
    pub widths: Vec<f64>,
    pub running_max: Vec<f64>,
    pub median: f64,
    /// Largest width at times `≥ t_from`.
    pub post_transient_max: f64,
}

impl WidthStats {
    /// Largest width over `[a, b]`.
    pub fn max_over(&self, a: f64, b: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.widths)
            .filter(|(t, _)| **t >= a - 1e-9 && **t <= b + 1e-9)
            .map(|(_, w)| *w)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `|ξ_{l1}(t) - ξ_{l2}(t)|` with its running max, median and post-transient max.
pub fn width(trace: &InterfaceTrace, l1: f64, l2: f64, t_from: f64) -> Result<WidthStats> {
    let p1 = trace
        .path(l1)
        .ok_or_else(|| invalid("l1", format!("level {l1} is not tracked")))?;
    let p2 = trace
        .path(l2)
        .ok_or_else(|| invalid("l2", format!("level {l2} is not tracked")))?;
    let times = trace.times();
    let widths: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| (a - b).abs()).collect();
    let mut running_max = Vec::with_capacity(widths.len());
    let mut m = f64::NEG_INFINITY;
    for &w in &widths {
        m = m.max(w);
        running_max.push(m);
    }
    let post_transient_max = times
        .iter()
        .zip(&widths)
        .filter(|(t, _)| **t >= t_from)
        .map(|(_, w)| *w)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(WidthStats {
        median: median(&widths),
        times,
        widths,
        running_max,
        post_transient_max,
    })
}

/// Per-time `min -u_x` over `[ξ_θ - M, ξ_θ + M]` for a recorded radius.
pub fn steepness(trace: &InterfaceTrace, radius: f64) -> Result<Vec<(f64, f64)>> {
    let k = trace
        .radii
        .iter()
        .position(|&m| (m - radius).abs() < 1e-12)
        .ok_or_else(|| invalid("radius", format!("radius {radius} was not recorded")))?;
    Ok(trace.samples.iter().map(|s| (s.t, s.steepness[k])).collect())
}

/// `(infimum, median)` of a steepness series over `t ≥ t_from`.
pub fn steepness_summary(series: &[(f64, f64)], t_from: f64) -> (f64, f64) {
    let post: Vec<f64> = series.iter().filter(|(t, _)| *t >= t_from).map(|(_, v)| *v).collect();
    (post.iter().copied().fold(f64::INFINITY, f64::min), median(&post))
}

/// Worst slack of `ξ(t) - ξ(t₀) ≤ c (t - t₀)` over all ordered pairs of samples,
/// with the time at which it is attained.
pub fn envelope_speed_margin(trace: &InterfaceTrace, c: f64) -> (f64, f64) {
    // with g = c t - ξ the condition is g(t) ≥ g(t₀) for t ≥ t₀
    let mut best_prev = f64::NEG_INFINITY;
    let mut worst = (f64::INFINITY, f64::NAN);
    for s in &trace.samples {
        let g = c * s.t - s.xi_envelope;
        if best_prev.is_finite() && g - best_prev < worst.0 {
            worst = (g - best_prev, s.t);
        }
        best_prev = best_prev.max(g);
    }
    worst
}

/// `min_t [ξ_θ(t + T*) - ξ_θ(t)]` over samples with `t ≥ t_from`.
pub fn lower_propagation(trace: &InterfaceTrace, t_from: f64, t_star: f64) -> f64 {
    let s = &trace.samples;
    let mut j = 0;
    let mut worst = f64::INFINITY;
    for (i, a) in s.iter().enumerate() {
        if a.t < t_from {
            continue;
        }
        j = j.max(i);
        while j < s.len() && s[j].t < a.t + t_star - 1e-9 {
            j += 1;
        }
        if j == s.len() {
            break;
        }
        worst = worst.min(s[j].xi_theta - a.xi_theta);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde_core::{evolve, Grid, Stepper, StepperConfig};
    use crate::reaction_env::{AmplitudeModel, ReactionEnv};
    use crate::wave_profile::solve_ignition_wave;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn env() -> ReactionEnv {
        ReactionEnv::constant(0.25, 1.0).unwrap()
    }

    #[test]
    fn xi_on_wave_profile() {
        let e = env();
        let w = solve_ignition_wave(&|u| e.f_inf(u), 0.25, 1e-8).unwrap();
        let grid = Grid::centered(0.0, 100.0, 0.05).unwrap();
        let field = Field::from_fn(grid, 0.0, |x| w.eval(x));
        assert!(xi_lambda(&field, 0.25).unwrap().abs() <= 0.05 * 0.05);
        let half = xi_lambda(&field, 0.125).unwrap();
        assert!((half - 2f64.ln() / w.speed).abs() < 1e-5, "{half}");
    }

    #[test]
    fn xi_translation_equivariant() {
        let grid = Grid::centered(0.0, 40.0, 0.05).unwrap();
        let f = |x: f64| 0.5 * (1.0 - (x / 3.0).tanh());
        let a = Field::from_fn(grid, 0.0, f);
        let k = 37.0 * 0.05;
        let b = Field::from_fn(grid, 0.0, |x| f(x - k));
        for l in [0.1, 0.25, 0.5, 0.9] {
            assert_abs_diff_eq!(xi_lambda(&b, l).unwrap() - xi_lambda(&a, l).unwrap(), k, epsilon = 1e-12);
        }
    }

    #[test]
    fn level_out_of_range() {
        let grid = Grid::centered(0.0, 40.0, 0.05).unwrap();
        let flat = Field::new(grid, 0.0, vec![0.2; grid.n], (0.2, 0.2)).unwrap();
        assert!(matches!(xi_lambda(&flat, 0.25), Err(FrontError::LevelOutOfRange { .. })));
        assert!(interface_speed(&flat, &env(), 0.25).is_err());
    }

    #[test]
    fn envelope_interface() {
        let grid = Grid::centered(0.0, 40.0, 0.05).unwrap();
        let (kappa, y0) = (0.09f64, 2.5);
        let lam = kappa.sqrt();
        let exact = Field::new(grid, 0.0, grid.xs().iter().map(|x| (-lam * (x - y0)).exp()).collect(), (1.0, 0.0)).unwrap();
        // the padded ends do not lie on the exponential; drop them from the test
        let mut inner = exact.clone();
        inner.values[0] = inner.values[1];
        let y = xi_envelope(&inner, kappa).unwrap();
        assert_abs_diff_eq!(y, y0, epsilon = 1e-12);
        // steeper decay attains the sup at the leftmost admissible node
        let steep = Field::new(grid, 0.0, grid.xs().iter().map(|x| (-3.0 * (x + 20.0)).exp()).collect(), (1.0, 0.0)).unwrap();
        let y = xi_envelope(&steep, kappa).unwrap();
        assert_abs_diff_eq!(y, grid.x_left(), epsilon = 1e-12);
        let dead = Field::new(grid, 0.0, vec![0.0; grid.n], (0.0, 0.0)).unwrap();
        assert!(matches!(xi_envelope(&dead, kappa), Err(FrontError::AllBelowFloor { .. })));
    }

    #[test]
    fn speed_of_rigid_wave() {
        let e = env();
        let w = solve_ignition_wave(&|u| e.f_inf(u), 0.25, 1e-8).unwrap();
        let grid = Grid::centered(0.0, 100.0, 0.05).unwrap();
        let field = Field::from_fn(grid, 0.0, |x| w.eval(x));
        // away from the ignition kink the stencils see a smooth profile
        for level in [0.1, 0.5, 0.9] {
            let c = interface_speed(&field, &e, level).unwrap();
            assert!((c - w.speed).abs() < 1e-3, "{level}: {c} vs {}", w.speed);
        }
        let (ux, ut) = derivatives(&field, &e);
        for i in (1..grid.n - 1).step_by(50) {
            assert!((ut[i] + w.speed * ux[i]).abs() < 5e-3);
        }
    }

    #[test]
    fn widths_and_steepness_on_frozen_run() {
        let e = env().with_amplitude(AmplitudeModel::Constant { a: 1.0 }).unwrap();
        let w = solve_ignition_wave(&|u| e.f_inf(u), 0.25, 1e-8).unwrap();
        let grid = Grid::centered(0.0, 200.0, 0.05).unwrap();
        let mut field = Field::from_fn(grid, 0.0, |x| w.eval(x));
        let mut trace = InterfaceTrace::new(0.25, vec![0.1, 0.9], w.speed * w.speed / 4.0, vec![0.0, 2.0], 50.0);
        let mut st = Stepper::new(StepperConfig::for_medium(&e, 0.005).unwrap());
        trace.record(&field, &e).unwrap();
        evolve(&mut field, &e, &mut st, 20.0, Some(0.5), &mut |f| trace.record(f, &e)).unwrap();
        let stats = width(&trace, 0.1, 0.9, 0.0).unwrap();
        let profile_width = {
            let g = Field::from_fn(grid, 0.0, |x| w.eval(x));
            xi_lambda(&g, 0.1).unwrap() - xi_lambda(&g, 0.9).unwrap()
        };
        for v in &stats.widths {
            assert!((v - profile_width).abs() < 1e-3, "{v} vs {profile_width}");
        }
        let zero = width(&trace, 0.1, 0.1, 0.0).unwrap();
        assert!(zero.widths.iter().all(|&v| v == 0.0));
        // steepness at radius 2 equals the profile's min slope on [-2, 2]
        let profile_min = (0..=400)
            .map(|k| -w.derivative(-2.0 + k as f64 * 0.01))
            .fold(f64::INFINITY, f64::min);
        let (inf, _) = steepness_summary(&steepness(&trace, 2.0).unwrap(), 0.0);
        assert!((inf - profile_min).abs() < 1e-3, "{inf} vs {profile_min}");
        let (inf0, _) = steepness_summary(&steepness(&trace, 0.0).unwrap(), 0.0);
        assert!(inf0 >= w.speed * 0.25 * (1.0 - 1e-2));
        let speeds = trace.speed_fd();
        for (s, f) in trace.samples.iter().zip(&speeds).skip(1) {
            assert!((s.speed_formula - f).abs() < 5e-3);
        }
        let (margin, _) = envelope_speed_margin(&trace, crate::wave_profile::envelope_speed_bound(&e, trace.kappa).unwrap());
        assert!(margin >= -1e-6);
        assert!(lower_propagation(&trace, 0.0, 5.0) > 0.0);
    }

    #[test]
    fn envelope_margin_detects_fast_path() {
        let mut trace = InterfaceTrace::new(0.25, vec![], 0.04, vec![], 50.0);
        for k in 0..10 {
            let t = k as f64;
            trace.samples.push(TraceSample {
                t,
                xi_theta: 0.0,
                xi: vec![],
                xi_envelope: if k == 6 { 6.0 + 3.0 } else { t },
                slope_theta: -1.0,
                speed_formula: 1.0,
                steepness: vec![],
                edge_value: 0.0,
            });
        }
        let (m, t) = envelope_speed_margin(&trace, 1.0);
        assert_abs_diff_eq!(m, -3.0, epsilon = 1e-12);
        assert_eq!(t, 6.0);
        assert!(envelope_speed_margin(&trace, 1.0).0 < 0.0);
    }

    proptest! {
        #[test]
        fn levels_are_ordered(w1 in 0.5f64..5.0, shift in -5.0f64..5.0) {
            let grid = Grid::centered(0.0, 60.0, 0.05).unwrap();
            let f = Field::from_fn(grid, 0.0, |x| 0.5 * (1.0 - ((x - shift) / w1).tanh()));
            let levels: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
            let xs: Vec<f64> = levels.iter().map(|&l| xi_lambda(&f, l).unwrap()).collect();
            for p in xs.windows(2) {
                prop_assert!(p[0] >= p[1]);
            }
            let kappa = 0.01;
            let y = xi_envelope(&f, kappa).unwrap();
            for (i, &u) in f.values.iter().enumerate() {
                if u > U_FLOOR {
                    prop_assert!(u <= (-(kappa.sqrt()) * (grid.x(i) - y)).exp() * (1.0 + 1e-12));
                }
            }
            prop_assert!(y >= xi_lambda(&f, 0.25).unwrap() - (1.0 / 0.25f64).ln() / kappa.sqrt() - 0.05);
        }
    }
}
