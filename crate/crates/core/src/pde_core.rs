//! IMEX stepper for `u_t = u_xx + f(t, u)` on a truncated window that follows the front.
//!
//! Each step applies the reaction explicitly and then solves the implicit-Euler
//! diffusion system with Dirichlet data. With `dt·L ≤ 1` both stages are
//! monotone maps, so ordered data stay ordered.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FrontError, Result};
use crate::tolerances;

/// A reaction term as seen by the stepper.
pub trait Medium: Sync {
    fn rate(&self, t: f64, u: f64) -> f64;

    /// Reaction rate at every entry of `u`, evaluated at time `t`.
    fn rate_field(&self, t: f64, u: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = self.rate(t, v);
        }
    }

    /// Bound on `-∂f/∂u` over the state range, used for the step restriction.
    fn lipschitz(&self) -> f64;

    /// First time strictly inside `(t0, t1)` at which the medium jumps.
    fn next_switch(&self, _t0: f64, _t1: f64) -> Option<f64> {
        None
    }

    /// Level whose crossing drives the window shifts.
    fn tracking_level(&self) -> f64;
}

/// The heat equation, `f ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PureDiffusion;

impl Medium for PureDiffusion {
    fn rate(&self, _t: f64, _u: f64) -> f64 {
        0.0
    }

    fn rate_field(&self, _t: f64, _u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn lipschitz(&self) -> f64 {
        0.0
    }

    fn tracking_level(&self) -> f64 {
        0.5
    }
}

/// Uniform grid whose nodes sit on the global lattice `x = k·dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Lattice index of the leftmost node.
    pub i_left: i64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_left: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(invalid("dx", format!("must be positive, got {dx}")));
        }
        if n < 16 {
            return Err(invalid("n", format!("need at least 16 nodes, got {n}")));
        }
        let k = x_left / dx;
        if (k - k.round()).abs() > 1e-6 {
            return Err(invalid("x_left", format!("{x_left} is not on the lattice of step {dx}")));
        }
        Ok(Self {
            i_left: k.round() as i64,
            dx,
            n,
        })
    }

    /// Lattice window of the given width whose center node is the lattice point nearest `center`.
    pub fn centered(center: f64, width: f64, dx: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(invalid("width", format!("must be positive, got {width}")));
        }
        let half = (width / (2.0 * dx)).round() as i64;
        let mid = (center / dx).round() as i64;
        Self::new((mid - half) as f64 * dx, dx, (2 * half + 1) as usize)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (self.i_left + i as i64) as f64 * self.dx
    }

    pub fn x_left(&self) -> f64 {
        self.x(0)
    }

    pub fn x_right(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_left() + self.x_right())
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Node index of a lattice point, if it lies in the window.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.dx).round() as i64 - self.i_left;
        (0..self.n as i64).contains(&k).then_some(k as usize)
    }
}

/// One time slice of the discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<f64>,
    /// Dirichlet data `(left, right)`.
    pub boundary: (f64, f64),
}

impl Field {
    /// Field with the end nodes overwritten by the boundary data.
    pub fn new(grid: Grid, t: f64, mut values: Vec<f64>, boundary: (f64, f64)) -> Result<Self> {
        if values.len() != grid.n {
            return Err(invalid(
                "values",
                format!("expected {} values, got {}", grid.n, values.len()),
            ));
        }
        values[0] = boundary.0;
        values[grid.n - 1] = boundary.1;
        Ok(Self {
            grid,
            t,
            values,
            boundary,
        })
    }

    /// Front-like field with boundary data `(1, 0)`.
    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n).map(|i| f(grid.x(i))).collect();
        Self::new(grid, t, values, (1.0, 0.0)).expect("length matches grid")
    }

    /// Value at a lattice point, padding with the boundary data outside the window.
    pub fn at_lattice(&self, x: f64) -> f64 {
        let k = (x / self.grid.dx).round() as i64 - self.grid.i_left;
        if k < 0 {
            self.boundary.0
        } else if k >= self.grid.n as i64 {
            self.boundary.1
        } else {
            self.values[k as usize]
        }
    }

    /// Linear interpolation, padding with the boundary data outside the window.
    pub fn sample(&self, x: f64) -> f64 {
        let s = (x - self.grid.x_left()) / self.grid.dx;
        if s <= 0.0 {
            return if s == 0.0 { self.values[0] } else { self.boundary.0 };
        }
        let i = s.floor() as usize;
        if i >= self.grid.n - 1 {
            return if i == self.grid.n - 1 && s == i as f64 {
                self.values[i]
            } else {
                self.boundary.1
            };
        }
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    /// Rightmost node whose value is at least `level`.
    pub fn last_at_least(&self, level: f64) -> Option<usize> {
        self.values.iter().rposition(|&v| v >= level)
    }
}

/// Re-window `field` so that its left node sits at `new_x_left`.
///
/// Nodes entering on the left take the left boundary value, nodes entering on
/// the right the right boundary value.
pub fn shift_window(field: &Field, new_x_left: f64) -> Result<Field> {
    let dx = field.grid.dx;
    let k = (new_x_left - field.grid.x_left()) / dx;
    if (k - k.round()).abs() > 1e-6 {
        return Err(invalid("new_x_left", format!("{new_x_left} is off the lattice")));
    }
    let k = k.round() as i64;
    if k == 0 {
        return Ok(field.clone());
    }
    let n = field.grid.n as i64;
    let level = 0.5 * (field.boundary.0 + field.boundary.1);
    if let Some(cross) = field.last_at_least(level) {
        let after = cross as i64 - k;
        if after < 1 || after > n - 2 {
            return Err(FrontError::ShiftTooLarge { shift: k });
        }
    }
    let values = (0..n)
        .map(|i| {
            let src = i + k;
            if src < 0 {
                field.boundary.0
            } else if src >= n {
                field.boundary.1
            } else {
                field.values[src as usize]
            }
        })
        .collect();
    let grid = Grid {
        i_left: field.grid.i_left + k,
        ..field.grid
    };
    Ok(Field {
        grid,
        t: field.t,
        values,
        boundary: field.boundary,
    })
}

/// Centered `u_x` (one-sided second order at the ends) and the right-hand side
/// `u_xx + f(t, u)` (zero at the Dirichlet nodes).
pub fn derivatives<M: Medium + ?Sized>(field: &Field, medium: &M) -> (Vec<f64>, Vec<f64>) {
    let u = &field.values;
    let n = u.len();
    let dx = field.grid.dx;
    let mut ux = vec![0.0; n];
    let mut ut = vec![0.0; n];
    ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
    ux[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
    medium.rate_field(field.t, u, &mut ut);
    let inv_dx2 = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        ut[i] += (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2;
    }
    ut[0] = 0.0;
    ut[n - 1] = 0.0;
    (ux, ut)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub lipschitz: f64,
    /// The window is re-centered once ξ drifts this far right of its center.
    /// `f64::INFINITY` disables shifting.
    pub shift_margin: f64,
}

impl StepperConfig {
    pub fn new(dt: f64, lipschitz: f64, shift_margin: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(lipschitz >= 0.0) {
            return Err(invalid("lipschitz", format!("must be nonnegative, got {lipschitz}")));
        }
        if dt * lipschitz > 1.0 {
            return Err(invalid(
                "dt",
                format!("dt·L = {} exceeds 1; reaction step is not monotone", dt * lipschitz),
            ));
        }
        if !(shift_margin > 0.0) {
            return Err(invalid("shift_margin", "must be positive"));
        }
        Ok(Self {
            dt,
            lipschitz,
            shift_margin,
        })
    }

    pub fn for_medium<M: Medium + ?Sized>(medium: &M, dt: f64) -> Result<Self> {
        Self::new(dt, medium.lipschitz(), tolerances::SHIFT_MARGIN)
    }

    pub fn without_shifts(self) -> Self {
        Self {
            shift_margin: f64::INFINITY,
            ..self
        }
    }
}

/// Thomas factorization of `(I - h D₂)` on the interior nodes.
#[derive(Debug, Clone)]
struct DiffusionSolve {
    r: f64,
    c_prime: Vec<f64>,
    inv_den: Vec<f64>,
}

impl DiffusionSolve {
    fn new(h: f64, dx: f64, n: usize) -> Result<Self> {
        let m = n - 2;
        let r = h / (dx * dx);
        let b = 1.0 + 2.0 * r;
        let mut c_prime = vec![0.0; m];
        let mut inv_den = vec![0.0; m];
        let mut prev = 0.0;
        for i in 0..m {
            let den = b - r * prev;
            if den == 0.0 || !den.is_finite() {
                return Err(FrontError::LinearSolveFailure { row: i + 1 });
            }
            inv_den[i] = 1.0 / den;
            c_prime[i] = -r * inv_den[i];
            prev = -c_prime[i];
        }
        Ok(Self {
            r,
            c_prime,
            inv_den,
        })
    }

    /// Applies `(I - h D₂)⁻¹` in place to `u[1..n-1]`, with `u[0]` and `u[n-1]`
    /// holding the Dirichlet data. Works on the increment `u_new - u`, so
    /// locally constant data are reproduced exactly.
    fn solve(&self, u: &mut [f64], delta: &mut Vec<f64>) {
        let n = u.len();
        let m = n - 2;
        delta.resize(m, 0.0);
        let mut prev = 0.0;
        for i in 0..m {
            let rhs = self.r * ((u[i] - u[i + 1]) + (u[i + 2] - u[i + 1]));
            let d = (rhs + self.r * prev) * self.inv_den[i];
            delta[i] = d;
            prev = d;
        }
        for i in (0..m - 1).rev() {
            delta[i] -= self.c_prime[i] * delta[i + 1];
        }
        for i in 0..m {
            u[i + 1] += delta[i];
        }
    }
}

/// Stepper with the diffusion factorization cached for the nominal step.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub cfg: StepperConfig,
    nominal: Option<(f64, usize, DiffusionSolve)>,
    scratch: Vec<f64>,
    delta: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: StepperConfig) -> Self {
        Self {
            cfg,
            nominal: None,
            scratch: Vec::new(),
            delta: Vec::new(),
        }
    }

    fn substep<M: Medium + ?Sized>(&mut self, field: &mut Field, medium: &M, t: f64, h: f64) -> Result<()> {
        let n = field.grid.n;
        let dx = field.grid.dx;
        self.scratch.resize(n, 0.0);
        medium.rate_field(t, &field.values, &mut self.scratch);
        for i in 1..n - 1 {
            field.values[i] += h * self.scratch[i];
        }
        field.values[0] = field.boundary.0;
        field.values[n - 1] = field.boundary.1;
        let nominal = h == self.cfg.dt;
        if nominal {
            let stale = !matches!(&self.nominal, Some((d, m, _)) if *d == dx && *m == n);
            if stale {
                self.nominal = Some((dx, n, DiffusionSolve::new(h, dx, n)?));
            }
            let (_, _, solve) = self.nominal.as_ref().expect("just filled");
            solve.solve(&mut field.values, &mut self.delta);
        } else {
            DiffusionSolve::new(h, dx, n)?.solve(&mut field.values, &mut self.delta);
        }
        Ok(())
    }

    /// Advances `field` from `field.t` to `t_next`, splitting at switch times of the medium.
    pub fn advance_to<M: Medium + ?Sized>(&mut self, field: &mut Field, medium: &M, t_next: f64) -> Result<()> {
        let dt = self.cfg.dt;
        let mut t = field.t;
        while t < t_next {
            let stop = medium.next_switch(t, t_next).unwrap_or(t_next);
            let mut h = stop - t;
            if (h - dt).abs() <= 1e-9 * dt {
                h = dt;
            }
            self.substep(field, medium, t, h)?;
            t = stop;
        }
        field.t = t_next;
        Ok(())
    }

    /// One nominal step.
    pub fn step<M: Medium + ?Sized>(&mut self, field: &mut Field, medium: &M) -> Result<()> {
        let t_next = field.t + self.cfg.dt;
        self.advance_to(field, medium, t_next)
    }

    /// Re-centers the window on the tracked crossing once it drifts past the margin.
    pub fn maybe_shift<M: Medium + ?Sized>(&self, field: &mut Field, medium: &M) -> Result<bool> {
        if !self.cfg.shift_margin.is_finite() {
            return Ok(false);
        }
        let grid = field.grid;
        let center = grid.center();
        let probe = match grid.index_of(center + self.cfg.shift_margin) {
            Some(j) => j,
            None => grid.n - 2,
        };
        let level = medium.tracking_level();
        if field.values[probe] < level {
            return Ok(false);
        }
        let cross = field.last_at_least(level).unwrap_or(probe);
        let k = ((grid.x(cross) - center) / grid.dx).floor();
        if k <= 0.0 {
            return Ok(false);
        }
        *field = shift_window(field, grid.x_left() + k * grid.dx)?;
        Ok(true)
    }
}

/// One IMEX step as a pure function.
pub fn step<M: Medium + ?Sized>(field: &Field, medium: &M, cfg: StepperConfig) -> Result<Field> {
    let mut out = field.clone();
    Stepper::new(cfg).step(&mut out, medium)?;
    Ok(out)
}

/// Evolves `field` to `t_end` on the lattice `t_k = t0 + k·dt`, shifting the
/// window as needed and calling `observe` after every `every` time units.
///
/// `t_end - t0` must be a whole number of steps.
pub fn evolve<M: Medium + ?Sized>(
    field: &mut Field,
    medium: &M,
    stepper: &mut Stepper,
    t_end: f64,
    every: Option<f64>,
    observe: &mut dyn FnMut(&Field) -> Result<()>,
) -> Result<()> {
    let dt = stepper.cfg.dt;
    let t0 = field.t;
    if t_end < t0 {
        return Err(invalid("t_end", format!("{t_end} precedes the field time {t0}")));
    }
    let steps = lattice_count(t_end - t0, dt, "t_end")?;
    let cadence = match every {
        Some(e) => Some(lattice_count(e, dt, "every")?.max(1)),
        None => None,
    };
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { t0 + k as f64 * dt };
        stepper.advance_to(field, medium, t_next)?;
        stepper.maybe_shift(field, medium)?;
        if let Some(c) = cadence {
            if k % c == 0 {
                observe(field)?;
            }
        }
    }
    Ok(())
}

/// `span / dt` as an integer, rejecting spans off the lattice.
pub fn lattice_count(span: f64, dt: f64, name: &'static str) -> Result<usize> {
    let k = span / dt;
    if (k - k.round()).abs() > 1e-6 * k.abs().max(1.0) {
        return Err(invalid(name, format!("{span} is not a whole number of steps of {dt}")));
    }
    Ok(k.round() as usize)
}
