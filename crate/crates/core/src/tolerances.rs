//! Numerical defaults shared across modules.

/// Spatial step of the PDE grid.
pub const DX: f64 = 0.05;
/// Time step of the IMEX stepper.
pub const DT: f64 = 0.02;
/// Width of the moving window.
pub const WINDOW_WIDTH: f64 = 400.0;
/// Distance right of the window center that ξ_θ may drift before the window is re-centered.
pub const SHIFT_MARGIN: f64 = 50.0;

/// Uniform step of the shooting integrator and of stored wave profiles.
pub const PROFILE_DX: f64 = 1e-3;
/// Default domain of stored ignition profiles, extended when tails are not yet within tolerance.
pub const PROFILE_X_LO: f64 = -60.0;
pub const PROFILE_X_HI: f64 = 40.0;
/// Distance from 1 at which the shooting trajectory is continued by its linearized tail.
pub const TAIL_SWITCH: f64 = 1e-4;
/// Offset from u = 1 along the unstable direction for bistable shooting.
pub const BISTABLE_LAUNCH: f64 = 1e-6;
/// Forward integration budget for bistable shooting.
pub const BISTABLE_X_MAX: f64 = 400.0;
pub const SHOOT_TOL: f64 = 1e-8;
pub const TAIL_TOL: f64 = 1e-8;
/// Finite-difference ODE residual bound on stored profiles.
pub const RESIDUAL_TOL: f64 = 1e-4;
pub const BISECTION_CAP: usize = 200;

/// Nodes at or below this value are ignored by the envelope interface.
pub const U_FLOOR: f64 = 1e-12;
/// Smallest |u_x| accepted by the interface speed formula.
pub const STEEP_FLOOR: f64 = 1e-6;

pub const SHIFT_TOL: f64 = 1e-8;
pub const CAUCHY_TOL: f64 = 1e-4;
pub const PER_TOL: f64 = 1e-4;

/// Slack allowed when comparing ordered discrete solutions.
pub const ORDER_TOL: f64 = 1e-10;

/// Burn-in before ensemble statistics start.
pub const T_BURN: f64 = 50.0;
/// Start time of approximating runs in the canonical scenarios.
pub const SCENARIO_START: f64 = -50.0;
