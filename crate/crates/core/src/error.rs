use thiserror::Error;

/// Everything that can go wrong while building or checking a front.
#[derive(Debug, Error)]
pub enum FrontError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bistable companion has nonpositive integral {integral:.3e}; shrink delta_B")]
    IntegralNonPositive { integral: f64 },

    #[error("adaptive ODE integration failed at t = {t}: step size underflow")]
    StepFailure { t: f64 },

    #[error("speed bracket [{lo}, {hi}] does not exhibit the shooting dichotomy")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("tridiagonal solve failed: zero pivot at row {row}")]
    LinearSolveFailure { row: usize },

    #[error("window shift of {shift} nodes would push the interface out of the window")]
    ShiftTooLarge { shift: i64 },

    #[error("level {level} is not attained on the window (range [{min}, {max}])")]
    LevelOutOfRange { level: f64, min: f64, max: f64 },

    #[error("every node lies below the floor {floor:e}")]
    AllBelowFloor { floor: f64 },

    #[error("|u_x| = {slope:.3e} at the interface is below the floor {floor:e}")]
    DegenerateSlope { slope: f64, floor: f64 },

    #[error("Cauchy gaps did not fall below {tol:e}: {gaps:?}")]
    NonCauchy { gaps: Vec<f64>, tol: f64 },

    #[error("period map residual stayed at {residual:.3e} (> {tol:e}) after {periods} periods")]
    NoContraction { residual: f64, tol: f64, periods: usize },

    #[error("no admissible comparison speed below {cap}")]
    NoAdmissibleC { cap: f64 },

    #[error("no admissible delay below {cap}")]
    NoAdmissibleDelay { cap: f64 },

    #[error("need at least {need} snapshots, have {have}")]
    InsufficientSnapshots { need: usize, have: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("missing run artifact {0}")]
    MissingArtifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FrontError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FrontError {
    FrontError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
