use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("values belong to different surfaces and cannot be combined")]
    ContextMismatch,

    #[error("cannot add W^({lhs}/2) and W^({rhs}/2) terms: half-power parity differs")]
    ParityMismatch { lhs: u32, rhs: u32 },

    #[error("odd half-power W^({0}/2) has no exact rational value")]
    IrrationalValue(u32),

    #[error("symmetry violation ({class}) at {index:?}")]
    SymmetryViolation {
        class: &'static str,
        index: Vec<usize>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate plane ({i}, {j}): metric area element vanishes")]
    DegeneratePlane { i: usize, j: usize },

    #[error("obstruction argument not applicable: {0}")]
    NotApplicable(String),

    #[error("no obstruction: the curvature derivative vanishes identically at the point")]
    NoObstruction,

    #[error("Euler step dt = {dt} too large: metric not positive definite at {point:?}")]
    StepTooLarge { dt: f64, point: Vec<f64> },

    #[error("singular metric sample at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
