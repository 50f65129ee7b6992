use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid soliton spec: {0}")]
    InvalidSpec(String),

    /// The dressing matrix is singular at this sample: the solution has a pole.
    #[error("pole of the dressed solution at x = {x}, t = {t}")]
    Pole { x: f64, t: f64 },

    #[error("spectral parameter {re}{im:+}i lies on a pole of the sectional solution")]
    PoleAtLambda { re: f64, im: f64 },

    #[error("linear solve failed: matrix is exactly singular at an unmasked node (x = {x}, t = {t})")]
    LinearSolveFailure { x: f64, t: f64 },

    #[error("exponent overflow: |Re theta| = {0} exceeds the f64 exponent range")]
    Overflow(f64),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("potential does not decay at the domain ends: {0}")]
    DecayViolation(String),

    #[error("ODE integration failed: step size underflow at x = {x}")]
    StiffnessFailure { x: f64 },

    #[error("Jost solution is not invertible at x = {x}")]
    SingularJost { x: f64 },

    #[error("contour passes through (or too near) a zero of s11 near {re}{im:+}i")]
    ContourThroughZero { re: f64, im: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
