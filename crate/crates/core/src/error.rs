use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ring needs n >= 3 oscillators (got {0}); the lattice is integrable for n = 1 and n = 2")]
    TooFewOscillators(usize),

    #[error("amplitude mu must be positive and finite (got {0})")]
    InvalidAmplitude(f64),

    #[error("mode index k = {k} outside 1..={n}")]
    ModeOutOfRange { n: usize, k: usize },

    #[error("state has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block m_{k}(nu = {nu}) is singular (|det| = {det:e}); step off the critical frequency")]
    SingularBlock { k: usize, nu: f64, det: f64 },

    #[error("delta_{k} is undefined because alpha_{k} = 0 (n = {n})")]
    UndefinedDelta { n: usize, k: usize },

    #[error("mu = {mu} coincides with the degenerate amplitude mu_{k} = {mu_k}")]
    DegenerateAmplitude { mu: f64, k: usize, mu_k: f64 },

    #[error("custom potential error: {0}")]
    Potential(String),

    #[error("Newton solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian is singular (sigma_min / sigma_max = {ratio:e})")]
    SingularJacobian {
        ratio: f64,
        /// Right singular vector for the smallest singular value, in solver coordinates.
        null_direction: Vec<f64>,
    },

    #[error("implicit step {step} at t = {t} did not converge; try a smaller dt")]
    StepFailed { step: usize, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
