//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the toolkit, from bad physical inputs to
/// fit non-convergence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A physical parameter is outside its valid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A discretization grid violates one of its resolution bounds.
    #[error("grid error: {0}")]
    Grid(String),

    /// The time integrator lost unitarity beyond its budget.
    #[error("integration failure at step {step}: per-step norm drift {drift:.3e} exceeds budget")]
    Integration { step: usize, drift: f64 },

    /// A trajectory ended before the scatterer finished emitting.
    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    /// The least-squares refinement hit its iteration cap.
    #[error("fit did not converge within {0} iterations")]
    NoConvergence(usize),

    /// Input data carry no usable structure (e.g. constant samples).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Area calibration could not be carried out.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Campaign reduction failed.
    #[error("reduction error: {0}")]
    Reduction(String),

    /// Resonance-voltage estimation failed.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Configuration text could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
