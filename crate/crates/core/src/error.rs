use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its refinement budget before the
    /// requested tolerance was met.
    #[error(
        "accuracy not reached: estimated error {achieved:.3e} exceeds tolerance {required:.3e}"
    )]
    AccuracyNotReached { achieved: f64, required: f64 },

    /// The moment set cannot be matched by any NIG law.
    #[error("infeasible moments: {0}")]
    InfeasibleMoments(String),

    /// A closed form degenerates for these inputs and a different code path
    /// must be used instead.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The approximating density vanishes on a region where the reference
    /// density carries mass.
    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    /// A simulation or run configuration is internally inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
