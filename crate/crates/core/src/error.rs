use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by grid construction, state validation and the two engines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { max_asymmetry: f64, tolerance: f64 },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("invalid pointer state: {reason}")]
    InvalidPointerState { reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid cannot resolve the requested state: {reason}")]
    GridResolution { reason: String },

    #[error("translation by {shift:.6e} leaves the box (|shift| must stay below {limit:.6e})")]
    TranslationOutOfRange { shift: f64, limit: f64 },

    #[error("degenerate distribution: norm {norm:.3e} below {floor:.3e}")]
    DegenerateDistribution { norm: f64, floor: f64 },

    #[error("postselection probability {probability:.3e} below threshold {threshold:.3e}; weak value undefined")]
    NearOrthogonalPostselection { probability: f64, threshold: f64 },

    #[error("pointer state carries probability current (max normalized current {max_current:.3e}, tolerance {tolerance:.3e})")]
    NonzeroCurrent { max_current: f64, tolerance: f64 },

    #[error("outcome {outcome} has vanishing marginal {marginal:.3e}")]
    VanishingMarginal { outcome: usize, marginal: f64 },

    #[error("joint table entry {value:.3e} below the negativity floor -{floor:.3e}")]
    NegativeDensity { value: f64, floor: f64 },

    #[error("insufficient samples: {count} in bin (need at least {required})")]
    InsufficientSamples { count: usize, required: usize },

    #[error("non-finite trajectory for sample {sample_index}")]
    NonFiniteTrajectory { sample_index: usize },
}
