//! Numerical tolerances and grid defaults.
//!
//! Every threshold used by validation and by the validity predicates lives
//! here so that callers can tighten or relax them without touching the
//! engines.

/// Default number of grid points for pointer states.
pub const DEFAULT_GRID_POINTS: usize = 1024;

/// Default box length in units of the pointer standard deviation. Keeps
/// periodic wrap-around leakage below 1e-12 for Gaussian-class states.
pub const DEFAULT_LENGTH_SIGMAS: f64 = 40.0;

/// Tolerance set shared by state validation, the spectral decomposition and
/// the measurement-validity predicates.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance for observables, density matrices and
    /// pointer kernels.
    pub hermiticity: f64,
    /// Completeness / idempotence / orthogonality tolerance for
    /// eigenprojectors.
    pub projector: f64,
    /// Max-norm tolerance for reconstructing a matrix from its spectral data.
    pub reconstruction: f64,
    /// Eigenvalues closer than `degeneracy_rel * spectral range` are merged
    /// into a single projector.
    pub degeneracy_rel: f64,
    /// Trace tolerance for object density matrices (trace = 1).
    pub density_trace: f64,
    /// Eigenvalue floor for object density matrices (min eigenvalue >= -floor).
    pub density_negativity: f64,
    /// Continuum-trace tolerance for pointer states (sum diag * spacing = 1).
    pub pointer_trace: f64,
    /// Floor for pointer-kernel diagonal entries.
    pub pointer_diag_negativity: f64,
    /// Zero-current predicate: max |current| / (sigma_P * max diagonal).
    pub zero_current: f64,
    /// Minimum postselection probability before the weak value is declared
    /// divergent.
    pub postselection_floor: f64,
    /// Weakness criterion: |epsilon Re c_w| / sigma must stay below this.
    pub weakness_max: f64,
    /// Remainder criterion: the first moment of the remainder term must stay
    /// below `remainder_fraction * |epsilon Re c_w| * postselection prob`.
    pub remainder_fraction: f64,
    /// Entries of a conditional density in [-floor, 0) are clamped to zero;
    /// anything below -floor is an error.
    pub negative_density: f64,
    /// Norm floor below which a distribution has no meaningful moments.
    pub degenerate_norm: f64,
    /// Orthonormality tolerance for postselection bases.
    pub basis_orthonormality: f64,
    /// Relative agreement required between analytic gradients and central
    /// finite differences.
    pub gradient_check: f64,
    /// Step used by the finite-difference gradient fallback, relative to the
    /// coordinate scale.
    pub gradient_step_scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            projector: 1e-10,
            reconstruction: 1e-10,
            degeneracy_rel: 1e-9,
            density_trace: 1e-10,
            density_negativity: 1e-10,
            pointer_trace: 1e-8,
            pointer_diag_negativity: 1e-12,
            zero_current: 1e-8,
            postselection_floor: 1e-12,
            weakness_max: 0.1,
            remainder_fraction: 0.1,
            negative_density: 1e-10,
            degenerate_norm: 1e-14,
            basis_orthonormality: 1e-10,
            gradient_check: 1e-4,
            gradient_step_scale: 1e-5,
        }
    }
}
