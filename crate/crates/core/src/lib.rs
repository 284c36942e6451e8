//! Simulation laboratory for weak measurements with arbitrary pointer
//! states.
//!
//! The crate couples a quantum object to a measurement pointer through the
//! impulsive von Neumann interaction, compares the exact conditional pointer
//! statistics against the first-order weak-value prediction, and provides a
//! matching classical phase-space engine where the observable is a c-number.
//! A gallery of canonical object and pointer states exercises the validity
//! condition: any pointer state works, pure or mixed, as long as its
//! probability current density vanishes.

pub mod classical;
pub mod config;
pub mod error;
pub mod gallery;
pub mod grid;
pub mod moments;
pub mod pointer;
pub mod quantum;
pub mod spectral;

pub use classical::{
    classical_current_check, classical_shift_experiment, classical_weak_value, BinGrid,
    BivariateGaussian, CNumberObservable, ClassicalJoint, ClassicalShiftReport, PhaseEnsemble,
    PhasePoint, ShiftConfig,
};
pub use config::Tolerances;
pub use error::{Error, Result};
pub use gallery::{
    audit_gallery, boosted_pointer, gaussian_pointer, mixture_pointer, object_preset_by_name,
    object_presets, superposition_pointer, thermal_pointer, GalleryAuditRow, ObjectPreset,
    PointerPresetSpec,
};
pub use grid::PointerGrid;
pub use moments::Moments;
pub use pointer::PointerState;
pub use quantum::{
    evolve_exact, first_order_joint, measure_shift, measure_shifts, remainder_term, weak_value,
    JointDistribution, MeasurementRun, MeasurementSetup, ValidityFlags, WeakValueReport,
};
pub use spectral::{spectral_decompose, DensityMatrix, HermitianObservable};
