//! Cross-module invariants: exactness anchors, shift-law convergence and
//! mass conservation across the pointer gallery.

mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64;

use weaklab::quantum::{evolve_exact, first_order_joint, measure_shift};
use weaklab::{
    object_preset_by_name, BivariateGaussian, CNumberObservable, DensityMatrix, MeasurementSetup,
    PointerPresetSpec, ShiftConfig,
};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Postselecting in the measured eigenbasis with an eigenstate object turns
/// the exact evolution into a projective-measurement record: the conditional
/// pointer slice is the initial pointer translated by eps * eigenvalue.
#[test]
fn exactness_anchor_projective_record() {
    let tol = tolerances();
    let grid = default_grid();
    let pointer = build_pointer(&PointerPresetSpec::Gaussian { sigma: 1.0, center: 0.0 }, &grid);
    let preset = object_preset_by_name("projective", &tol).unwrap();
    let state = DensityMatrix::from_pure(&DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]))
        .unwrap();
    let eps = 0.5;
    let setup = MeasurementSetup::new(
        preset.observable.clone(),
        preset.postselection.clone(),
        state,
        pointer.clone(),
        eps,
        &tol,
    )
    .unwrap();
    let joint = evolve_exact(&setup).unwrap();
    let translated = pointer.translate(eps).unwrap().diagonal();
    let slice = joint.conditional_pointer(0, &tol).unwrap();
    for (s, t) in slice.iter().zip(&translated) {
        assert!((s - t).abs() < 1e-8, "{s} vs {t}");
    }
    // the orthogonal outcome never fires
    assert!(joint.object_marginal()[1].abs() < 1e-12);
}

/// measured_shift / eps converges to Re(c_w) as eps shrinks, for every
/// zero-current pointer in the gallery — mixed ones included.
#[test]
fn shift_law_convergence_across_gallery() {
    let tol = tolerances();
    let grid = default_grid();
    let preset = object_preset_by_name("anomalous", &tol).unwrap();
    let cw = 2.0 + 3.0f64.sqrt();
    let epsilons = [1e-3, 3e-3, 1e-2];
    for spec in valid_pointer_gallery() {
        let pointer = build_pointer(&spec, &grid);
        let errors: Vec<f64> = epsilons
            .iter()
            .map(|&eps| {
                let r = measure_shift(&setup_for(&preset, pointer.clone(), eps), 0, &tol).unwrap();
                (r.measured_shift / eps + cw).abs()
            })
            .collect();
        // rate must vanish with eps: superlinear decay of measured/eps - Re c_w
        let slope = fit_loglog_slope(&epsilons, &errors);
        assert!(slope > 1.0, "{}: slope {slope}, errors {errors:?}", spec.kind());
        assert!(
            errors[0] < errors[2],
            "{}: error rates {errors:?} not shrinking",
            spec.kind()
        );
    }
}

/// A second object arrangement (maximally mixed state) against two pointers:
/// the first-order error still falls off quadratically.
#[test]
fn first_order_slope_for_mixed_object() {
    let tol = tolerances();
    let grid = default_grid();
    let preset = object_preset_by_name("mixed", &tol).unwrap();
    let epsilons = [1e-3, 1e-2];
    for spec in [
        PointerPresetSpec::Gaussian { sigma: 1.0, center: 0.0 },
        PointerPresetSpec::Mixture { separation: 6.0, sigma: 1.0 },
    ] {
        let pointer = build_pointer(&spec, &grid);
        let errors: Vec<f64> = epsilons
            .iter()
            .map(|&eps| {
                let setup = setup_for(&preset, pointer.clone(), eps);
                let exact = evolve_exact(&setup).unwrap();
                let fo = first_order_joint(&setup, &tol).unwrap();
                exact.max_abs_difference(&fo)
            })
            .collect();
        let slope = fit_loglog_slope(&epsilons, &errors);
        assert!((slope - 2.0).abs() < 0.1, "{}: slope {slope}", spec.kind());
    }
}

/// Exact evolution conserves total probability mass for every gallery state,
/// current-carrying or not.
#[test]
fn mass_conservation_across_gallery() {
    let tol = tolerances();
    let grid = default_grid();
    let preset = object_preset_by_name("anomalous", &tol).unwrap();
    for spec in PointerPresetSpec::standard_gallery() {
        let pointer = build_pointer(&spec, &grid);
        let setup = setup_for(&preset, pointer, 2e-3);
        let joint = evolve_exact(&setup).unwrap();
        let mass = joint.total_mass();
        assert!((mass - 1.0).abs() < 1e-8, "{}: mass {mass}", spec.kind());
        let negative_floor = joint.table().iter().cloned().fold(0.0f64, f64::min);
        assert!(negative_floor > -1e-10, "{}: {negative_floor}", spec.kind());
    }
}

/// Classical shift law for c = q: with common samples the per-bin shift is
/// exactly linear in eps, so the log-log slope is 1 to machine precision.
#[test]
fn classical_shift_slope_one() {
    let cfg = ShiftConfig {
        n_samples: 100_000,
        seed: 99,
        ..ShiftConfig::default()
    };
    let epsilons = [1e-3, 1e-2, 1e-1];
    let mut shifts = Vec::new();
    for &eps in &epsilons {
        let rep = classical(eps, &cfg);
        // pick the outermost populated bin for a strong signal
        let bin = rep
            .bins
            .iter()
            .max_by(|a, b| a.center.abs().total_cmp(&b.center.abs()))
            .unwrap();
        shifts.push(bin.measured.abs());
    }
    let slope = fit_loglog_slope(&epsilons, &shifts);
    assert!((slope - 1.0).abs() < 1e-6, "slope {slope}");
}

fn classical(eps: f64, cfg: &ShiftConfig) -> weaklab::ClassicalShiftReport {
    weaklab::classical_shift_experiment(
        &BivariateGaussian::standard(),
        &BivariateGaussian::standard(),
        &CNumberObservable::position(),
        eps,
        cfg,
    )
    .unwrap()
}
