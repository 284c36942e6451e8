//! Canonical object and pointer states.
//!
//! The pointer gallery spans the validity landscape: a pure Gaussian, a
//! thermal oscillator state (mixed, real kernel), a symmetric two-Gaussian
//! superposition (pure, fringes in momentum), a 50/50 classical mixture of
//! displaced Gaussians (mixed, non-thermal) — all with vanishing current —
//! and a momentum-boosted Gaussian as the designated current-carrying
//! counterexample. Object presets cover the projective regime, an anomalous
//! weak value outside the spectrum, a purely imaginary weak value, a
//! maximally mixed object and a degenerate qutrit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::grid::PointerGrid;
use crate::pointer::PointerState;
use crate::spectral::{spectral_decompose, DensityMatrix, HermitianObservable};

fn check_sigma(sigma: f64, grid: &PointerGrid) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("width must be positive, got {sigma}"),
        });
    }
    if sigma <= 4.0 * grid.spacing() {
        return Err(Error::GridResolution {
            reason: format!(
                "sigma {sigma} under-resolved: needs more than 4 spacings ({:.3e})",
                4.0 * grid.spacing()
            ),
        });
    }
    Ok(())
}

fn gaussian_amplitude(q: f64, sigma: f64, center: f64) -> f64 {
    (-((q - center) / sigma).powi(2) / 4.0).exp()
}

/// Pure Gaussian pointer with position standard deviation `sigma`.
pub fn gaussian_pointer(
    sigma: f64,
    center: f64,
    grid: &PointerGrid,
    _tol: &Tolerances,
) -> Result<PointerState> {
    check_sigma(sigma, grid)?;
    if center.abs() >= grid.length() / 8.0 {
        return Err(Error::GridResolution {
            reason: format!("center {center} too far off the box middle"),
        });
    }
    let psi: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|&q| Complex64::new(gaussian_amplitude(q, sigma, center), 0.0))
        .collect();
    PointerState::from_wavefunction(grid.clone(), &psi)
}

/// Thermal state of a unit-mass harmonic oscillator (ħ = k_B = 1), built
/// from the closed-form real position kernel
/// `rho(Q,Q') ∝ exp(-A (Q² + Q'²) + B Q Q')` with
/// `A = (omega/2) coth(omega/T)` and `B = omega / sinh(omega/T)`.
///
/// Mixed for any T > 0, with purity `tanh(omega / 2T)`; the kernel is real,
/// so the probability current vanishes identically.
pub fn thermal_pointer(
    omega: f64,
    temperature: f64,
    grid: &PointerGrid,
    tol: &Tolerances,
) -> Result<PointerState> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("frequency must be positive, got {omega}"),
        });
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("temperature must be positive, got {temperature}"),
        });
    }
    let x = omega / temperature;
    let a = 0.5 * omega / x.tanh();
    let b = omega / x.sinh();
    // position variance coth(x/2) / (2 omega)
    let sigma = (1.0 / ((x / 2.0).tanh() * 2.0 * omega)).sqrt();
    if sigma <= 4.0 * grid.spacing() {
        return Err(Error::GridResolution {
            reason: format!("thermal width {sigma:.3e} under-resolved"),
        });
    }
    if sigma >= grid.length() / 10.0 {
        return Err(Error::GridResolution {
            reason: format!("thermal width {sigma:.3e} too large for the box"),
        });
    }
    let n = grid.n_points();
    let qs = grid.positions();
    let mut kernel = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let v = (-a * (qs[i] * qs[i] + qs[j] * qs[j]) + b * qs[i] * qs[j]).exp();
            kernel[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    let trace: f64 = kernel.diagonal().iter().map(|v| v.re).sum::<f64>() * grid.spacing();
    kernel /= Complex64::from(trace);
    PointerState::from_kernel(grid.clone(), kernel, tol)
}

/// Pure symmetric superposition of two Gaussians at `±separation/2`. The
/// wavefunction is real, so the current vanishes despite the momentum-space
/// fringes.
pub fn superposition_pointer(
    separation: f64,
    sigma: f64,
    grid: &PointerGrid,
    _tol: &Tolerances,
) -> Result<PointerState> {
    check_sigma(sigma, grid)?;
    if separation < 0.0 || separation / 2.0 >= grid.length() / 8.0 {
        return Err(Error::GridResolution {
            reason: format!("separation {separation} does not fit the box"),
        });
    }
    let half = separation / 2.0;
    let psi: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|&q| {
            Complex64::new(
                gaussian_amplitude(q, sigma, half) + gaussian_amplitude(q, sigma, -half),
                0.0,
            )
        })
        .collect();
    PointerState::from_wavefunction(grid.clone(), &psi)
}

/// 50/50 classical mixture of two displaced Gaussians: mixed and
/// non-thermal, purity `(1 + exp(-separation²/(4 sigma²))) / 2`.
pub fn mixture_pointer(
    separation: f64,
    sigma: f64,
    grid: &PointerGrid,
    tol: &Tolerances,
) -> Result<PointerState> {
    check_sigma(sigma, grid)?;
    if separation < 0.0 || separation / 2.0 >= grid.length() / 8.0 {
        return Err(Error::GridResolution {
            reason: format!("separation {separation} does not fit the box"),
        });
    }
    let half = separation / 2.0;
    let left = gaussian_pointer(sigma, -half, grid, tol)?;
    let right = gaussian_pointer(sigma, half, grid, tol)?;
    PointerState::mixture(&[(0.5, left), (0.5, right)])
}

/// Gaussian carrying mean momentum `k0`: the minimal pointer that violates
/// the zero-current condition, with current `k0 * |g(Q)|²`.
pub fn boosted_pointer(
    k0: f64,
    sigma: f64,
    grid: &PointerGrid,
    _tol: &Tolerances,
) -> Result<PointerState> {
    check_sigma(sigma, grid)?;
    if !k0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "k0",
            reason: "boost must be finite".into(),
        });
    }
    let psi: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|&q| Complex64::from_polar(gaussian_amplitude(q, sigma, 0.0), k0 * q))
        .collect();
    PointerState::from_wavefunction(grid.clone(), &psi)
}

/// Addressable pointer preset, as referenced from scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointerPresetSpec {
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: f64,
    },
    Thermal {
        omega: f64,
        temperature: f64,
    },
    Superposition {
        separation: f64,
        sigma: f64,
    },
    Mixture {
        separation: f64,
        sigma: f64,
    },
    Boosted {
        k0: f64,
        sigma: f64,
    },
}

impl PointerPresetSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Gaussian { sigma, center } => format!("gaussian(sigma={sigma},center={center})"),
            Self::Thermal { omega, temperature } => {
                format!("thermal(omega={omega},T={temperature})")
            }
            Self::Superposition { separation, sigma } => {
                format!("superposition(sep={separation},sigma={sigma})")
            }
            Self::Mixture { separation, sigma } => {
                format!("mixture(sep={separation},sigma={sigma})")
            }
            Self::Boosted { k0, sigma } => format!("boosted(k0={k0},sigma={sigma})"),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Thermal { .. } => "thermal",
            Self::Superposition { .. } => "superposition",
            Self::Mixture { .. } => "mixture",
            Self::Boosted { .. } => "boosted",
        }
    }

    pub fn expected_zero_current(&self) -> bool {
        match self {
            Self::Boosted { k0, .. } => *k0 == 0.0,
            _ => true,
        }
    }

    pub fn build(&self, grid: &PointerGrid, tol: &Tolerances) -> Result<PointerState> {
        match *self {
            Self::Gaussian { sigma, center } => gaussian_pointer(sigma, center, grid, tol),
            Self::Thermal { omega, temperature } => thermal_pointer(omega, temperature, grid, tol),
            Self::Superposition { separation, sigma } => {
                superposition_pointer(separation, sigma, grid, tol)
            }
            Self::Mixture { separation, sigma } => mixture_pointer(separation, sigma, grid, tol),
            Self::Boosted { k0, sigma } => boosted_pointer(k0, sigma, grid, tol),
        }
    }

    /// The default gallery: the four valid pointers plus the boosted
    /// counterexample.
    pub fn standard_gallery() -> Vec<PointerPresetSpec> {
        vec![
            Self::Gaussian { sigma: 1.0, center: 0.0 },
            Self::Thermal { omega: 1.0, temperature: 1.0 },
            Self::Superposition { separation: 6.0, sigma: 1.0 },
            Self::Mixture { separation: 6.0, sigma: 1.0 },
            Self::Boosted { k0: 1.0, sigma: 1.0 },
        ]
    }
}

/// Object-side arrangement with frozen reference weak values.
#[derive(Debug, Clone)]
pub struct ObjectPreset {
    pub name: &'static str,
    pub object_state: DensityMatrix,
    pub observable: HermitianObservable,
    pub postselection: Vec<DVector<Complex64>>,
    /// Reference weak value per outcome; `None` where the postselection
    /// probability vanishes.
    pub reference_weak_values: Vec<Option<Complex64>>,
    pub notes: &'static str,
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_z(tol: &Tolerances) -> HermitianObservable {
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c64(1.0, 0.0), c64(-1.0, 0.0)]));
    spectral_decompose(m, tol).expect("pauli-z decomposes")
}

fn plus_state() -> DensityMatrix {
    DensityMatrix::from_pure(&DVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)]))
        .expect("plus state")
}

fn rotated_basis(angle: f64) -> Vec<DVector<Complex64>> {
    vec![
        DVector::from_vec(vec![c64(angle.cos(), 0.0), c64(-angle.sin(), 0.0)]),
        DVector::from_vec(vec![c64(angle.sin(), 0.0), c64(angle.cos(), 0.0)]),
    ]
}

fn circular_basis() -> Vec<DVector<Complex64>> {
    let s = 1.0 / 2.0f64.sqrt();
    vec![
        DVector::from_vec(vec![c64(s, 0.0), c64(0.0, s)]),
        DVector::from_vec(vec![c64(s, 0.0), c64(0.0, -s)]),
    ]
}

/// Qutrit observable with eigenvalues (1, 1, -1) mixed by two plane
/// rotations, plus a fixed pure state and the discrete Fourier basis for
/// postselection.
fn qutrit_preset_parts(
    tol: &Tolerances,
) -> (HermitianObservable, DensityMatrix, Vec<DVector<Complex64>>) {
    let theta = std::f64::consts::PI / 7.0;
    let phi = std::f64::consts::PI / 5.0;
    let g02 = DMatrix::from_row_slice(
        3,
        3,
        &[
            theta.cos(),
            0.0,
            -theta.sin(),
            0.0,
            1.0,
            0.0,
            theta.sin(),
            0.0,
            theta.cos(),
        ],
    );
    let g12 = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0,
            0.0,
            0.0,
            0.0,
            phi.cos(),
            -phi.sin(),
            0.0,
            phi.sin(),
            phi.cos(),
        ],
    );
    let u = g02 * g12;
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
    let real = &u * d * u.transpose();
    let matrix = DMatrix::from_fn(3, 3, |i, j| Complex64::new(real[(i, j)], 0.0));
    let observable = spectral_decompose(matrix, tol).expect("qutrit observable decomposes");

    let psi = DVector::from_vec(vec![c64(0.6, 0.0), c64(0.3, 0.5), c64(-0.4, 0.2)]);
    let state = DensityMatrix::from_pure(&psi).expect("qutrit state");

    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let s = 1.0 / 3.0f64.sqrt();
    let basis = (0..3)
        .map(|j| {
            DVector::from_vec(vec![
                Complex64::from(s),
                omega.powu(j) * s,
                omega.powu(2 * j) * s,
            ])
        })
        .collect();
    (observable, state, basis)
}

/// The standard object presets.
pub fn object_presets(tol: &Tolerances) -> Vec<ObjectPreset> {
    let sqrt3 = 3.0f64.sqrt();
    let (qutrit_obs, qutrit_state, qutrit_basis) = qutrit_preset_parts(tol);
    vec![
        ObjectPreset {
            name: "projective",
            object_state: plus_state(),
            observable: pauli_z(tol),
            postselection: vec![
                DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]),
                DVector::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0)]),
            ],
            reference_weak_values: vec![Some(c64(1.0, 0.0)), Some(c64(-1.0, 0.0))],
            notes: "postselection in the measured eigenbasis; weak values equal eigenvalues",
        },
        ObjectPreset {
            name: "anomalous",
            object_state: plus_state(),
            observable: pauli_z(tol),
            postselection: rotated_basis(std::f64::consts::FRAC_PI_3),
            reference_weak_values: vec![
                Some(c64(-(2.0 + sqrt3), 0.0)),
                Some(c64(2.0 - sqrt3, 0.0)),
            ],
            notes: "nearly orthogonal postselection pushes the weak value below the spectrum",
        },
        ObjectPreset {
            name: "imaginary",
            object_state: plus_state(),
            observable: pauli_z(tol),
            postselection: circular_basis(),
            reference_weak_values: vec![Some(c64(0.0, 1.0)), Some(c64(0.0, -1.0))],
            notes: "purely imaginary weak value; the first-order position shift vanishes",
        },
        ObjectPreset {
            name: "mixed",
            object_state: DensityMatrix::maximally_mixed(2),
            observable: pauli_z(tol),
            postselection: rotated_basis(std::f64::consts::FRAC_PI_3),
            reference_weak_values: vec![Some(c64(-0.5, 0.0)), Some(c64(0.5, 0.0))],
            notes: "maximally mixed object: weak value reduces to <d|c|d>",
        },
        ObjectPreset {
            name: "qutrit_degenerate",
            object_state: qutrit_state,
            observable: qutrit_obs,
            postselection: qutrit_basis,
            reference_weak_values: vec![
                Some(c64(0.7487191454157623, 0.22743446259945088)),
                Some(c64(-0.2559647761443785, 0.24348097879580285)),
                Some(c64(-1.385920183323458, -2.719030257807524)),
            ],
            notes: "degenerate eigenvalue pair exercises projector grouping; \
                    references from direct evaluation of the defining ratio",
        },
    ]
}

pub fn object_preset_by_name(name: &str, tol: &Tolerances) -> Option<ObjectPreset> {
    object_presets(tol).into_iter().find(|p| p.name == name)
}

/// One row of the gallery audit table.
#[derive(Debug, Clone)]
pub struct GalleryAuditRow {
    pub name: String,
    pub purity: f64,
    pub position_std: f64,
    pub current_max: f64,
    pub zero_current: bool,
    pub expected_zero_current: bool,
}

impl GalleryAuditRow {
    pub fn matches_expectation(&self) -> bool {
        self.zero_current == self.expected_zero_current
    }
}

/// Builds every standard pointer preset on the grid and checks the
/// zero-current predicate against its expectation.
pub fn audit_gallery(grid: &PointerGrid, tol: &Tolerances) -> Result<Vec<GalleryAuditRow>> {
    PointerPresetSpec::standard_gallery()
        .into_iter()
        .map(|preset| {
            let state = preset.build(grid, tol)?;
            let moments = state.position_moments(tol)?;
            let current_max = state.normalized_current_max();
            Ok(GalleryAuditRow {
                name: preset.name(),
                purity: state.purity(),
                position_std: moments.std,
                current_max,
                zero_current: current_max < tol.zero_current,
                expected_zero_current: preset.expected_zero_current(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::weak_value;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn default_grid() -> PointerGrid {
        PointerGrid::for_pointer_std(1.0).unwrap()
    }

    #[test]
    fn gaussian_preset_properties() {
        let grid = default_grid();
        let state = gaussian_pointer(1.0, 0.0, &grid, &tol()).unwrap();
        assert!(state.has_zero_current(&tol()));
        let m = state.position_moments(&tol()).unwrap();
        assert_relative_eq!(m.std, 1.0, epsilon = 1e-4);
        assert_relative_eq!(state.purity(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn gaussian_resolution_guards() {
        let grid = default_grid();
        assert!(matches!(
            gaussian_pointer(0.1, 0.0, &grid, &tol()),
            Err(Error::GridResolution { .. })
        ));
        assert!(matches!(
            gaussian_pointer(1.0, 6.0, &grid, &tol()),
            Err(Error::GridResolution { .. })
        ));
    }

    #[test]
    fn thermal_low_temperature_limit() {
        // omega/T = 20: effectively the ground state
        let grid = default_grid();
        let thermal = thermal_pointer(1.0, 0.05, &grid, &tol()).unwrap();
        assert!(thermal.purity() >= 0.9999);
        let ground = gaussian_pointer(0.5f64.sqrt(), 0.0, &grid, &tol()).unwrap();
        let diff = (thermal.kernel() - ground.kernel())
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-6, "kernel difference {diff}");
    }

    #[test]
    fn thermal_unit_ratio_purity() {
        let grid = default_grid();
        let thermal = thermal_pointer(1.0, 1.0, &grid, &tol()).unwrap();
        assert_relative_eq!(thermal.purity(), 0.5f64.tanh(), epsilon = 1e-4);
        assert!(thermal.normalized_current_max() < 1e-10);
        let m = thermal.position_moments(&tol()).unwrap();
        assert_relative_eq!(m.std, (0.5f64.tanh().recip() / 2.0).sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn superposition_zero_separation_is_gaussian() {
        let grid = default_grid();
        let sup = superposition_pointer(0.0, 1.0, &grid, &tol()).unwrap();
        let gauss = gaussian_pointer(1.0, 0.0, &grid, &tol()).unwrap();
        let diff = (sup.kernel() - gauss.kernel())
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn superposition_is_bimodal_pure_and_currentless() {
        let grid = default_grid();
        let sup = superposition_pointer(6.0, 1.0, &grid, &tol()).unwrap();
        assert_relative_eq!(sup.purity(), 1.0, epsilon = 1e-8);
        assert!(sup.has_zero_current(&tol()));
        // center dip is exp(-sep^2/(8 sigma^2)) relative in amplitude
        let diag = sup.diagonal();
        let center = grid.n_points() / 2;
        let peak = diag.iter().cloned().fold(0.0f64, f64::max);
        assert!(diag[center] < 0.1 * peak, "diagonal not bimodal");
        let left_peak = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| grid.position(*i) < 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((grid.position(left_peak.0) + 3.0).abs() < 3.0 * grid.spacing());
    }

    #[test]
    fn mixture_purity_overlap_formula() {
        let grid = default_grid();
        for sep in [0.0, 2.0, 6.0] {
            let mix = mixture_pointer(sep, 1.0, &grid, &tol()).unwrap();
            let expected = 0.5 * (1.0 + (-sep * sep / 4.0).exp());
            assert_relative_eq!(mix.purity(), expected, epsilon = 1e-6);
            assert!(mix.has_zero_current(&tol()));
        }
    }

    #[test]
    fn boosted_preset_current_and_momentum() {
        let grid = default_grid();
        let state = boosted_pointer(1.0, 1.0, &grid, &tol()).unwrap();
        let current = state.current_density();
        let diag = state.diagonal();
        let center = grid.n_points() / 2;
        assert_relative_eq!(current[center], diag[center], max_relative = 1e-6);
        assert_relative_eq!(state.momentum_moments().unwrap().mean, 1.0, epsilon = 1e-8);

        let still = boosted_pointer(0.0, 1.0, &grid, &tol()).unwrap();
        assert!(still.has_zero_current(&tol()));
    }

    #[test]
    fn boosted_fails_predicate_down_to_small_boosts() {
        let grid = default_grid();
        for k0 in [1e-3, 1e-2, 1.0] {
            let state = boosted_pointer(k0, 1.0, &grid, &tol()).unwrap();
            assert!(!state.has_zero_current(&tol()), "k0 = {k0}");
        }
    }

    #[test]
    fn all_presets_satisfy_state_invariants() {
        let grid = default_grid();
        for preset in PointerPresetSpec::standard_gallery() {
            let state = preset.build(&grid, &tol()).unwrap();
            assert_relative_eq!(state.trace(), 1.0, epsilon = 1e-8);
            assert_eq!(
                state.has_zero_current(&tol()),
                preset.expected_zero_current(),
                "{}",
                preset.name()
            );
        }
    }

    #[test]
    fn audit_matches_expectations() {
        let grid = default_grid();
        let rows = audit_gallery(&grid, &tol()).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.matches_expectation()));
        let thermal = rows.iter().find(|r| r.name.starts_with("thermal")).unwrap();
        assert!(thermal.zero_current && thermal.purity < 1.0);
        let boosted = rows.iter().find(|r| r.name.starts_with("boosted")).unwrap();
        assert!(!boosted.zero_current);
    }

    #[test]
    fn object_preset_references_reproduce() {
        let tolerances = tol();
        for preset in object_presets(&tolerances) {
            for (outcome, reference) in preset.reference_weak_values.iter().enumerate() {
                let Some(expected) = reference else { continue };
                let cw = weak_value(
                    &preset.object_state,
                    &preset.observable,
                    &preset.postselection[outcome],
                    &tolerances,
                )
                .unwrap();
                assert!(
                    (cw - expected).norm() < 1e-12,
                    "{} outcome {outcome}: {cw} vs {expected}",
                    preset.name
                );
            }
        }
    }

    #[test]
    fn qutrit_observable_groups_degenerate_pair() {
        let (obs, _, _) = qutrit_preset_parts(&tol());
        assert_eq!(obs.eigenvalues().len(), 2);
        assert_relative_eq!(obs.eigenvalues()[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(obs.eigenvalues()[1], 1.0, epsilon = 1e-12);
        let rank: f64 = obs.projectors()[1].diagonal().iter().map(|v| v.re).sum();
        assert_relative_eq!(rank, 2.0, epsilon = 1e-10);
    }
}
