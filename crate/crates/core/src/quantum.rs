//! Quantum engine: exact object-pointer coupling, weak values, the
//! first-order pointer-translation prediction and its remainder series.
//!
//! The impulsive interaction `epsilon * c (x) P` is integrated exactly by
//! decomposing the measured observable into eigenprojectors: each pair of
//! eigenvalues contributes a cross-translated pointer diagonal
//! `<Q| T(eps c_j) rho_a T(eps c_k)^dag |Q>` weighted by the object matrix
//! element `<d| Pi_j rho_s Pi_k |d>`. Nothing is truncated, so this also
//! serves as the oracle against which the first-order predictor and the
//! remainder partial sums are checked.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::grid::PointerGrid;
use crate::moments::position_moments;
use crate::pointer::PointerState;
use crate::spectral::{DensityMatrix, HermitianObservable};

/// Complete description of one weak-measurement arrangement.
#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    observable: HermitianObservable,
    postselection: Vec<DVector<Complex64>>,
    object_state: DensityMatrix,
    pointer: PointerState,
    coupling: f64,
}

impl MeasurementSetup {
    pub fn new(
        observable: HermitianObservable,
        postselection: Vec<DVector<Complex64>>,
        object_state: DensityMatrix,
        pointer: PointerState,
        coupling: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let dim = observable.dim();
        if object_state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: object_state.dim(),
            });
        }
        if postselection.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: postselection.len(),
            });
        }
        for (i, a) in postselection.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: a.len(),
                });
            }
            for (j, b) in postselection.iter().enumerate() {
                let overlap = (a.adjoint() * b)[(0, 0)];
                let target = if i == j { 1.0 } else { 0.0 };
                if (overlap - Complex64::from(target)).norm() > tol.basis_orthonormality {
                    return Err(Error::InvalidParameter {
                        name: "postselection",
                        reason: format!(
                            "basis vectors {i},{j} not orthonormal: <{i}|{j}> = {overlap}"
                        ),
                    });
                }
            }
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coupling",
                reason: "coupling must be finite".into(),
            });
        }
        Ok(Self {
            observable,
            postselection,
            object_state,
            pointer,
            coupling,
        })
    }

    pub fn observable(&self) -> &HermitianObservable {
        &self.observable
    }

    pub fn postselection(&self) -> &[DVector<Complex64>] {
        &self.postselection
    }

    pub fn object_state(&self) -> &DensityMatrix {
        &self.object_state
    }

    pub fn pointer(&self) -> &PointerState {
        &self.pointer
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn outcomes(&self) -> usize {
        self.postselection.len()
    }

    /// Same arrangement at a different coupling strength.
    pub fn with_coupling(&self, coupling: f64) -> Self {
        let mut setup = self.clone();
        setup.coupling = coupling;
        setup
    }
}

/// Real-valued table over (pointer position, postselection outcome).
/// Densities in Q, probabilities in d. Expansion terms reuse the same shape
/// but are signed.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    grid: PointerGrid,
    table: DMatrix<f64>,
}

impl JointDistribution {
    pub fn grid(&self) -> &PointerGrid {
        &self.grid
    }

    pub fn outcomes(&self) -> usize {
        self.table.ncols()
    }

    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    pub fn slice(&self, outcome: usize) -> Vec<f64> {
        self.table.column(outcome).iter().copied().collect()
    }

    /// Total mass `sum table * spacing`; 1 for a true joint density.
    pub fn total_mass(&self) -> f64 {
        self.table.iter().sum::<f64>() * self.grid.spacing()
    }

    /// Probability of each postselection outcome, `sum_Q table * spacing`.
    pub fn object_marginal(&self) -> Vec<f64> {
        (0..self.outcomes())
            .map(|d| self.table.column(d).iter().sum::<f64>() * self.grid.spacing())
            .collect()
    }

    /// Pointer density conditioned on one outcome. Entries within the
    /// negativity floor are clamped to zero, the result integrates to one.
    pub fn conditional_pointer(&self, outcome: usize, tol: &Tolerances) -> Result<Vec<f64>> {
        let marginal = self.table.column(outcome).iter().sum::<f64>() * self.grid.spacing();
        if marginal <= tol.postselection_floor {
            return Err(Error::VanishingMarginal { outcome, marginal });
        }
        let mut density: Vec<f64> = Vec::with_capacity(self.grid.n_points());
        for &v in self.table.column(outcome).iter() {
            if v < -tol.negative_density {
                return Err(Error::NegativeDensity {
                    value: v,
                    floor: tol.negative_density,
                });
            }
            density.push(v.max(0.0));
        }
        let norm: f64 = density.iter().sum::<f64>() * self.grid.spacing();
        for v in &mut density {
            *v /= norm;
        }
        Ok(density)
    }

    /// Mean pointer position conditioned on one outcome.
    pub fn conditional_mean(&self, outcome: usize, tol: &Tolerances) -> Result<f64> {
        let density = self.conditional_pointer(outcome, tol)?;
        let m = position_moments(
            self.grid.positions(),
            &density,
            self.grid.spacing(),
            tol.degenerate_norm,
        )?;
        Ok(m.mean)
    }

    /// Largest absolute difference between two tables of the same shape.
    pub fn max_abs_difference(&self, other: &JointDistribution) -> f64 {
        (&self.table - &other.table)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// The weak value `c_w(d) = <d| c rho_s |d> / <d| rho_s |d>`. For a pure
/// object state this reduces to `<d|c|psi> / <d|psi>`.
pub fn weak_value(
    object_state: &DensityMatrix,
    observable: &HermitianObservable,
    postselection: &DVector<Complex64>,
    tol: &Tolerances,
) -> Result<Complex64> {
    if postselection.len() != object_state.dim() || observable.dim() != object_state.dim() {
        return Err(Error::DimensionMismatch {
            expected: object_state.dim(),
            actual: postselection.len().min(observable.dim()),
        });
    }
    let probability = object_state.diagonal_expectation(postselection);
    if probability <= tol.postselection_floor {
        return Err(Error::NearOrthogonalPostselection {
            probability,
            threshold: tol.postselection_floor,
        });
    }
    let numerator =
        (postselection.adjoint() * observable.matrix() * object_state.matrix() * postselection)
            [(0, 0)];
    Ok(numerator / probability)
}

fn displacement_guard(setup: &MeasurementSetup) -> Result<()> {
    let reach = setup.coupling.abs() * setup.observable.max_abs_eigenvalue();
    let limit = setup.pointer.grid().translation_limit();
    if reach >= limit {
        return Err(Error::TranslationOutOfRange {
            shift: reach,
            limit,
        });
    }
    Ok(())
}

/// Object-side weights <d| Pi_j rho Pi_k |d> for one outcome.
fn projected_weights(setup: &MeasurementSetup, d: &DVector<Complex64>) -> Vec<Vec<Complex64>> {
    let projectors = setup.observable.projectors();
    let rho = setup.object_state.matrix();
    let projected: Vec<DVector<Complex64>> = projectors.iter().map(|p| p * d).collect();
    projected
        .iter()
        .map(|vj| {
            projected
                .iter()
                .map(|vk| (vj.adjoint() * rho * vk)[(0, 0)])
                .collect()
        })
        .collect()
}

/// Exact joint distribution of pointer position and postselection outcome
/// after the impulsive coupling.
pub fn evolve_exact(setup: &MeasurementSetup) -> Result<JointDistribution> {
    displacement_guard(setup)?;
    let grid = setup.pointer.grid().clone();
    let n = grid.n_points();
    let eigenvalues = setup.observable.eigenvalues();
    let eps = setup.coupling;

    // Pointer factors depend only on the eigenvalue pair; conjugate pairs
    // are assembled from j <= k.
    let mut pair_diagonals: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(eigenvalues.len());
    for (j, &cj) in eigenvalues.iter().enumerate() {
        let mut row = Vec::with_capacity(eigenvalues.len() - j);
        for &ck in &eigenvalues[j..] {
            row.push(setup.pointer.cross_translated_diagonal(eps * cj, eps * ck));
        }
        pair_diagonals.push(row);
    }

    let mut table = DMatrix::<f64>::zeros(n, setup.outcomes());
    for (out, d) in setup.postselection.iter().enumerate() {
        let weights = projected_weights(setup, d);
        let mut column = vec![0.0f64; n];
        for j in 0..eigenvalues.len() {
            for k in j..eigenvalues.len() {
                let w = weights[j][k];
                let diag = &pair_diagonals[j][k - j];
                if j == k {
                    for (acc, g) in column.iter_mut().zip(diag) {
                        *acc += w.re * g.re;
                    }
                } else {
                    for (acc, g) in column.iter_mut().zip(diag) {
                        *acc += 2.0 * (w * g).re;
                    }
                }
            }
        }
        table.set_column(out, &DVector::from_vec(column));
    }
    Ok(JointDistribution { grid, table })
}

/// First-order prediction: each outcome's slice is the undisturbed joint
/// density translated by `epsilon * Re(c_w)`,
/// `rho_0 - epsilon Re(c_w) d(rho_0)/dQ`.
///
/// Valid only for pointer states with vanishing probability current; the
/// check is enforced here because it is the central validity condition.
pub fn first_order_joint(setup: &MeasurementSetup, tol: &Tolerances) -> Result<JointDistribution> {
    let current_max = setup.pointer.normalized_current_max();
    if current_max >= tol.zero_current {
        return Err(Error::NonzeroCurrent {
            max_current: current_max,
            tolerance: tol.zero_current,
        });
    }
    let grid = setup.pointer.grid().clone();
    let diag = setup.pointer.diagonal();
    let derivative = grid.derivative_real(&diag);
    let eps = setup.coupling;

    let mut table = DMatrix::<f64>::zeros(grid.n_points(), setup.outcomes());
    for (out, d) in setup.postselection.iter().enumerate() {
        let probability = setup.object_state.diagonal_expectation(d);
        if probability <= tol.postselection_floor {
            return Err(Error::NearOrthogonalPostselection {
                probability,
                threshold: tol.postselection_floor,
            });
        }
        let shift = eps * weak_value(&setup.object_state, &setup.observable, d, tol)?.re;
        let column: Vec<f64> = diag
            .iter()
            .zip(&derivative)
            .map(|(&rho, &drho)| probability * (rho - shift * drho))
            .collect();
        table.set_column(out, &DVector::from_vec(column));
    }
    Ok(JointDistribution { grid, table })
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Partial sums of the expansion's n >= 2 terms, built from powers of the
/// observable around the object state and powers of the momentum operator
/// around the pointer kernel. `order` is the highest included power.
pub fn remainder_term(
    setup: &MeasurementSetup,
    order: u32,
    tol: &Tolerances,
) -> Result<JointDistribution> {
    if !(2..=6).contains(&order) {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: format!("order must lie in 2..=6, got {order}"),
        });
    }
    let _ = tol;
    let grid = setup.pointer.grid().clone();
    let n_points = grid.n_points();
    let eps = setup.coupling;
    let dim = setup.observable.dim();

    // <Q| P^m rho_a P^l |Q>; the (l, m) entry is the conjugate of (m, l).
    let mut pointer_factors: Vec<Vec<Option<Vec<Complex64>>>> =
        vec![vec![None; order as usize + 1]; order as usize + 1];
    for total in 2..=order {
        for m in 0..=total {
            let l = total - m;
            if m >= l && pointer_factors[m as usize][l as usize].is_none() {
                let diag = setup.pointer.momentum_cross_diagonal(m, l);
                let conj: Vec<Complex64> = diag.iter().map(|v| v.conj()).collect();
                pointer_factors[m as usize][l as usize] = Some(diag);
                pointer_factors[l as usize][m as usize] = Some(conj);
            }
        }
    }

    // c^m |d> for every outcome
    let powers: Vec<DMatrix<Complex64>> = (0..=order)
        .map(|m| {
            if m == 0 {
                DMatrix::identity(dim, dim)
            } else {
                setup.observable.matrix_power(m)
            }
        })
        .collect();

    let rho = setup.object_state.matrix();
    let mut table = DMatrix::<f64>::zeros(n_points, setup.outcomes());
    for (out, d) in setup.postselection.iter().enumerate() {
        let projected: Vec<DVector<Complex64>> = powers.iter().map(|p| p * d).collect();
        let mut column = vec![Complex64::ZERO; n_points];
        for total in 2..=order {
            // (i eps)^n / n!
            let mut prefactor = Complex64::ONE;
            for i in 1..=total {
                prefactor *= Complex64::new(0.0, eps) / i as f64;
            }
            for k in 0..=total {
                let m = total - k;
                let sign = if (total - k) % 2 == 0 { 1.0 } else { -1.0 };
                let object = (projected[m as usize].adjoint() * rho * &projected[k as usize])
                    [(0, 0)];
                let coeff = prefactor * sign * binomial(total, k) * object;
                let diag = pointer_factors[m as usize][k as usize]
                    .as_ref()
                    .expect("pointer factor precomputed");
                for (acc, g) in column.iter_mut().zip(diag) {
                    *acc += coeff * g;
                }
            }
        }
        let real: Vec<f64> = column.iter().map(|v| v.re).collect();
        debug_assert!(
            column.iter().map(|v| v.im.abs()).fold(0.0, f64::max) < 1e-10,
            "remainder not real after assembling conjugate pairs"
        );
        table.set_column(out, &DVector::from_vec(real));
    }
    Ok(JointDistribution { grid, table })
}

/// Validity verdicts attached to a shift measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityFlags {
    /// Pointer current below the configured tolerance.
    pub zero_current: bool,
    /// `|epsilon Re c_w| / sigma` below the weakness threshold.
    pub weak_coupling: bool,
    /// First moment of the remainder small against the first-order shift.
    pub remainder_small: bool,
}

impl ValidityFlags {
    pub fn all(&self) -> bool {
        self.zero_current && self.weak_coupling && self.remainder_small
    }
}

/// Measured versus predicted pointer shift for one postselection outcome.
#[derive(Debug, Clone)]
pub struct WeakValueReport {
    pub outcome: usize,
    pub weak_value: Complex64,
    pub postselection_probability: f64,
    pub predicted_shift: f64,
    pub measured_shift: f64,
    pub remainder_norm: f64,
    pub weakness_ratio: f64,
    pub current_max: f64,
    pub flags: ValidityFlags,
}

/// Exact joint distribution plus per-outcome shift reports sharing that one
/// evolution.
#[derive(Debug, Clone)]
pub struct MeasurementRun {
    pub joint: JointDistribution,
    pub reports: Vec<WeakValueReport>,
}

/// Runs the exact evolution once and compares the conditional pointer mean
/// of each requested outcome against the first-order prediction
/// `epsilon * Re(c_w)`.
pub fn measure_shifts(
    setup: &MeasurementSetup,
    outcomes: &[usize],
    tol: &Tolerances,
) -> Result<MeasurementRun> {
    for &outcome in outcomes {
        if outcome >= setup.outcomes() {
            return Err(Error::InvalidParameter {
                name: "outcome",
                reason: format!("outcome {outcome} out of range {}", setup.outcomes()),
            });
        }
    }
    let eps = setup.coupling;
    let joint = evolve_exact(setup)?;
    let remainder = remainder_term(setup, 2, tol)?;
    let baseline = setup.pointer.position_moments(tol)?;
    let current_max = setup.pointer.normalized_current_max();
    let spacing = joint.grid.spacing();

    let mut reports = Vec::with_capacity(outcomes.len());
    for &outcome in outcomes {
        let d = &setup.postselection[outcome];
        let probability = setup.object_state.diagonal_expectation(d);
        let cw = weak_value(&setup.object_state, &setup.observable, d, tol)?;
        let mean = joint.conditional_mean(outcome, tol)?;
        let measured_shift = mean - baseline.mean;
        let predicted_shift = eps * cw.re;
        let remainder_norm = joint
            .grid
            .positions()
            .iter()
            .zip(remainder.table.column(outcome).iter())
            .map(|(&q, &r)| q * r)
            .sum::<f64>()
            .abs()
            * spacing;
        let weakness_ratio = if baseline.std > 0.0 {
            predicted_shift.abs() / baseline.std
        } else {
            f64::INFINITY
        };
        let flags = ValidityFlags {
            zero_current: current_max < tol.zero_current,
            weak_coupling: weakness_ratio < tol.weakness_max,
            remainder_small: remainder_norm
                < tol.remainder_fraction * predicted_shift.abs() * probability,
        };
        reports.push(WeakValueReport {
            outcome,
            weak_value: cw,
            postselection_probability: probability,
            predicted_shift,
            measured_shift,
            remainder_norm,
            weakness_ratio,
            current_max,
            flags,
        });
    }
    Ok(MeasurementRun { joint, reports })
}

/// Single-outcome convenience wrapper around `measure_shifts`.
pub fn measure_shift(
    setup: &MeasurementSetup,
    outcome: usize,
    tol: &Tolerances,
) -> Result<WeakValueReport> {
    let run = measure_shifts(setup, &[outcome], tol)?;
    Ok(run.reports.into_iter().next().expect("one report"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectral_decompose;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_z() -> HermitianObservable {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c64(1.0, 0.0), c64(-1.0, 0.0)]));
        spectral_decompose(m, &tol()).unwrap()
    }

    fn plus_state() -> DensityMatrix {
        let psi = DVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)]);
        DensityMatrix::from_pure(&psi).unwrap()
    }

    fn z_basis() -> Vec<DVector<Complex64>> {
        vec![
            DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]),
            DVector::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0)]),
        ]
    }

    /// Postselection pair rotated by `angle` in the real plane.
    fn rotated_basis(angle: f64) -> Vec<DVector<Complex64>> {
        vec![
            DVector::from_vec(vec![c64(angle.cos(), 0.0), c64(-angle.sin(), 0.0)]),
            DVector::from_vec(vec![c64(angle.sin(), 0.0), c64(angle.cos(), 0.0)]),
        ]
    }

    fn gaussian_pointer(sigma: f64) -> PointerState {
        let grid = PointerGrid::for_pointer_std(sigma).unwrap();
        let psi: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|&q| c64((-(q / sigma).powi(2) / 4.0).exp(), 0.0))
            .collect();
        PointerState::from_wavefunction(grid, &psi).unwrap()
    }

    #[test]
    fn weak_value_plain_postselection() {
        let cw = weak_value(&plus_state(), &pauli_z(), &z_basis()[0], &tol()).unwrap();
        assert_relative_eq!(cw.re, 1.0, epsilon = 1e-14);
        assert!(cw.im.abs() < 1e-14);
    }

    #[test]
    fn weak_value_anomalous() {
        let d = &rotated_basis(std::f64::consts::FRAC_PI_3)[0];
        let cw = weak_value(&plus_state(), &pauli_z(), d, &tol()).unwrap();
        let expected = -(2.0 + 3.0f64.sqrt());
        assert_relative_eq!(cw.re, expected, epsilon = 1e-12);
        assert!(cw.im.abs() < 1e-12);
    }

    #[test]
    fn weak_value_eigenvector_postselection() {
        // d an eigenvector of c: weak value is the eigenvalue, for any state
        let rho = DensityMatrix::new(
            DMatrix::from_row_slice(
                2,
                2,
                &[c64(0.7, 0.0), c64(0.1, 0.2), c64(0.1, -0.2), c64(0.3, 0.0)],
            ),
            &tol(),
        )
        .unwrap();
        let cw = weak_value(&rho, &pauli_z(), &z_basis()[1], &tol()).unwrap();
        assert_relative_eq!(cw.re, -1.0, epsilon = 1e-12);
        assert!(cw.im.abs() < 1e-12);
    }

    #[test]
    fn weak_value_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(2);
        let d = &rotated_basis(0.3)[0];
        let cw = weak_value(&rho, &pauli_z(), d, &tol()).unwrap();
        let expected = (d[0].norm_sqr() - d[1].norm_sqr()) / (d[0].norm_sqr() + d[1].norm_sqr());
        assert_relative_eq!(cw.re, expected, epsilon = 1e-12);
        assert!(cw.im.abs() < 1e-12);
    }

    #[test]
    fn weak_value_near_orthogonal_errors() {
        let psi = DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let err = weak_value(&rho, &pauli_z(), &z_basis()[1], &tol());
        assert!(matches!(
            err,
            Err(Error::NearOrthogonalPostselection { .. })
        ));
    }

    fn setup_with(
        basis: Vec<DVector<Complex64>>,
        pointer: PointerState,
        eps: f64,
    ) -> MeasurementSetup {
        MeasurementSetup::new(pauli_z(), basis, plus_state(), pointer, eps, &tol()).unwrap()
    }

    #[test]
    fn evolve_identity_observable_translates_globally() {
        let identity = spectral_decompose(DMatrix::<Complex64>::identity(2, 2), &tol()).unwrap();
        let pointer = gaussian_pointer(1.0);
        let setup = MeasurementSetup::new(
            identity,
            z_basis(),
            plus_state(),
            pointer.clone(),
            0.4,
            &tol(),
        )
        .unwrap();
        let joint = evolve_exact(&setup).unwrap();
        let translated = pointer.translate(0.4).unwrap();
        let expected = translated.diagonal();
        for out in 0..2 {
            let slice = joint.slice(out);
            for (s, e) in slice.iter().zip(&expected) {
                assert!((s - 0.5 * e).abs() < 1e-10);
            }
        }
        let marginal = joint.object_marginal();
        assert_relative_eq!(marginal[0], 0.5, epsilon = 1e-10);
        assert_relative_eq!(marginal[1], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn evolve_at_zero_coupling_is_product() {
        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(rotated_basis(0.4), pointer.clone(), 0.0);
        let joint = evolve_exact(&setup).unwrap();
        let diag = pointer.diagonal();
        for out in 0..2 {
            let p = setup
                .object_state()
                .diagonal_expectation(&setup.postselection()[out]);
            for (s, d) in joint.slice(out).iter().zip(&diag) {
                assert!((s - p * d).abs() < 1e-12);
            }
        }
        assert_relative_eq!(joint.total_mass(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn eigenbasis_postselection_is_projective_record() {
        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(z_basis(), pointer, 0.5);
        let joint = evolve_exact(&setup).unwrap();
        let mean_plus = joint.conditional_mean(0, &tol()).unwrap();
        let mean_minus = joint.conditional_mean(1, &tol()).unwrap();
        assert_relative_eq!(mean_plus, 0.5, epsilon = 1e-6);
        assert_relative_eq!(mean_minus, -0.5, epsilon = 1e-6);
    }

    #[test]
    fn displacement_guard_trips() {
        let pointer = gaussian_pointer(1.0);
        let limit = pointer.grid().translation_limit();
        let setup = setup_with(z_basis(), pointer, limit + 1.0);
        assert!(matches!(
            evolve_exact(&setup),
            Err(Error::TranslationOutOfRange { .. })
        ));
    }

    #[test]
    fn first_order_at_zero_coupling_is_rho0() {
        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(rotated_basis(0.4), pointer, 0.0);
        let fo = first_order_joint(&setup, &tol()).unwrap();
        let exact = evolve_exact(&setup).unwrap();
        assert!(fo.max_abs_difference(&exact) < 1e-12);
    }

    #[test]
    fn first_order_error_scales_quadratically() {
        let pointer = gaussian_pointer(1.0);
        let basis = rotated_basis(std::f64::consts::FRAC_PI_3);
        let mut errors = Vec::new();
        let epsilons = [1e-3, 1e-2];
        for &eps in &epsilons {
            let setup = setup_with(basis.clone(), pointer.clone(), eps);
            let exact = evolve_exact(&setup).unwrap();
            let fo = first_order_joint(&setup, &tol()).unwrap();
            errors.push(exact.max_abs_difference(&fo));
        }
        let slope = (errors[1] / errors[0]).ln() / (epsilons[1] / epsilons[0]).ln();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn first_order_rejects_current_carrying_pointer() {
        let grid = PointerGrid::for_pointer_std(1.0).unwrap();
        let psi: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|&q| Complex64::from_polar((-(q / 1.0_f64).powi(2) / 4.0).exp(), 1.0 * q))
            .collect();
        let pointer = PointerState::from_wavefunction(grid, &psi).unwrap();
        let setup = setup_with(z_basis(), pointer, 1e-3);
        match first_order_joint(&setup, &tol()) {
            Err(Error::NonzeroCurrent { max_current, .. }) => assert!(max_current > 1e-3),
            other => panic!("expected NonzeroCurrent, got {other:?}"),
        }
    }

    #[test]
    fn pure_imaginary_weak_value_predicts_no_shift() {
        let basis = vec![
            DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 1.0)]) / Complex64::from(2.0f64.sqrt()),
            DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, -1.0)])
                / Complex64::from(2.0f64.sqrt()),
        ];
        let cw = weak_value(&plus_state(), &pauli_z(), &basis[0], &tol()).unwrap();
        assert!(cw.re.abs() < 1e-14);
        assert_relative_eq!(cw.im, 1.0, epsilon = 1e-14);

        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(basis, pointer, 1e-3);
        let fo = first_order_joint(&setup, &tol()).unwrap();
        let base = evolve_exact(&setup.with_coupling(0.0)).unwrap();
        assert!(fo.max_abs_difference(&base) < 1e-14);
    }

    #[test]
    fn remainder_zero_coupling_vanishes() {
        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(z_basis(), pointer, 0.0);
        let r = remainder_term(&setup, 4, &tol()).unwrap();
        assert!(r.table().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn remainder_rejects_bad_order() {
        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(z_basis(), pointer, 0.1);
        assert!(remainder_term(&setup, 1, &tol()).is_err());
        assert!(remainder_term(&setup, 7, &tol()).is_err());
    }

    #[test]
    fn remainder_identity_observable_is_translation_taylor_tail() {
        // c = 1: the n = 2 term must equal (eps^2/2) d^2(rho_a)/dQ^2
        let identity = spectral_decompose(DMatrix::<Complex64>::identity(2, 2), &tol()).unwrap();
        let pointer = gaussian_pointer(1.0);
        let eps = 0.1;
        let setup = MeasurementSetup::new(
            identity,
            z_basis(),
            plus_state(),
            pointer.clone(),
            eps,
            &tol(),
        )
        .unwrap();
        let r = remainder_term(&setup, 2, &tol()).unwrap();
        let grid = pointer.grid();
        let first = grid.derivative_real(&pointer.diagonal());
        let second = grid.derivative_real(&first);
        for out in 0..2 {
            for (ri, si) in r.slice(out).iter().zip(&second) {
                assert!(
                    (ri - 0.5 * eps * eps * 0.5 * si).abs() < 1e-8,
                    "{ri} vs {}",
                    0.5 * eps * eps * 0.5 * si
                );
            }
        }
    }

    #[test]
    fn remainder_improves_first_order() {
        let pointer = gaussian_pointer(1.0);
        let basis = rotated_basis(std::f64::consts::FRAC_PI_3);
        let epsilons = [3e-3, 1e-2];
        let mut errors = Vec::new();
        for &eps in &epsilons {
            let setup = setup_with(basis.clone(), pointer.clone(), eps);
            let exact = evolve_exact(&setup).unwrap();
            let fo = first_order_joint(&setup, &tol()).unwrap();
            let r = remainder_term(&setup, 2, &tol()).unwrap();
            let err = exact
                .table()
                .iter()
                .zip(fo.table().iter().zip(r.table().iter()))
                .map(|(e, (f, rr))| (e - f - rr).abs())
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        let slope = (errors[1] / errors[0]).ln() / (epsilons[1] / epsilons[0]).ln();
        assert!((slope - 3.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn measure_shift_zero_coupling() {
        let pointer = gaussian_pointer(1.0);
        let setup = setup_with(rotated_basis(0.4), pointer, 0.0);
        let report = measure_shift(&setup, 0, &tol()).unwrap();
        assert_eq!(report.predicted_shift, 0.0);
        assert!(report.measured_shift.abs() < 1e-10);
        assert_eq!(report.remainder_norm, 0.0);
    }

    #[test]
    fn measure_shift_matches_weak_value() {
        let pointer = gaussian_pointer(1.0);
        let basis = rotated_basis(std::f64::consts::FRAC_PI_3);
        let setup = setup_with(basis, pointer, 1e-3);
        let report = measure_shift(&setup, 0, &tol()).unwrap();
        let expected = -(2.0 + 3.0f64.sqrt());
        assert_relative_eq!(report.weak_value.re, expected, epsilon = 1e-12);
        let rel =
            (report.measured_shift - report.predicted_shift).abs() / report.predicted_shift.abs();
        assert!(rel < 1e-2, "relative error {rel}");
        assert!(report.flags.zero_current);
        assert!(report.flags.weak_coupling);
        assert!(report.flags.remainder_small);
    }

    #[test]
    fn object_marginal_invariance_scales_quadratically() {
        let pointer = gaussian_pointer(1.0);
        let basis = rotated_basis(std::f64::consts::FRAC_PI_3);
        let epsilons = [1e-3, 1e-2];
        let mut drifts = Vec::new();
        let base: Vec<f64> = {
            let setup = setup_with(basis.clone(), pointer.clone(), 0.0);
            evolve_exact(&setup).unwrap().object_marginal()
        };
        for &eps in &epsilons {
            let setup = setup_with(basis.clone(), pointer.clone(), eps);
            let marginal = evolve_exact(&setup).unwrap().object_marginal();
            let drift = marginal
                .iter()
                .zip(&base)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            drifts.push(drift);
        }
        let slope = (drifts[1] / drifts[0]).ln() / (epsilons[1] / epsilons[0]).ln();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }
}
