//! Hermitian observables with cached spectral data, and object density
//! matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_hermitian(m: &DMatrix<Complex64>, tol: &Tolerances) -> Result<()> {
    let scale = max_abs(m).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > tol.hermiticity * scale {
        return Err(Error::NotHermitian {
            max_asymmetry: defect,
            tolerance: tol.hermiticity * scale,
        });
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix. The Hermitian part is taken before decomposing so that
/// tolerance-level asymmetry cannot leak into the spectral data.
fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let symmetrized = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = symmetrized.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// A Hermitian observable together with its distinct eigenvalues and the
/// projectors onto the corresponding eigenspaces.
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    matrix: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
    projectors: Vec<DMatrix<Complex64>>,
}

/// Decomposes a Hermitian matrix into distinct eigenvalues and
/// eigenprojectors. Eigenvalues separated by less than
/// `degeneracy_rel * spectral range` are merged into one projector.
pub fn spectral_decompose(matrix: DMatrix<Complex64>, tol: &Tolerances) -> Result<HermitianObservable> {
    if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: format!("need a nonempty square matrix, got {}x{}", matrix.nrows(), matrix.ncols()),
        });
    }
    check_hermitian(&matrix, tol)?;
    let n = matrix.nrows();
    let (values, vectors) = hermitian_eigen(&matrix);
    let range = values[n - 1] - values[0];
    let gap = tol.degeneracy_rel * range;

    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    for i in 0..n {
        let is_last = i + 1 == n;
        if is_last || values[i + 1] - values[i] > gap {
            let members = start..=i;
            let mut projector = DMatrix::<Complex64>::zeros(n, n);
            let mut value = 0.0;
            for m in members.clone() {
                let v = vectors.column(m);
                projector += &v * v.adjoint();
                value += values[m];
            }
            value /= (i - start + 1) as f64;
            eigenvalues.push(value);
            projectors.push(projector);
            start = i + 1;
        }
    }

    let observable = HermitianObservable {
        matrix,
        eigenvalues,
        projectors,
    };
    observable.check_projectors(tol)?;
    Ok(observable)
}

impl HermitianObservable {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Distinct eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Projectors onto the eigenspaces, aligned with `eigenvalues`.
    pub fn projectors(&self) -> &[DMatrix<Complex64>] {
        &self.projectors
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, &c| acc.max(c.abs()))
    }

    /// The matrix power c^m assembled from spectral data.
    pub fn matrix_power(&self, power: u32) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (c, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += p * Complex64::from(c.powi(power as i32));
        }
        out
    }

    fn check_projectors(&self, tol: &Tolerances) -> Result<()> {
        let n = self.dim();
        let mut completeness = DMatrix::<Complex64>::zeros(n, n);
        for p in &self.projectors {
            completeness += p;
        }
        completeness -= DMatrix::<Complex64>::identity(n, n);
        if max_abs(&completeness) > tol.projector {
            return Err(Error::InvalidParameter {
                name: "projectors",
                reason: format!("completeness defect {:.3e}", max_abs(&completeness)),
            });
        }
        for (i, p) in self.projectors.iter().enumerate() {
            let idem = p * p - p;
            if max_abs(&idem) > tol.projector {
                return Err(Error::InvalidParameter {
                    name: "projectors",
                    reason: format!("projector {i} idempotence defect {:.3e}", max_abs(&idem)),
                });
            }
            for (j, q) in self.projectors.iter().enumerate().skip(i + 1) {
                let cross = p * q;
                if max_abs(&cross) > tol.projector {
                    return Err(Error::InvalidParameter {
                        name: "projectors",
                        reason: format!("projectors {i},{j} not orthogonal: {:.3e}", max_abs(&cross)),
                    });
                }
            }
        }
        // reconstruction against the input
        let mut rebuilt = DMatrix::<Complex64>::zeros(n, n);
        for (c, p) in self.eigenvalues.iter().zip(&self.projectors) {
            rebuilt += p * Complex64::from(*c);
        }
        rebuilt -= &self.matrix;
        let scale = max_abs(&self.matrix).max(1.0);
        if max_abs(&rebuilt) > tol.reconstruction * scale {
            return Err(Error::InvalidParameter {
                name: "spectral data",
                reason: format!("reconstruction defect {:.3e}", max_abs(&rebuilt)),
            });
        }
        Ok(())
    }
}

/// Object density matrix: Hermitian, unit trace, positive semidefinite
/// within tolerance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>, tol: &Tolerances) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity {
                reason: format!("need a nonempty square matrix, got {}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        check_hermitian(&matrix, tol)?;
        let trace: Complex64 = matrix.diagonal().iter().sum();
        if (trace.re - 1.0).abs() > tol.density_trace || trace.im.abs() > tol.density_trace {
            return Err(Error::InvalidDensity {
                reason: format!("trace {trace} differs from 1"),
            });
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values[0] < -tol.density_negativity {
            return Err(Error::InvalidDensity {
                reason: format!("minimum eigenvalue {:.3e} below floor", values[0]),
            });
        }
        Ok(Self { matrix })
    }

    /// Pure state |psi><psi| from a (not necessarily normalized) vector.
    pub fn from_pure(state: &DVector<Complex64>) -> Result<Self> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::InvalidDensity {
                reason: "zero state vector".into(),
            });
        }
        let normalized = state / Complex64::from(norm);
        let matrix = &normalized * normalized.adjoint();
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let matrix = DMatrix::<Complex64>::identity(dim, dim) / Complex64::from(dim as f64);
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// <d| rho |d> for a unit vector d.
    pub fn diagonal_expectation(&self, d: &DVector<Complex64>) -> f64 {
        (d.adjoint() * &self.matrix * d)[(0, 0)].re
    }
}
