//! Pointer states: position-basis density kernels on a periodic grid.
//!
//! A kernel is continuum-normalized, `sum(diag) * spacing = 1`, so the
//! diagonal is a probability density in the pointer position. Translations
//! and momentum-operator applications act through the grid's spectral
//! calculus, which makes `exp(-i a P)` an exact unitary on the box.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::grid::PointerGrid;
use crate::moments::{position_moments, Moments};

#[derive(Debug, Clone)]
pub struct PointerState {
    grid: PointerGrid,
    kernel: DMatrix<Complex64>,
}

/// Applies `F^dag diag(multiplier) F` to every column of `kernel` in place.
fn left_apply(grid: &PointerGrid, kernel: &mut DMatrix<Complex64>, multiplier: &[Complex64]) {
    let n = grid.n_points();
    let data = kernel.as_mut_slice();
    for col in 0..n {
        let slice = &mut data[col * n..(col + 1) * n];
        grid.fft_in_place(slice);
        for (v, m) in slice.iter_mut().zip(multiplier) {
            *v *= m;
        }
        grid.ifft_in_place(slice);
    }
}

/// Right-multiplies `kernel` by the adjoint of `F^dag diag(multiplier) F`
/// in place, one row at a time.
fn right_apply_adjoint(grid: &PointerGrid, kernel: &mut DMatrix<Complex64>, multiplier: &[Complex64]) {
    let n = grid.n_points();
    let mut scratch = vec![Complex64::ZERO; n];
    for row in 0..n {
        for (j, s) in scratch.iter_mut().enumerate() {
            *s = kernel[(row, j)].conj();
        }
        grid.fft_in_place(&mut scratch);
        for (v, m) in scratch.iter_mut().zip(multiplier) {
            *v *= m;
        }
        grid.ifft_in_place(&mut scratch);
        for (j, s) in scratch.iter().enumerate() {
            kernel[(row, j)] = s.conj();
        }
    }
}

fn translation_multiplier(grid: &PointerGrid, a: f64) -> Vec<Complex64> {
    grid.wavenumbers()
        .iter()
        .map(|&k| Complex64::from_polar(1.0, -k * a))
        .collect()
}

/// Multiplier for P^power; the unpaired Nyquist mode is zeroed (see
/// `PointerGrid::momentum_apply`).
fn momentum_multiplier(grid: &PointerGrid, power: u32) -> Vec<Complex64> {
    let n = grid.n_points();
    let nyquist = if n % 2 == 0 { Some(n / 2) } else { None };
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if power > 0 && Some(j) == nyquist {
                Complex64::ZERO
            } else {
                Complex64::from(k.powi(power as i32))
            }
        })
        .collect()
}

impl PointerState {
    /// Validates and wraps a position-basis kernel.
    pub fn from_kernel(grid: PointerGrid, kernel: DMatrix<Complex64>, tol: &Tolerances) -> Result<Self> {
        let n = grid.n_points();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: kernel.nrows(),
            });
        }
        let scale = kernel.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                asym = asym.max((kernel[(i, j)] - kernel[(j, i)].conj()).norm());
            }
        }
        if asym > tol.hermiticity * scale {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
                tolerance: tol.hermiticity * scale,
            });
        }
        let trace: f64 = kernel.diagonal().iter().map(|v| v.re).sum::<f64>() * grid.spacing();
        if (trace - 1.0).abs() > tol.pointer_trace {
            return Err(Error::InvalidPointerState {
                reason: format!("continuum trace {trace} differs from 1"),
            });
        }
        for v in kernel.diagonal().iter() {
            if v.re < -tol.pointer_diag_negativity {
                return Err(Error::InvalidPointerState {
                    reason: format!("negative diagonal entry {:.3e}", v.re),
                });
            }
        }
        Ok(Self { grid, kernel })
    }

    /// Pure state from a sampled wavefunction; the amplitude is rescaled so
    /// that `sum |psi|^2 * spacing = 1`.
    pub fn from_wavefunction(grid: PointerGrid, psi: &[Complex64]) -> Result<Self> {
        let n = grid.n_points();
        if psi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: psi.len(),
            });
        }
        let norm_sq: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing();
        if norm_sq <= 0.0 {
            return Err(Error::InvalidPointerState {
                reason: "wavefunction has zero norm".into(),
            });
        }
        let scale = 1.0 / norm_sq.sqrt();
        let normalized: Vec<Complex64> = psi.iter().map(|v| v * scale).collect();
        let kernel = DMatrix::from_fn(n, n, |i, j| normalized[i] * normalized[j].conj());
        Ok(Self { grid, kernel })
    }

    /// Classical mixture of pointer states on a shared grid; weights must sum
    /// to one.
    pub fn mixture(components: &[(f64, PointerState)]) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidParameter {
                name: "components",
                reason: "empty mixture".into(),
            });
        };
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 || components.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("weights must be nonnegative and sum to 1, got total {total}"),
            });
        }
        let grid = first.grid.clone();
        let n = grid.n_points();
        let mut kernel = DMatrix::<Complex64>::zeros(n, n);
        for (w, state) in components {
            if state.grid != grid {
                return Err(Error::InvalidParameter {
                    name: "components",
                    reason: "mixture components live on different grids".into(),
                });
            }
            kernel += &state.kernel * Complex64::from(*w);
        }
        Ok(Self { grid, kernel })
    }

    pub(crate) fn from_kernel_unchecked(grid: PointerGrid, kernel: DMatrix<Complex64>) -> Self {
        Self { grid, kernel }
    }

    pub fn grid(&self) -> &PointerGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    /// Position probability density (the kernel diagonal).
    pub fn diagonal(&self) -> Vec<f64> {
        self.kernel.diagonal().iter().map(|v| v.re).collect()
    }

    /// Continuum trace, `sum(diag) * spacing`.
    pub fn trace(&self) -> f64 {
        self.kernel.diagonal().iter().map(|v| v.re).sum::<f64>() * self.grid.spacing()
    }

    /// Tr(rho^2) in continuum normalization: 1 for pure states.
    pub fn purity(&self) -> f64 {
        let d2 = self.grid.spacing().powi(2);
        self.kernel.iter().map(|v| v.norm_sqr()).sum::<f64>() * d2
    }

    pub fn position_moments(&self, tol: &Tolerances) -> Result<Moments> {
        position_moments(
            self.grid.positions(),
            &self.diagonal(),
            self.grid.spacing(),
            tol.degenerate_norm,
        )
    }

    /// Displaces the state by `a`: the kernel becomes
    /// `rho(Q - a, Q' - a)` through exact momentum-space phases.
    pub fn translate(&self, a: f64) -> Result<PointerState> {
        let limit = self.grid.translation_limit();
        if !a.is_finite() || a.abs() >= limit {
            return Err(Error::TranslationOutOfRange { shift: a, limit });
        }
        let mut kernel = self.kernel.clone();
        let mult = translation_multiplier(&self.grid, a);
        left_apply(&self.grid, &mut kernel, &mult);
        right_apply_adjoint(&self.grid, &mut kernel, &mult);
        Ok(Self::from_kernel_unchecked(self.grid.clone(), kernel))
    }

    /// Probability current density
    /// `j(Q) = (<Q|P rho|Q> + <Q|rho P|Q>) / 2 = Re <Q|rho P|Q>`,
    /// evaluated per grid point.
    pub fn current_density(&self) -> Vec<f64> {
        self.momentum_cross_diagonal(0, 1)
            .iter()
            .map(|v| v.re)
            .collect()
    }

    /// Max |current| normalized by `sigma_P * max diagonal`, the scale of a
    /// maximal current the state could carry.
    pub fn normalized_current_max(&self) -> f64 {
        let raw = self
            .current_density()
            .iter()
            .fold(0.0f64, |acc, &j| acc.max(j.abs()));
        if raw == 0.0 {
            return 0.0;
        }
        let peak = self.diagonal().iter().fold(0.0f64, |acc, &d| acc.max(d));
        let sigma_p = match self.momentum_moments() {
            Ok(m) => m.std,
            Err(_) => 0.0,
        };
        let denom = sigma_p * peak;
        if denom <= f64::MIN_POSITIVE {
            f64::INFINITY
        } else {
            raw / denom
        }
    }

    /// Whether the zero-current validity condition holds at the configured
    /// tolerance.
    pub fn has_zero_current(&self, tol: &Tolerances) -> bool {
        self.normalized_current_max() < tol.zero_current
    }

    /// Momentum probability density `<k|rho|k>` on the sorted momentum grid.
    /// Integrates to one against the momentum spacing `2*pi/length`.
    pub fn momentum_distribution(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n_points();
        let mut m = self.kernel.clone();
        // F rho F^dag, diagonal only; the centered-grid phase decorations
        // cancel between the two factors.
        {
            let data = m.as_mut_slice();
            for col in 0..n {
                self.grid.fft_in_place(&mut data[col * n..(col + 1) * n]);
            }
        }
        let mut scratch = vec![Complex64::ZERO; n];
        let mut diag = vec![0.0f64; n];
        for row in 0..n {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = m[(row, j)].conj();
            }
            self.grid.fft_in_place(&mut scratch);
            diag[row] = scratch[row].conj().re;
        }
        let scale = self.grid.spacing().powi(2) / (2.0 * std::f64::consts::PI);
        let mut pairs: Vec<(f64, f64)> = self
            .grid
            .wavenumbers()
            .iter()
            .zip(&diag)
            .map(|(&k, &d)| (k, d * scale))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    /// Mean and standard deviation of the pointer momentum.
    pub fn momentum_moments(&self) -> Result<Moments> {
        let (ks, density) = self.momentum_distribution();
        let dk = 2.0 * std::f64::consts::PI / self.grid.length();
        position_moments(&ks, &density, dk, 1e-14)
    }

    /// Diagonal of `T(a) rho T(b)^dag` where `T` is the exact periodic
    /// translation. For `a = b` this is the displaced position density.
    pub(crate) fn cross_translated_diagonal(&self, a: f64, b: f64) -> Vec<Complex64> {
        let mut kernel = self.kernel.clone();
        if a != 0.0 {
            let mult = translation_multiplier(&self.grid, a);
            left_apply(&self.grid, &mut kernel, &mult);
        }
        if b != 0.0 {
            let mult = translation_multiplier(&self.grid, b);
            right_apply_adjoint(&self.grid, &mut kernel, &mult);
        }
        kernel.diagonal().iter().copied().collect()
    }

    /// Diagonal of `P^left rho P^right`.
    pub(crate) fn momentum_cross_diagonal(&self, left: u32, right: u32) -> Vec<Complex64> {
        let mut kernel = self.kernel.clone();
        if left > 0 {
            let mult = momentum_multiplier(&self.grid, left);
            left_apply(&self.grid, &mut kernel, &mult);
        }
        if right > 0 {
            let mult = momentum_multiplier(&self.grid, right);
            right_apply_adjoint(&self.grid, &mut kernel, &mult);
        }
        kernel.diagonal().iter().copied().collect()
    }
}
