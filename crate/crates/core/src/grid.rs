//! Uniform periodic position grid with spectral momentum operations.
//!
//! The grid fixes the discrete calculus used everywhere else: translations
//! are phase multiplications in momentum space (exact and unitary on the
//! periodic box), derivatives and powers of the momentum operator are
//! applied through the same transform. ħ = 1 throughout.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::config::{DEFAULT_GRID_POINTS, DEFAULT_LENGTH_SIGMAS};
use crate::error::{Error, Result};

/// Uniform grid of `n_points` positions covering a periodic box of the given
/// `length`, centered on zero. The conjugate momentum grid has spacing
/// `2*pi/length`.
#[derive(Clone)]
pub struct PointerGrid {
    n_points: usize,
    length: f64,
    spacing: f64,
    positions: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PointerGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointerGrid")
            .field("n_points", &self.n_points)
            .field("length", &self.length)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for PointerGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.length == other.length
    }
}

impl PointerGrid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < 4 {
            return Err(Error::InvalidParameter {
                name: "n_points",
                reason: format!("need at least 4 grid points, got {n_points}"),
            });
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: format!("box length must be positive, got {length}"),
            });
        }
        let spacing = length / n_points as f64;
        let half = (n_points / 2) as isize;
        let positions = (0..n_points)
            .map(|m| (m as isize - half) as f64 * spacing)
            .collect();
        // fftfreq layout: 0, 1, .., n/2-1, -n/2, .., -1 (times 2*pi/length)
        let dk = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n_points)
            .map(|j| {
                let s = if j < n_points.div_ceil(2) {
                    j as isize
                } else {
                    j as isize - n_points as isize
                };
                s as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_points);
        let ifft = planner.plan_fft_inverse(n_points);
        Ok(Self {
            n_points,
            length,
            spacing,
            positions,
            wavenumbers,
            fft,
            ifft,
        })
    }

    /// Default grid sized for a pointer state of standard deviation `sigma`:
    /// 1024 points spanning 40 sigma.
    pub fn for_pointer_std(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("standard deviation must be positive, got {sigma}"),
            });
        }
        Self::new(DEFAULT_GRID_POINTS, DEFAULT_LENGTH_SIGMAS * sigma)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, index: usize) -> f64 {
        self.positions[index]
    }

    /// Signed momentum-grid values in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest admissible translation before the guard against periodic
    /// wrap-around trips: a quarter of the box.
    pub fn translation_limit(&self) -> f64 {
        self.length / 4.0
    }

    pub(crate) fn fft_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_points);
        self.fft.process(buf);
    }

    /// Inverse transform including the 1/N normalization.
    pub(crate) fn ifft_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n_points);
        self.ifft.process(buf);
        let norm = 1.0 / self.n_points as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }

    /// Applies exp(-i a P) to a position-space vector: the exact periodic
    /// translation by `a`. Unitary for any real `a`.
    pub fn translate_vector(&self, buf: &mut [Complex64], a: f64) {
        self.fft_in_place(buf);
        for (v, &k) in buf.iter_mut().zip(&self.wavenumbers) {
            *v *= Complex64::from_polar(1.0, -k * a);
        }
        self.ifft_in_place(buf);
    }

    /// Applies P^power to a position-space vector through the momentum grid.
    ///
    /// For even grids the unpaired Nyquist mode has no well-defined sign; its
    /// coefficient is zeroed so that real symmetric kernels carry exactly no
    /// current and derivatives of real vectors stay real.
    pub fn momentum_apply(&self, buf: &mut [Complex64], power: u32) {
        if power == 0 {
            return;
        }
        self.fft_in_place(buf);
        let nyquist = if self.n_points % 2 == 0 {
            Some(self.n_points / 2)
        } else {
            None
        };
        for (j, (v, &k)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            if Some(j) == nyquist {
                *v = Complex64::ZERO;
            } else {
                *v *= k.powi(power as i32);
            }
        }
        self.ifft_in_place(buf);
    }

    /// Spectral d/dQ of a real sampled function.
    pub fn derivative_real(&self, values: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.momentum_apply(&mut buf, 1);
        // d/dQ = i P
        buf.iter().map(|v| -v.im).collect()
    }

    /// Translates a sampled (possibly complex) function by `a` and returns it.
    pub fn translated(&self, values: &[Complex64], a: f64) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.translate_vector(&mut buf, a);
        buf
    }
}
