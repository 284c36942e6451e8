//! Moments of sampled densities over a grid.

use crate::error::{Error, Result};

/// Mean, standard deviation and total mass of a density sampled on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub norm: f64,
}

/// Computes mean and standard deviation of a (not necessarily normalized)
/// density given its sample positions and the grid spacing.
///
/// Entries may dip slightly negative from floating-point assembly; anything
/// below `-1e-12` relative to the peak is rejected by the caller's
/// validation, not here. A variance within -1e-12 of zero is clamped.
pub fn position_moments(positions: &[f64], density: &[f64], spacing: f64, norm_floor: f64) -> Result<Moments> {
    assert_eq!(positions.len(), density.len());
    let norm: f64 = density.iter().sum::<f64>() * spacing;
    if norm <= norm_floor {
        return Err(Error::DegenerateDistribution { norm, floor: norm_floor });
    }
    let mean = positions
        .iter()
        .zip(density)
        .map(|(&q, &d)| q * d)
        .sum::<f64>()
        * spacing
        / norm;
    let mut variance = positions
        .iter()
        .zip(density)
        .map(|(&q, &d)| (q - mean).powi(2) * d)
        .sum::<f64>()
        * spacing
        / norm;
    if variance < 0.0 {
        debug_assert!(variance > -1e-12, "variance {variance} too negative");
        variance = 0.0;
    }
    Ok(Moments {
        mean,
        std: variance.sqrt(),
        norm,
    })
}
