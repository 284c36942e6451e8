//! Randomized properties of the discrete calculus.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use weaklab::{PointerGrid, PointerState, Tolerances};

fn small_grid() -> PointerGrid {
    PointerGrid::new(64, 16.0).unwrap()
}

fn gaussian_state(grid: &PointerGrid, sigma: f64, center: f64, boost: f64) -> PointerState {
    let psi: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|&q| Complex64::from_polar((-((q - center) / sigma).powi(2) / 4.0).exp(), boost * q))
        .collect();
    PointerState::from_wavefunction(grid.clone(), &psi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Translations compose additively and invert exactly.
    #[test]
    fn translation_group_property(a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let grid = small_grid();
        let state = gaussian_state(&grid, 1.0, 0.3, 0.4);
        let two_step = state.translate(a).unwrap().translate(b).unwrap();
        let one_step = state.translate(a + b).unwrap();
        let diff = (two_step.kernel() - one_step.kernel())
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        prop_assert!(diff < 1e-11, "composition defect {diff}");

        let back = state.translate(a).unwrap().translate(-a).unwrap();
        let round = (back.kernel() - state.kernel())
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        prop_assert!(round < 1e-11, "inverse defect {round}");
    }

    /// Translation preserves trace and purity (unitary conjugation).
    #[test]
    fn translation_preserves_trace_and_purity(a in -2.0f64..2.0, w in 0.1f64..0.9) {
        let grid = small_grid();
        let left = gaussian_state(&grid, 0.8, -1.0, 0.0);
        let right = gaussian_state(&grid, 1.2, 1.0, 0.0);
        let mixed = PointerState::mixture(&[(w, left), (1.0 - w, right)]).unwrap();
        let moved = mixed.translate(a).unwrap();
        prop_assert!((moved.trace() - mixed.trace()).abs() < 1e-10);
        prop_assert!((moved.purity() - mixed.purity()).abs() < 1e-10);
    }

    /// Any real symmetric PSD kernel carries zero current.
    #[test]
    fn real_kernels_have_no_current(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let grid = PointerGrid::new(32, 12.0).unwrap();
        let n = grid.n_points();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let k = &a * a.transpose();
        let trace: f64 = k.diagonal().iter().sum::<f64>() * grid.spacing();
        let kernel = DMatrix::from_fn(n, n, |i, j| Complex64::new(k[(i, j)] / trace, 0.0));
        let state = PointerState::from_kernel(grid, kernel, &Tolerances::default()).unwrap();
        let max_current = state
            .current_density()
            .iter()
            .fold(0.0f64, |acc, &j| acc.max(j.abs()));
        prop_assert!(max_current < 1e-10, "current {max_current}");
    }

    /// Boost shifts the mean momentum without touching the position density.
    #[test]
    fn boost_moves_momentum_only(k0 in -2.0f64..2.0) {
        let grid = small_grid();
        let plain = gaussian_state(&grid, 1.0, 0.0, 0.0);
        let boosted = gaussian_state(&grid, 1.0, 0.0, k0);
        let diag_diff = plain
            .diagonal()
            .iter()
            .zip(boosted.diagonal())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        prop_assert!(diag_diff < 1e-12);
        let mean = boosted.momentum_moments().unwrap().mean;
        prop_assert!((mean - k0).abs() < 1e-6, "mean {mean} vs {k0}");
    }
}
