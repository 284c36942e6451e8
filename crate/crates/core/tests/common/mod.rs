#![allow(dead_code)]

use weaklab::{
    MeasurementSetup, ObjectPreset, PointerGrid, PointerPresetSpec, PointerState, Tolerances,
};

pub fn tolerances() -> Tolerances {
    Tolerances::default()
}

/// 1024 points spanning 40 base widths, the default laboratory grid.
pub fn default_grid() -> PointerGrid {
    PointerGrid::for_pointer_std(1.0).unwrap()
}

pub fn build_pointer(spec: &PointerPresetSpec, grid: &PointerGrid) -> PointerState {
    spec.build(grid, &tolerances()).unwrap()
}

pub fn setup_for(preset: &ObjectPreset, pointer: PointerState, eps: f64) -> MeasurementSetup {
    MeasurementSetup::new(
        preset.observable.clone(),
        preset.postselection.clone(),
        preset.object_state.clone(),
        pointer,
        eps,
        &tolerances(),
    )
    .unwrap()
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// The four zero-current gallery pointers.
pub fn valid_pointer_gallery() -> Vec<PointerPresetSpec> {
    vec![
        PointerPresetSpec::Gaussian { sigma: 1.0, center: 0.0 },
        PointerPresetSpec::Thermal { omega: 1.0, temperature: 1.0 },
        PointerPresetSpec::Superposition { separation: 6.0, sigma: 1.0 },
        PointerPresetSpec::Mixture { separation: 6.0, sigma: 1.0 },
    ]
}

pub fn report(name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail}");
}
