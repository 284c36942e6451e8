//! Scenario execution: independent sweep cells run on a bounded worker pool
//! and are reduced in input order, so parallel and serial runs produce
//! identical records.

use rayon::prelude::*;
use std::time::Instant;

use weaklab::quantum::measure_shifts;
use weaklab::{
    classical_shift_experiment, object_preset_by_name, Error, MeasurementSetup, PointerGrid,
    PointerState, ShiftConfig, Tolerances,
};

use crate::fit::fit_slope;
use crate::report::{
    classical_flags, quantum_flags, FitRecord, Record, RunReport, Timings, SCHEMA_VERSION,
};
use crate::scenario::{Engine, PointerSpec, Scenario};

/// Execution failures, split by the exit code they map to.
#[derive(Debug)]
pub enum RunError {
    /// Exit code 1: the scenario references something unusable.
    Validation(String),
    /// Exit code 2: a physics validity flag failed (e.g. an invalid pointer
    /// without `allow_invalid_pointers`).
    Physics(String),
    /// Exit code 3: an engine error at a specific sweep cell.
    Runtime(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(m) => write!(f, "validation error: {m}"),
            RunError::Physics(m) => write!(f, "physics flag failure: {m}"),
            RunError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

pub fn execute(scenario: &Scenario, workers: Option<usize>) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let body = || match scenario.engine {
        Engine::Quantum => run_quantum(scenario),
        Engine::Classical => run_classical(scenario),
    };
    let (records, slopes) = match workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Runtime(format!("cannot build worker pool: {e}")))?;
            pool.install(body)?
        }
        _ => body()?,
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        seed: scenario.seed,
        scenario: scenario.clone(),
        records,
        slopes,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

type Cells = (Vec<Record>, Vec<FitRecord>);

fn run_quantum(scenario: &Scenario) -> Result<Cells, RunError> {
    let tol = Tolerances::default();
    let preset_name = scenario.object.preset.as_deref().expect("validated");
    let preset = object_preset_by_name(preset_name, &tol)
        .ok_or_else(|| RunError::Validation(format!("unknown object preset {preset_name}")))?;
    let grid_spec = scenario.grid.unwrap_or_default();
    let grid = PointerGrid::new(grid_spec.n_points, grid_spec.length)
        .map_err(|e| RunError::Validation(format!("grid: {e}")))?;

    let mut pointers: Vec<(String, PointerState)> = Vec::new();
    for (i, spec) in scenario.pointers.iter().enumerate() {
        let PointerSpec::Quantum(preset_spec) = spec else {
            unreachable!("validated");
        };
        let state = preset_spec
            .build(&grid, &tol)
            .map_err(|e| RunError::Validation(format!("pointers[{i}]: {e}")))?;
        pointers.push((preset_spec.name(), state));
    }

    if !scenario.allow_invalid_pointers {
        for (name, state) in &pointers {
            if !state.has_zero_current(&tol) {
                return Err(RunError::Physics(format!(
                    "pointer {name} fails the zero-current predicate (max normalized current \
                     {:.3e}); set allow_invalid_pointers = true to run it anyway",
                    state.normalized_current_max()
                )));
            }
        }
    }

    let outcomes: Vec<usize> = scenario
        .outcomes
        .clone()
        .unwrap_or_else(|| (0..preset.postselection.len()).collect());
    let epsilons = scenario.epsilons();

    let cells: Vec<(usize, f64)> = (0..pointers.len())
        .flat_map(|pi| epsilons.iter().map(move |&eps| (pi, eps)))
        .collect();

    let per_cell: Vec<Result<Vec<Record>, RunError>> = cells
        .par_iter()
        .map(|&(pi, eps)| {
            let (name, state) = &pointers[pi];
            let coords = format!("(pointer {name}, epsilon {eps:e})");
            let setup = MeasurementSetup::new(
                preset.observable.clone(),
                preset.postselection.clone(),
                preset.object_state.clone(),
                state.clone(),
                eps,
                &tol,
            )
            .map_err(|e| RunError::Runtime(format!("{coords}: {e}")))?;
            let run = measure_shifts(&setup, &outcomes, &tol)
                .map_err(|e| RunError::Runtime(format!("{coords}: {e}")))?;
            let marginal = run.joint.object_marginal();
            Ok(run
                .reports
                .iter()
                .map(|r| Record {
                    engine: "quantum",
                    pointer: name.clone(),
                    epsilon: eps,
                    outcome: r.outcome,
                    cw_re: r.weak_value.re,
                    cw_im: r.weak_value.im,
                    predicted_shift: r.predicted_shift,
                    measured_shift: r.measured_shift,
                    abs_err: (r.measured_shift - r.predicted_shift).abs(),
                    remainder_norm: Some(r.remainder_norm),
                    weakness_ratio: r.weakness_ratio,
                    current_max: r.current_max,
                    marginal_drift: (marginal[r.outcome] - r.postselection_probability).abs(),
                    flags: quantum_flags(
                        r.flags.zero_current,
                        r.flags.weak_coupling,
                        r.flags.remainder_small,
                    ),
                })
                .collect())
        })
        .collect();

    let mut records = Vec::new();
    for cell in per_cell {
        records.extend(cell?);
    }

    let mut slopes = Vec::new();
    for (name, _) in &pointers {
        for &outcome in &outcomes {
            let points: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| &r.pointer == name && r.outcome == outcome)
                .map(|r| (r.epsilon, r.abs_err))
                .filter(|&(e, y)| e > 0.0 && y > 0.0)
                .collect();
            if points.len() >= 4 {
                if let Ok(fit) = fit_slope(&points) {
                    slopes.push(FitRecord {
                        pointer: name.clone(),
                        outcome,
                        fit,
                    });
                }
            }
        }
    }
    Ok((records, slopes))
}

fn run_classical(scenario: &Scenario) -> Result<Cells, RunError> {
    let tol = Tolerances::default();
    let kind = scenario.object.observable.expect("validated");
    let object = scenario.object.distribution.expect("validated");
    let ensemble = scenario.ensemble.unwrap_or_default();

    let pointers: Vec<(String, weaklab::BivariateGaussian)> = scenario
        .pointers
        .iter()
        .map(|spec| {
            let PointerSpec::Classical(g) = spec else {
                unreachable!("validated");
            };
            (spec.name(), *g)
        })
        .collect();
    let epsilons = scenario.epsilons();

    let cells: Vec<(usize, f64)> = (0..pointers.len())
        .flat_map(|pi| epsilons.iter().map(move |&eps| (pi, eps)))
        .collect();

    let per_cell: Vec<Result<Vec<Record>, RunError>> = cells
        .par_iter()
        .map(|&(pi, eps)| {
            let (name, pointer) = &pointers[pi];
            let coords = format!("(pointer {name}, epsilon {eps:e})");
            let cfg = ShiftConfig {
                n_samples: ensemble.n_samples,
                bins: ensemble.bins,
                bin_halfwidth_stds: ensemble.bin_halfwidth_stds,
                substeps: ensemble.substeps,
                seed: scenario.seed,
                allow_nonzero_current: scenario.allow_invalid_pointers,
                chi_square_confidence: 0.99,
            };
            let c = kind.build();
            let rep = classical_shift_experiment(&object, pointer, &c, eps, &cfg).map_err(|e| {
                match e {
                    Error::NonzeroCurrent { .. } => RunError::Physics(format!(
                        "{coords}: {e}; set allow_invalid_pointers = true to run it anyway"
                    )),
                    other => RunError::Runtime(format!("{coords}: {other}")),
                }
            })?;
            Ok(rep
                .bins
                .iter()
                .enumerate()
                .map(|(bin, row)| Record {
                    engine: "classical",
                    pointer: name.clone(),
                    epsilon: eps,
                    outcome: bin,
                    cw_re: row.weak_value,
                    cw_im: 0.0,
                    predicted_shift: row.predicted,
                    measured_shift: row.measured,
                    abs_err: (row.measured - row.predicted).abs(),
                    remainder_norm: None,
                    weakness_ratio: rep.weakness_ratio,
                    current_max: rep.current.max_abs_mean,
                    marginal_drift: rep.marginal.max_fraction_diff,
                    flags: classical_flags(
                        rep.current.vanishing,
                        rep.weakness_ratio < tol.weakness_max,
                        rep.marginal.pass,
                        rep.marginal.exact,
                    ),
                })
                .collect())
        })
        .collect();

    let mut records = Vec::new();
    for cell in per_cell {
        records.extend(cell?);
    }
    // per-bin errors are statistical noise; slope fits are quantum-only
    Ok((records, Vec::new()))
}
