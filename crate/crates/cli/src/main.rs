use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weaklab::{audit_gallery, object_presets, PointerGrid, Tolerances};
use weaklab_cli::report::write_outputs;
use weaklab_cli::run::{execute, RunError};
use weaklab_cli::scenario::Scenario;

/// Weak-measurement laboratory: scenario-driven coupling sweeps over
/// object/pointer galleries, with CSV and JSON reports.
#[derive(Parser)]
#[command(name = "weaklab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write report.csv / report.json.
    Run {
        /// Scenario file (TOML).
        file: PathBuf,
        /// Worker threads for the sweep (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides the scenario's `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override (classical ensembles).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario file without running it.
    Validate {
        /// Scenario file (TOML).
        file: PathBuf,
    },
    /// List object presets and pointer preset kinds.
    ListPresets,
    /// Build every standard pointer preset and check the zero-current
    /// predicate against its expectation.
    AuditGallery {
        #[arg(long, default_value_t = 1024)]
        grid_points: usize,
        #[arg(long, default_value_t = 40.0)]
        length: f64,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_PHYSICS: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            file,
            workers,
            out,
            seed,
        } => cmd_run(&file, workers, out, seed),
        Command::Validate { file } => cmd_validate(&file),
        Command::ListPresets => cmd_list_presets(),
        Command::AuditGallery {
            grid_points,
            length,
        } => cmd_audit_gallery(grid_points, length),
    }
}

fn cmd_run(
    file: &PathBuf,
    workers: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> ExitCode {
    let mut scenario = match Scenario::from_path(file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("invalid scenario {}:\n{e}", file.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let report = match execute(&scenario, workers) {
        Ok(r) => r,
        Err(e @ RunError::Validation(_)) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
        Err(e @ RunError::Physics(_)) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_PHYSICS);
        }
        Err(e @ RunError::Runtime(_)) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let dir = out
        .or_else(|| scenario.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match write_outputs(&dir, &report) {
        Ok((csv, json)) => {
            println!(
                "{} records in {:.2}s -> {} and {}",
                report.records.len(),
                report.timings.total_seconds,
                csv.display(),
                json.display()
            );
            for fit in &report.slopes {
                println!(
                    "slope[{} outcome {}] = {:.3} +- {:.3} (r^2 {:.4}, {} points)",
                    fit.pointer, fit.outcome, fit.fit.slope, fit.fit.confidence, fit.fit.r_squared,
                    fit.fit.points
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write outputs to {}: {e}", dir.display());
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_validate(file: &PathBuf) -> ExitCode {
    match Scenario::from_path(file) {
        Ok(s) => {
            println!(
                "scenario valid: engine {}, {} pointer(s), {} sweep value(s)",
                s.engine.as_str(),
                s.pointers.len(),
                s.epsilons().len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("invalid scenario {}:\n{e}", file.display());
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn cmd_list_presets() -> ExitCode {
    let tol = Tolerances::default();
    println!("object presets:");
    for preset in object_presets(&tol) {
        let refs: Vec<String> = preset
            .reference_weak_values
            .iter()
            .map(|v| match v {
                Some(c) => format!("{:.4}{:+.4}i", c.re, c.im),
                None => "-".into(),
            })
            .collect();
        println!(
            "  {:<18} dim {}  c_w per outcome: [{}]  ({})",
            preset.name,
            preset.object_state.dim(),
            refs.join(", "),
            preset.notes
        );
    }
    println!();
    println!("pointer preset kinds (quantum scenarios):");
    println!("  gaussian       {{ sigma, center }}");
    println!("  thermal        {{ omega, temperature }}");
    println!("  superposition  {{ separation, sigma }}");
    println!("  mixture        {{ separation, sigma }}");
    println!("  boosted        {{ k0, sigma }}   (carries current; invalid on purpose)");
    println!();
    println!("classical pointers: {{ std_pos, std_mom, mean_pos, mean_mom, correlation }}");
    println!("classical observables: q, p, q2p2");
    ExitCode::SUCCESS
}

fn cmd_audit_gallery(grid_points: usize, length: f64) -> ExitCode {
    let tol = Tolerances::default();
    let grid = match PointerGrid::new(grid_points, length) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("invalid grid: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let rows = match audit_gallery(&grid, &tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("audit failed: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    println!(
        "{:<38} {:>8} {:>8} {:>12}  {:<8} {}",
        "pointer", "purity", "std", "current_max", "verdict", "expected"
    );
    let mut all_ok = true;
    for row in &rows {
        let verdict = if row.zero_current { "valid" } else { "invalid" };
        let expected = if row.expected_zero_current {
            "valid"
        } else {
            "invalid"
        };
        let marker = if row.matches_expectation() {
            ""
        } else {
            "  <-- MISMATCH"
        };
        all_ok &= row.matches_expectation();
        println!(
            "{:<38} {:>8.4} {:>8.4} {:>12.3e}  {:<8} {}{}",
            row.name, row.purity, row.position_std, row.current_max, verdict, expected, marker
        );
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PHYSICS)
    }
}
