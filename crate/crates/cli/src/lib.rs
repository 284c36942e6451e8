//! Scenario runner for the weak-measurement laboratory: parses scenario
//! files, sweeps coupling strengths over pointer galleries in parallel, fits
//! convergence slopes and writes CSV/JSON reports.

pub mod fit;
pub mod report;
pub mod run;
pub mod scenario;
