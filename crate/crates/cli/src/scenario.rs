//! Scenario file schema and validation.
//!
//! A scenario is a single TOML document. Top-level keys: `engine`, `seed`,
//! `object`, `pointers`, `sweep`, `grid` (quantum), `ensemble` (classical),
//! `outcomes`, `allow_invalid_pointers`, `output`. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weaklab::{object_preset_by_name, BivariateGaussian, CNumberObservable, PointerPresetSpec, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Quantum,
    Classical,
}

impl Engine {
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Quantum => "quantum",
            Engine::Classical => "classical",
        }
    }
}

/// Object side: a named quantum preset, or a classical observable plus
/// phase-space distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ClassicalObservableKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<BivariateGaussian>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalObservableKind {
    Q,
    P,
    Q2P2,
}

impl ClassicalObservableKind {
    pub fn build(&self) -> CNumberObservable {
        match self {
            Self::Q => CNumberObservable::position(),
            Self::P => CNumberObservable::momentum(),
            Self::Q2P2 => CNumberObservable::quadratic(),
        }
    }
}

/// Pointer entry: a quantum gallery preset (tagged by `kind`) or a classical
/// phase-space Gaussian (std_pos/std_mom fields).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointerSpec {
    Quantum(PointerPresetSpec),
    Classical(BivariateGaussian),
}

impl PointerSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Quantum(p) => p.name(),
            Self::Classical(g) => format!(
                "phase_gaussian(stdQ={},stdP={},meanP={},corr={})",
                g.std_pos, g.std_mom, g.mean_mom, g.correlation
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometric: Option<GeometricSweep>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricSweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_grid_points")]
    pub n_points: usize,
    #[serde(default = "default_grid_length")]
    pub length: f64,
}

fn default_grid_points() -> usize {
    weaklab::config::DEFAULT_GRID_POINTS
}

fn default_grid_length() -> f64 {
    weaklab::config::DEFAULT_LENGTH_SIGMAS
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_points: default_grid_points(),
            length: default_grid_length(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_substeps")]
    pub substeps: u32,
    #[serde(default = "default_halfwidth")]
    pub bin_halfwidth_stds: f64,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_bins() -> usize {
    41
}

fn default_substeps() -> u32 {
    64
}

fn default_halfwidth() -> f64 {
    4.0
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
            bins: default_bins(),
            substeps: default_substeps(),
            bin_halfwidth_stds: default_halfwidth(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    pub object: ObjectSpec,
    pub pointers: Vec<PointerSpec>,
    pub sweep: SweepSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<usize>>,
    #[serde(default)]
    pub allow_invalid_pointers: bool,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    pub fn from_str(text: &str) -> Result<Self, String> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| e.to_string())?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_str(&text)
    }

    /// Resolved coupling sweep, sorted ascending.
    pub fn epsilons(&self) -> Vec<f64> {
        if let Some(list) = &self.sweep.epsilons {
            return list.clone();
        }
        let g = self.sweep.geometric.expect("validated sweep");
        let ratio = (g.stop / g.start).ln() / (g.count - 1) as f64;
        (0..g.count)
            .map(|i| g.start * (ratio * i as f64).exp())
            .collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut errors: Vec<String> = Vec::new();

        // sweep
        match (&self.sweep.epsilons, &self.sweep.geometric) {
            (Some(_), Some(_)) => {
                errors.push("sweep: give either `epsilons` or `geometric`, not both".into())
            }
            (None, None) => errors.push("sweep: one of `epsilons` or `geometric` required".into()),
            (Some(list), None) => {
                if list.is_empty() {
                    errors.push("sweep.epsilons: empty list".into());
                }
                if list.iter().any(|e| !e.is_finite() || *e < 0.0) {
                    errors.push("sweep.epsilons: values must be finite and nonnegative".into());
                }
                if list.windows(2).any(|w| w[0] > w[1]) {
                    errors.push("sweep.epsilons: values must be sorted ascending".into());
                }
            }
            (None, Some(g)) => {
                if !(g.start > 0.0 && g.stop > g.start && g.count >= 2) {
                    errors.push(
                        "sweep.geometric: need 0 < start < stop and count >= 2".into(),
                    );
                }
            }
        }

        if self.pointers.is_empty() {
            errors.push("pointers: at least one pointer required".into());
        }

        match self.engine {
            Engine::Quantum => {
                let tol = Tolerances::default();
                match &self.object.preset {
                    None => errors.push("object.preset: required for the quantum engine".into()),
                    Some(name) => match object_preset_by_name(name, &tol) {
                        None => errors.push(format!("object.preset: unknown preset `{name}`")),
                        Some(preset) => {
                            if let Some(outcomes) = &self.outcomes {
                                for &o in outcomes {
                                    if o >= preset.postselection.len() {
                                        errors.push(format!(
                                            "outcomes: index {o} out of range for preset `{name}` \
                                             ({} outcomes)",
                                            preset.postselection.len()
                                        ));
                                    }
                                }
                            }
                        }
                    },
                }
                if self.object.observable.is_some() || self.object.distribution.is_some() {
                    errors.push(
                        "object: `observable`/`distribution` apply to the classical engine".into(),
                    );
                }
                if self.ensemble.is_some() {
                    errors.push("ensemble: applies to the classical engine".into());
                }
                for (i, p) in self.pointers.iter().enumerate() {
                    if matches!(p, PointerSpec::Classical(_)) {
                        errors.push(format!(
                            "pointers[{i}]: classical phase-space pointer in a quantum scenario"
                        ));
                    }
                }
            }
            Engine::Classical => {
                if self.object.observable.is_none() {
                    errors.push("object.observable: required for the classical engine".into());
                }
                match &self.object.distribution {
                    None => {
                        errors.push("object.distribution: required for the classical engine".into())
                    }
                    Some(d) => {
                        if let Err(e) = d.validate() {
                            errors.push(format!("object.distribution: {e}"));
                        }
                    }
                }
                if self.object.preset.is_some() {
                    errors.push("object.preset: applies to the quantum engine".into());
                }
                if self.grid.is_some() {
                    errors.push("grid: applies to the quantum engine".into());
                }
                if self.outcomes.is_some() {
                    errors.push("outcomes: classical records are indexed by q bin".into());
                }
                for (i, p) in self.pointers.iter().enumerate() {
                    match p {
                        PointerSpec::Quantum(_) => errors.push(format!(
                            "pointers[{i}]: quantum pointer preset in a classical scenario"
                        )),
                        PointerSpec::Classical(g) => {
                            if let Err(e) = g.validate() {
                                errors.push(format!("pointers[{i}]: {e}"));
                            }
                        }
                    }
                }
                if let Some(e) = &self.ensemble {
                    if e.n_samples < 10_000 {
                        errors.push("ensemble.n_samples: need at least 10000".into());
                    }
                    if e.bins == 0 || e.substeps == 0 || e.bin_halfwidth_stds <= 0.0 {
                        errors.push("ensemble: bins, substeps and bin_halfwidth_stds must be positive".into());
                    }
                }
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors.join("\n"))
        }
    }
}
