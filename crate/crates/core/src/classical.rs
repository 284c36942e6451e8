//! Classical engine: c-number observables, delta-kick Liouville evolution
//! and conditional-expectation weak values.
//!
//! The impulsive interaction `epsilon * c(q,p) * P` moves each phase point
//! along characteristics: `P` is conserved, `c(q,p)` is conserved along the
//! flow, so the pointer position picks up exactly `epsilon * c(q0, p0)` while
//! `(q,p)` follow the Hamiltonian flow generated by `epsilon * P * c`. The
//! ensemble representation keeps that map exact per sample; statistics carry
//! `1/sqrt(N)` errors instead of grid errors.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::config::Tolerances;
use crate::error::{Error, Result};

type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Gradient {
    Analytic { dq: ScalarField, dp: ScalarField },
    FiniteDifference,
}

/// Phase-space observable `c(q, p)` with analytic gradients or a central
/// finite-difference fallback.
#[derive(Clone)]
pub struct CNumberObservable {
    label: String,
    value: ScalarField,
    gradient: Gradient,
    fd_step_scale: f64,
}

impl std::fmt::Debug for CNumberObservable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CNumberObservable")
            .field("label", &self.label)
            .finish()
    }
}

impl CNumberObservable {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            gradient: Gradient::FiniteDifference,
            fd_step_scale: Tolerances::default().gradient_step_scale,
        }
    }

    pub fn with_gradients(
        label: impl Into<String>,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dq: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dp: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            gradient: Gradient::Analytic {
                dq: Arc::new(dq),
                dp: Arc::new(dp),
            },
            fd_step_scale: Tolerances::default().gradient_step_scale,
        }
    }

    /// c(q,p) = q
    pub fn position() -> Self {
        Self::with_gradients("q", |q, _| q, |_, _| 1.0, |_, _| 0.0)
    }

    /// c(q,p) = p
    pub fn momentum() -> Self {
        Self::with_gradients("p", |_, p| p, |_, _| 0.0, |_, _| 1.0)
    }

    /// c(q,p) = q^2 + p^2
    pub fn quadratic() -> Self {
        Self::with_gradients(
            "q^2+p^2",
            |q, p| q * q + p * p,
            |q, _| 2.0 * q,
            |_, p| 2.0 * p,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, q: f64, p: f64) -> f64 {
        (self.value)(q, p)
    }

    fn fd_step(&self, coord: f64) -> f64 {
        self.fd_step_scale * coord.abs().max(1.0)
    }

    pub fn grad_q(&self, q: f64, p: f64) -> f64 {
        match &self.gradient {
            Gradient::Analytic { dq, .. } => dq(q, p),
            Gradient::FiniteDifference => {
                let h = self.fd_step(q);
                (self.value(q + h, p) - self.value(q - h, p)) / (2.0 * h)
            }
        }
    }

    pub fn grad_p(&self, q: f64, p: f64) -> f64 {
        match &self.gradient {
            Gradient::Analytic { dp, .. } => dp(q, p),
            Gradient::FiniteDifference => {
                let h = self.fd_step(p);
                (self.value(q, p + h) - self.value(q, p - h)) / (2.0 * h)
            }
        }
    }

    /// Checks analytic gradients against central differences on the given
    /// sample points. A no-op for finite-difference observables.
    pub fn validate_gradients(&self, points: &[(f64, f64)], tol: &Tolerances) -> Result<()> {
        let Gradient::Analytic { dq, dp } = &self.gradient else {
            return Ok(());
        };
        for &(q, p) in points {
            let hq = self.fd_step(q);
            let hp = self.fd_step(p);
            let fd_q = (self.value(q + hq, p) - self.value(q - hq, p)) / (2.0 * hq);
            let fd_p = (self.value(q, p + hp) - self.value(q, p - hp)) / (2.0 * hp);
            let aq = dq(q, p);
            let ap = dp(q, p);
            if (aq - fd_q).abs() > tol.gradient_check * fd_q.abs().max(1.0)
                || (ap - fd_p).abs() > tol.gradient_check * fd_p.abs().max(1.0)
            {
                return Err(Error::InvalidParameter {
                    name: "gradient",
                    reason: format!(
                        "analytic gradient of {} disagrees with finite differences at ({q}, {p})",
                        self.label
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Correlated Gaussian over one (position, momentum) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivariateGaussian {
    #[serde(default)]
    pub mean_pos: f64,
    #[serde(default)]
    pub mean_mom: f64,
    pub std_pos: f64,
    pub std_mom: f64,
    #[serde(default)]
    pub correlation: f64,
}

impl BivariateGaussian {
    pub fn standard() -> Self {
        Self {
            mean_pos: 0.0,
            mean_mom: 0.0,
            std_pos: 1.0,
            std_mom: 1.0,
            correlation: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std_pos > 0.0 && self.std_mom > 0.0) {
            return Err(Error::InvalidParameter {
                name: "std",
                reason: "standard deviations must be positive".into(),
            });
        }
        if self.correlation.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "correlation",
                reason: format!("|correlation| must be < 1, got {}", self.correlation),
            });
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let pos = self.mean_pos + self.std_pos * z1;
        let mom = self.mean_mom
            + self.std_mom
                * (self.correlation * z1 + (1.0 - self.correlation.powi(2)).sqrt() * z2);
        (pos, mom)
    }
}

/// One sampled phase point: object coordinates (q, p) and pointer
/// coordinates (Q, P).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
    pub pointer_q: f64,
    pub pointer_p: f64,
}

/// Uniformly weighted ensemble of phase points with its recorded seed.
#[derive(Debug, Clone)]
pub struct PhaseEnsemble {
    samples: Vec<PhasePoint>,
    seed: u64,
}

/// Kick evolution output: the evolved ensemble plus the worst conservation
/// drift of c along the integrated flow.
#[derive(Debug, Clone)]
pub struct KickOutcome {
    pub ensemble: PhaseEnsemble,
    pub conservation_drift: f64,
}

impl PhaseEnsemble {
    /// Draws `n` product-state samples `F_s(q,p) F_a(Q,P)`.
    pub fn sample(
        object: &BivariateGaussian,
        pointer: &BivariateGaussian,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        object.validate()?;
        pointer.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "need at least one sample".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let (q, p) = object.sample(&mut rng);
                let (pointer_q, pointer_p) = pointer.sample(&mut rng);
                PhasePoint {
                    q,
                    p,
                    pointer_q,
                    pointer_p,
                }
            })
            .collect();
        Ok(Self { samples, seed })
    }

    pub fn from_samples(samples: Vec<PhasePoint>, seed: u64) -> Self {
        Self { samples, seed }
    }

    pub fn samples(&self) -> &[PhasePoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Applies the delta-kick map. The pointer momentum is untouched, the
    /// pointer position gains `epsilon * c(q0, p0)` (c is conserved along the
    /// flow), and `(q, p)` are integrated through the kick flow
    /// `dq/ds = eps P dc/dp`, `dp/ds = -eps P dc/dq` with `substeps` RK4
    /// steps. For c depending on only one of (q, p) the map is exact
    /// regardless of `substeps`.
    pub fn kick_evolve(
        &self,
        c: &CNumberObservable,
        epsilon: f64,
        substeps: u32,
    ) -> Result<KickOutcome> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "coupling must be finite".into(),
            });
        }
        if substeps == 0 {
            return Err(Error::InvalidParameter {
                name: "substeps",
                reason: "need at least one integration step".into(),
            });
        }
        let h = 1.0 / substeps as f64;
        let mut out = Vec::with_capacity(self.samples.len());
        let mut drift = 0.0f64;
        for (index, s) in self.samples.iter().enumerate() {
            let c0 = c.value(s.q, s.p);
            let scale = epsilon * s.pointer_p;
            let mut q = s.q;
            let mut p = s.p;
            if scale != 0.0 {
                for _ in 0..substeps {
                    let (k1q, k1p) = (scale * c.grad_p(q, p), -scale * c.grad_q(q, p));
                    let (q2, p2) = (q + 0.5 * h * k1q, p + 0.5 * h * k1p);
                    let (k2q, k2p) = (scale * c.grad_p(q2, p2), -scale * c.grad_q(q2, p2));
                    let (q3, p3) = (q + 0.5 * h * k2q, p + 0.5 * h * k2p);
                    let (k3q, k3p) = (scale * c.grad_p(q3, p3), -scale * c.grad_q(q3, p3));
                    let (q4, p4) = (q + h * k3q, p + h * k3p);
                    let (k4q, k4p) = (scale * c.grad_p(q4, p4), -scale * c.grad_q(q4, p4));
                    q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
                    p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
                }
            }
            let pointer_q = s.pointer_q + epsilon * c0;
            if !(q.is_finite() && p.is_finite() && pointer_q.is_finite()) {
                return Err(Error::NonFiniteTrajectory {
                    sample_index: index,
                });
            }
            drift = drift.max((c.value(q, p) - c0).abs());
            out.push(PhasePoint {
                q,
                p,
                pointer_q,
                pointer_p: s.pointer_p,
            });
        }
        Ok(KickOutcome {
            ensemble: PhaseEnsemble {
                samples: out,
                seed: self.seed,
            },
            conservation_drift: drift,
        })
    }
}

/// Uniform bin edges over `center ± halfwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    edges: Vec<f64>,
}

impl BinGrid {
    pub fn uniform(center: f64, halfwidth: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(halfwidth > 0.0) {
            return Err(Error::InvalidParameter {
                name: "bins",
                reason: "need a positive bin count and halfwidth".into(),
            });
        }
        let lo = center - halfwidth;
        let width = 2.0 * halfwidth / bins as f64;
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        Ok(Self { edges })
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn center(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn index(&self, x: f64) -> Option<usize> {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        if !(x >= lo && x < hi) {
            return None;
        }
        let i = ((x - lo) / self.width()) as usize;
        Some(i.min(self.count() - 1))
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Conditional sample mean with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalMean {
    pub value: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Minimum samples per bin before a conditional statistic is trusted.
pub const MIN_BIN_SAMPLES: usize = 100;

/// Weak value of a c-number observable: the conditional expectation of
/// `c(q,p)` given that q falls in `[lo, hi)`.
pub fn classical_weak_value(
    points: &[PhasePoint],
    c: &CNumberObservable,
    lo: f64,
    hi: f64,
) -> Result<ConditionalMean> {
    let values: Vec<f64> = points
        .iter()
        .filter(|s| s.q >= lo && s.q < hi)
        .map(|s| c.value(s.q, s.p))
        .collect();
    if values.len() < MIN_BIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            count: values.len(),
            required: MIN_BIN_SAMPLES,
        });
    }
    let (mean, var) = mean_and_var(&values);
    Ok(ConditionalMean {
        value: mean,
        std_error: (var / values.len() as f64).sqrt(),
        count: values.len(),
    })
}

/// Per-bin conditional mean of the pointer momentum.
#[derive(Debug, Clone, Copy)]
pub struct CurrentBin {
    pub center: f64,
    pub count: usize,
    pub mean_momentum: f64,
    pub std_error: f64,
}

/// Result of the classical zero-current check: the discrete surrogate of
/// "the mean of P vanishes conditionally on every Q".
#[derive(Debug, Clone)]
pub struct CurrentCheck {
    pub bins: Vec<CurrentBin>,
    pub vanishing: bool,
    pub max_abs_mean: f64,
}

/// Bins the ensemble by pointer position and tests whether each populated
/// bin's conditional mean momentum is within three standard errors of zero.
/// Distinguishes conditional vanishing from a merely zero marginal mean.
pub fn classical_current_check(ensemble: &PhaseEnsemble, bins: &BinGrid) -> Result<CurrentCheck> {
    if ensemble.len() < 10_000 {
        return Err(Error::InsufficientSamples {
            count: ensemble.len(),
            required: 10_000,
        });
    }
    let mut grouped: Vec<Vec<f64>> = vec![Vec::new(); bins.count()];
    for s in ensemble.samples() {
        if let Some(i) = bins.index(s.pointer_q) {
            grouped[i].push(s.pointer_p);
        }
    }
    let mut rows = Vec::new();
    let mut vanishing = true;
    let mut max_abs_mean = 0.0f64;
    for (i, values) in grouped.iter().enumerate() {
        if values.len() < MIN_BIN_SAMPLES {
            continue;
        }
        let (mean, var) = mean_and_var(values);
        let se = (var / values.len() as f64).sqrt();
        if mean.abs() > 3.0 * se {
            vanishing = false;
        }
        max_abs_mean = max_abs_mean.max(mean.abs());
        rows.push(CurrentBin {
            center: bins.center(i),
            count: values.len(),
            mean_momentum: mean,
            std_error: se,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientSamples {
            count: 0,
            required: MIN_BIN_SAMPLES,
        });
    }
    Ok(CurrentCheck {
        bins: rows,
        vanishing,
        max_abs_mean,
    })
}

/// Joint (Q, q) histogram density.
#[derive(Debug, Clone)]
pub struct ClassicalJoint {
    pub q_edges: Vec<f64>,
    pub pointer_edges: Vec<f64>,
    /// counts[pointer_bin][q_bin]
    pub counts: Vec<Vec<u64>>,
    pub n_total: usize,
}

impl ClassicalJoint {
    pub fn from_ensemble(
        ensemble: &PhaseEnsemble,
        q_bins: &BinGrid,
        pointer_bins: &BinGrid,
    ) -> Self {
        let mut counts = vec![vec![0u64; q_bins.count()]; pointer_bins.count()];
        for s in ensemble.samples() {
            if let (Some(i), Some(j)) = (pointer_bins.index(s.pointer_q), q_bins.index(s.q)) {
                counts[i][j] += 1;
            }
        }
        Self {
            q_edges: q_bins.edges().to_vec(),
            pointer_edges: pointer_bins.edges().to_vec(),
            counts,
            n_total: ensemble.len(),
        }
    }

    /// Density value normalized so that a full-coverage histogram integrates
    /// to one.
    pub fn density(&self, pointer_bin: usize, q_bin: usize) -> f64 {
        let dq = self.q_edges[1] - self.q_edges[0];
        let dpq = self.pointer_edges[1] - self.pointer_edges[0];
        self.counts[pointer_bin][q_bin] as f64 / (self.n_total as f64 * dq * dpq)
    }

    /// Integral of the histogram density over all bins; 1 up to the mass
    /// falling outside the binned window.
    pub fn total_integral(&self) -> f64 {
        let inside: u64 = self.counts.iter().flatten().sum();
        inside as f64 / self.n_total as f64
    }
}

/// Measured versus predicted pointer shift for one q bin.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalShift {
    pub center: f64,
    /// Mean of q over the post-kick samples in the bin.
    pub mean_q: f64,
    pub n_pre: usize,
    pub n_post: usize,
    pub measured: f64,
    pub measured_se: f64,
    /// Classical weak value of c over the pre-kick bin.
    pub weak_value: f64,
    /// `epsilon` times the weak value.
    pub predicted: f64,
    pub predicted_se: f64,
}

/// Chi-square comparison of the pre- and post-kick q histograms.
#[derive(Debug, Clone, Copy)]
pub struct MarginalInvariance {
    pub chi_square: f64,
    pub dof: usize,
    pub critical: f64,
    pub pass: bool,
    /// True when the histograms are identical count-for-count (exact for c
    /// independent of p).
    pub exact: bool,
    /// Largest per-bin difference of the normalized histograms.
    pub max_fraction_diff: f64,
}

/// Configuration for `classical_shift_experiment`.
#[derive(Debug, Clone)]
pub struct ShiftConfig {
    pub n_samples: usize,
    pub bins: usize,
    pub bin_halfwidth_stds: f64,
    pub substeps: u32,
    pub seed: u64,
    pub allow_nonzero_current: bool,
    pub chi_square_confidence: f64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            bins: 41,
            bin_halfwidth_stds: 4.0,
            substeps: 64,
            seed: 0,
            allow_nonzero_current: false,
            chi_square_confidence: 0.99,
        }
    }
}

/// Full report of a classical shift experiment.
#[derive(Debug, Clone)]
pub struct ClassicalShiftReport {
    pub bins: Vec<ConditionalShift>,
    pub current: CurrentCheck,
    pub marginal: MarginalInvariance,
    pub weakness_ratio: f64,
    pub conservation_drift: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub epsilon: f64,
}

fn marginal_invariance(
    pre: &PhaseEnsemble,
    post: &PhaseEnsemble,
    bins: &BinGrid,
    confidence: f64,
) -> MarginalInvariance {
    let mut pre_counts = vec![0u64; bins.count()];
    let mut post_counts = vec![0u64; bins.count()];
    for s in pre.samples() {
        if let Some(i) = bins.index(s.q) {
            pre_counts[i] += 1;
        }
    }
    for s in post.samples() {
        if let Some(i) = bins.index(s.q) {
            post_counts[i] += 1;
        }
    }
    let mut chi_square = 0.0;
    let mut used = 0usize;
    let mut max_fraction_diff = 0.0f64;
    let n = pre.len() as f64;
    for (&a, &b) in pre_counts.iter().zip(&post_counts) {
        max_fraction_diff = max_fraction_diff.max((a as f64 - b as f64).abs() / n);
        let total = a + b;
        if total == 0 {
            continue;
        }
        used += 1;
        let diff = a as f64 - b as f64;
        chi_square += diff * diff / total as f64;
    }
    let dof = used.saturating_sub(1).max(1);
    let critical = ChiSquared::new(dof as f64)
        .expect("positive dof")
        .inverse_cdf(confidence);
    MarginalInvariance {
        chi_square,
        dof,
        critical,
        pass: chi_square <= critical,
        exact: pre_counts == post_counts,
        max_fraction_diff,
    }
}

/// Runs the full classical weak-measurement experiment: samples the product
/// state, checks the pointer current, applies the kick and compares per-bin
/// measured pointer shifts against `epsilon` times the classical weak value.
pub fn classical_shift_experiment(
    object: &BivariateGaussian,
    pointer: &BivariateGaussian,
    c: &CNumberObservable,
    epsilon: f64,
    cfg: &ShiftConfig,
) -> Result<ClassicalShiftReport> {
    if cfg.n_samples < 10_000 {
        return Err(Error::InsufficientSamples {
            count: cfg.n_samples,
            required: 10_000,
        });
    }
    let pre = PhaseEnsemble::sample(object, pointer, cfg.n_samples, cfg.seed)?;

    let pointer_bins = BinGrid::uniform(
        pointer.mean_pos,
        cfg.bin_halfwidth_stds * pointer.std_pos,
        cfg.bins,
    )?;
    let current = classical_current_check(&pre, &pointer_bins)?;
    if !current.vanishing && !cfg.allow_nonzero_current {
        return Err(Error::NonzeroCurrent {
            max_current: current.max_abs_mean,
            tolerance: 0.0,
        });
    }

    let kick = pre.kick_evolve(c, epsilon, cfg.substeps)?;
    let post = &kick.ensemble;

    let q_bins = BinGrid::uniform(
        object.mean_pos,
        cfg.bin_halfwidth_stds * object.std_pos,
        cfg.bins,
    )?;

    // Per-bin membership (pre via q, post via the kicked q).
    let mut pre_members: Vec<Vec<usize>> = vec![Vec::new(); q_bins.count()];
    let mut post_members: Vec<Vec<usize>> = vec![Vec::new(); q_bins.count()];
    for (i, s) in pre.samples().iter().enumerate() {
        if let Some(b) = q_bins.index(s.q) {
            pre_members[b].push(i);
        }
    }
    for (i, s) in post.samples().iter().enumerate() {
        if let Some(b) = q_bins.index(s.q) {
            post_members[b].push(i);
        }
    }

    let mut rows = Vec::new();
    let mut max_weak_value = 0.0f64;
    for b in 0..q_bins.count() {
        let n_pre = pre_members[b].len();
        let n_post = post_members[b].len();
        if n_pre < MIN_BIN_SAMPLES || n_post < MIN_BIN_SAMPLES {
            continue;
        }
        let pre_q: Vec<f64> = pre_members[b]
            .iter()
            .map(|&i| pre.samples()[i].pointer_q)
            .collect();
        let post_q: Vec<f64> = post_members[b]
            .iter()
            .map(|&i| post.samples()[i].pointer_q)
            .collect();
        let (pre_mean, pre_var) = mean_and_var(&pre_q);
        let (post_mean, post_var) = mean_and_var(&post_q);

        // Pre and post means share almost all samples, so their covariance
        // must be subtracted; estimate it on the membership intersection.
        let post_set: std::collections::HashSet<usize> =
            post_members[b].iter().copied().collect();
        let both: Vec<usize> = pre_members[b]
            .iter()
            .copied()
            .filter(|i| post_set.contains(i))
            .collect();
        let mut covariance = 0.0;
        let mut paired_var = 0.0;
        if both.len() >= 2 {
            let xs: Vec<f64> = both.iter().map(|&i| pre.samples()[i].pointer_q).collect();
            let ys: Vec<f64> = both.iter().map(|&i| post.samples()[i].pointer_q).collect();
            let (mx, _) = mean_and_var(&xs);
            let (my, _) = mean_and_var(&ys);
            covariance = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - mx) * (y - my))
                .sum::<f64>()
                / (both.len() as f64 - 1.0);
            let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - x).collect();
            let (_, dv) = mean_and_var(&diffs);
            paired_var = dv / both.len() as f64;
        }
        let mut var_shift = post_var / n_post as f64 + pre_var / n_pre as f64
            - 2.0 * (both.len() as f64 / (n_pre as f64 * n_post as f64)) * covariance;
        if var_shift < paired_var {
            var_shift = paired_var;
        }

        let weak = classical_weak_value(
            pre.samples(),
            c,
            q_bins.edges()[b],
            q_bins.edges()[b + 1],
        )?;
        max_weak_value = max_weak_value.max(weak.value.abs());

        let post_q_mean = post_members[b]
            .iter()
            .map(|&i| post.samples()[i].q)
            .sum::<f64>()
            / n_post as f64;

        rows.push(ConditionalShift {
            center: q_bins.center(b),
            mean_q: post_q_mean,
            n_pre,
            n_post,
            measured: post_mean - pre_mean,
            measured_se: var_shift.max(0.0).sqrt(),
            weak_value: weak.value,
            predicted: epsilon * weak.value,
            predicted_se: epsilon * weak.std_error,
        });
    }

    let marginal = marginal_invariance(&pre, post, &q_bins, cfg.chi_square_confidence);
    let pointer_std = {
        let qs: Vec<f64> = pre.samples().iter().map(|s| s.pointer_q).collect();
        mean_and_var(&qs).1.sqrt()
    };
    let weakness_ratio = epsilon.abs() * max_weak_value / pointer_std;

    Ok(ClassicalShiftReport {
        bins: rows,
        current,
        marginal,
        weakness_ratio,
        conservation_drift: kick.conservation_drift,
        seed: cfg.seed,
        n_samples: cfg.n_samples,
        epsilon,
    })
}
