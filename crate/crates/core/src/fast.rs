//! The O(n log n) cubature engine: posterior and empirical-Bayes quantities
//! computed from the circulant spectrum of the lattice Gram matrix, plus the
//! sample-doubling driver that stops at a requested tolerance.
//!
//! With `f̃ = V^H f` (see [`crate::transform`]) and eigenvalues `ℓ`, the
//! dense formulas of [`crate::dense`] collapse to
//!
//! ```text
//! posterior mean       f̃₀/n                      (the sample average)
//! posterior variance   (ℓ₀/n − 1)·S / (n(n−1)),   S = Σ_{i≥1} |f̃ᵢ|²/ℓᵢ
//! EB objective         log S + (1/n)·Σᵢ log ℓᵢ
//! ```
//!
//! The EB objective differs from the dense one by the data-independent
//! constant `log n`, so both select the same hyperparameters; the
//! equivalence tests compare them with the constant removed.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{CubatureError, Result};
use crate::kernel::{gamma_max, KernelParams, MAX_R};
use crate::lattice::{random_shift, LatticeRule, MAX_LOG2_N};
use crate::par;
use crate::posterior::{Dof, PosteriorSummary};
use crate::transform::{fast_transform_real, gram_eigenvalues, SpectralCache};

/// Settings for [`auto_cubature`] and the per-step hyperparameter search.
#[derive(Debug, Clone)]
pub struct CubatureConfig {
    /// Absolute error tolerance the credible half-width must reach.
    pub tolerance: f64,
    /// Credible level for the stopping interval.
    pub confidence: f64,
    /// log₂ of the first sample size tried.
    pub min_log2_n: u32,
    /// log₂ of the sample-size cap; hitting it yields `converged = false`.
    pub max_log2_n: u32,
    /// Kernel smoothness exponent (fixed unless `joint_r` is set).
    pub r: u32,
    /// Search over r = 1..=4 jointly with γ instead of holding `r` fixed.
    pub joint_r: bool,
    /// Number of points in the log-uniform γ grid seeding the search.
    pub gamma_grid: usize,
    /// Safety factor multiplying the half-width in the stopping rule.
    pub inflation: f64,
    /// Seed for the random lattice shift.
    pub seed: u64,
    /// Optional generating vector override (entries must be odd); a Korobov
    /// vector is constructed when absent.
    pub gen_vector: Option<Vec<u64>>,
}

impl CubatureConfig {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            confidence: 0.99,
            min_log2_n: 8,
            max_log2_n: 22,
            r: 1,
            joint_r: false,
            gamma_grid: 32,
            inflation: 1.0,
            seed: 0,
            gen_vector: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(CubatureError::InvalidArgument(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(CubatureError::InvalidArgument(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if self.min_log2_n < 1 {
            return Err(CubatureError::InvalidArgument(
                "min_log2_n must be at least 1 (the credible interval needs n >= 2)".into(),
            ));
        }
        if self.min_log2_n > self.max_log2_n {
            return Err(CubatureError::InvalidArgument(format!(
                "min_log2_n = {} exceeds max_log2_n = {}",
                self.min_log2_n, self.max_log2_n
            )));
        }
        if self.max_log2_n > MAX_LOG2_N {
            return Err(CubatureError::ResourceLimit(format!(
                "max_log2_n = {} exceeds the supported cap {MAX_LOG2_N}",
                self.max_log2_n
            )));
        }
        if self.r < 1 || self.r > MAX_R {
            return Err(CubatureError::InvalidArgument(format!(
                "r must lie in 1..={MAX_R}, got {}",
                self.r
            )));
        }
        if self.gamma_grid < 2 {
            return Err(CubatureError::InvalidArgument(
                "gamma_grid needs at least 2 points".into(),
            ));
        }
        if !(self.inflation > 0.0 && self.inflation.is_finite()) {
            return Err(CubatureError::InvalidArgument(format!(
                "inflation must be positive and finite, got {}",
                self.inflation
            )));
        }
        Ok(())
    }
}

/// Outcome of the empirical-Bayes hyperparameter search at one sample size.
#[derive(Debug, Clone)]
pub struct ThetaFit {
    pub params: KernelParams,
    /// The minimized objective; `-inf` for degenerate (constant) data, which
    /// every kernel fits perfectly.
    pub objective: f64,
    pub degenerate: bool,
}

/// One doubling step of [`auto_cubature`].
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub n: usize,
    pub theta: KernelParams,
    pub estimate: f64,
    pub variance: f64,
    pub half_width: f64,
    /// Wall-clock seconds from the start of the run through this step.
    pub elapsed_seconds: f64,
}

/// Result of an automatic cubature run.
#[derive(Debug, Clone)]
pub struct CubatureResult {
    pub estimate: f64,
    pub half_width: f64,
    pub variance: f64,
    pub n_used: usize,
    pub theta: KernelParams,
    /// Data was constant to the last bit; hyperparameters are nominal.
    pub degenerate: bool,
    /// False when the sample-size cap was hit before the tolerance.
    pub converged: bool,
    pub per_step: Vec<StepTrace>,
}

/// Posterior mean, variance, and credible half-width from a spectral cache.
/// The mean is exactly the sample average of the data (same bits: the zero
/// frequency of the transform is accumulated with additions only).
pub fn fast_posterior(cache: &SpectralCache, confidence: f64) -> Result<PosteriorSummary> {
    let n = cache.n;
    if n < 2 {
        return Err(CubatureError::InvalidArgument(
            "posterior needs n >= 2 (zero degrees of freedom otherwise)".into(),
        ));
    }
    let nf = n as f64;
    let mean = cache.f_tilde[0].re / nf;
    let s = tail_quadratic(&cache.f_tilde, &cache.ell);
    let factor = cache.ell[0] / nf - 1.0;
    let factor = if factor >= 0.0 {
        factor
    } else if factor >= -1e-9 {
        0.0
    } else {
        return Err(CubatureError::IllConditioned(format!(
            "node-quality factor l0/n - 1 = {factor:e} is negative beyond rounding"
        )));
    };
    let variance = factor * s / (nf * (nf - 1.0));
    PosteriorSummary::from_variance(mean, variance, Dof::Finite(n as u64 - 1), confidence)
}

/// The spectral empirical-Bayes objective `log S + (1/n)·Σ log ℓ`. Constant
/// data makes `S` exactly zero and the objective undefined.
pub fn fast_eb_objective(cache: &SpectralCache) -> Result<f64> {
    let s = tail_quadratic(&cache.f_tilde, &cache.ell);
    if s == 0.0 {
        return Err(CubatureError::DegenerateData(
            "all non-zero frequencies vanish (constant data); the objective is unbounded".into(),
        ));
    }
    let n = cache.n as f64;
    Ok(s.ln() + cache.ell.iter().map(|l| l.ln()).sum::<f64>() / n)
}

fn tail_quadratic(f_tilde: &[Complex64], ell: &[f64]) -> f64 {
    (1..f_tilde.len())
        .map(|i| f_tilde[i].norm_sqr() / ell[i])
        .sum()
}

/// Search bounds for γ at smoothness `r`: a wide log-uniform slice of the
/// admissible interval, stopping just short of the positivity boundary.
fn gamma_bounds(r: u32) -> (f64, f64) {
    let hi = gamma_max(r);
    (hi * 1e-4, hi * (1.0 - 1e-3))
}

/// γ reported for constant data, where the fit is insensitive to the kernel:
/// the log-midpoint of the search interval.
fn degenerate_gamma(r: u32) -> f64 {
    let (lo, hi) = gamma_bounds(r);
    (0.5 * (lo.ln() + hi.ln())).exp()
}

struct BestCandidate {
    objective: f64,
    gamma: f64,
    ell: Vec<f64>,
}

/// Objective at one candidate γ; spectra that fail to factor (non-positive
/// or non-real eigenvalues) are treated as infinitely bad rather than
/// aborting the search.
fn probe_gamma(
    f_tilde: &[Complex64],
    rule: &LatticeRule,
    r: u32,
    gamma: f64,
    best: &mut Option<BestCandidate>,
) -> f64 {
    let Ok(params) = KernelParams::new(r, gamma) else {
        return f64::INFINITY;
    };
    let Ok(ell) = gram_eigenvalues(rule, &params) else {
        return f64::INFINITY;
    };
    let s = tail_quadratic(f_tilde, &ell);
    if s <= 0.0 || !s.is_finite() {
        return f64::INFINITY;
    }
    let n = ell.len() as f64;
    let objective = s.ln() + ell.iter().map(|l| l.ln()).sum::<f64>() / n;
    if best.as_ref().map_or(true, |b| objective < b.objective) {
        *best = Some(BestCandidate {
            objective,
            gamma,
            ell,
        });
    }
    objective
}

/// Grid-then-golden-section minimization of the EB objective over log γ at
/// fixed `r`. The candidate set is deterministic: `grid` log-uniform points
/// followed by a fixed eight golden-section probes in the bracketing
/// interval around the grid argmin.
fn search_gamma_at_r(
    f_tilde: &[Complex64],
    rule: &LatticeRule,
    r: u32,
    grid: usize,
) -> Option<BestCandidate> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let (lo, hi) = gamma_bounds(r);
    let (t_lo, t_hi) = (lo.ln(), hi.ln());
    let mut best = None;

    let ts: Vec<f64> = (0..grid)
        .map(|k| t_lo + (t_hi - t_lo) * k as f64 / (grid - 1) as f64)
        .collect();
    let objectives: Vec<f64> = ts
        .iter()
        .map(|t| probe_gamma(f_tilde, rule, r, t.exp(), &mut best))
        .collect();
    let k_min = objectives
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)?;

    let mut a = ts[k_min.saturating_sub(1)];
    let mut b = ts[(k_min + 1).min(grid - 1)];
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = probe_gamma(f_tilde, rule, r, c.exp(), &mut best);
    let mut fd = probe_gamma(f_tilde, rule, r, d.exp(), &mut best);
    for _ in 0..6 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = probe_gamma(f_tilde, rule, r, c.exp(), &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = probe_gamma(f_tilde, rule, r, d.exp(), &mut best);
        }
    }
    best
}

fn search_theta(
    f_tilde: &[Complex64],
    rule: &LatticeRule,
    config: &CubatureConfig,
) -> Result<(ThetaFit, Vec<f64>)> {
    let r_candidates: Vec<u32> = if config.joint_r {
        (1..=MAX_R).collect()
    } else {
        vec![config.r]
    };
    let mut best: Option<(u32, BestCandidate)> = None;
    for r in r_candidates {
        if let Some(cand) = search_gamma_at_r(f_tilde, rule, r, config.gamma_grid) {
            if best
                .as_ref()
                .map_or(true, |(_, b)| cand.objective < b.objective)
            {
                best = Some((r, cand));
            }
        }
    }
    let (r, cand) = best.ok_or_else(|| {
        CubatureError::IllConditioned(
            "empirical-Bayes search found no admissible hyperparameters: every candidate \
             spectrum failed to factor"
                .into(),
        )
    })?;
    Ok((
        ThetaFit {
            params: KernelParams::new(r, cand.gamma)?,
            objective: cand.objective,
            degenerate: false,
        },
        cand.ell,
    ))
}

/// Empirical-Bayes hyperparameter fit for data `f` on `rule`'s nodes.
pub fn optimize_theta(f: &[f64], rule: &LatticeRule, config: &CubatureConfig) -> Result<ThetaFit> {
    config.validate()?;
    run_step(f, rule, config).map(|(fit, _)| fit)
}

/// One full inference step at a fixed sample size: transform the data, fit
/// hyperparameters, and form the posterior. Constant data short-circuits to
/// a zero-width posterior with nominal hyperparameters.
pub fn run_step(
    f: &[f64],
    rule: &LatticeRule,
    config: &CubatureConfig,
) -> Result<(ThetaFit, PosteriorSummary)> {
    if f.len() != rule.n() {
        return Err(CubatureError::InvalidArgument(format!(
            "data length {} != lattice size {}",
            f.len(),
            rule.n()
        )));
    }
    if f.len() < 2 {
        return Err(CubatureError::InvalidArgument(
            "inference needs n >= 2 (zero degrees of freedom otherwise)".into(),
        ));
    }
    let f_tilde = fast_transform_real(f)?;
    let tail_energy: f64 = f_tilde[1..].iter().map(|c| c.norm_sqr()).sum();
    if tail_energy == 0.0 {
        let params = KernelParams::new(config.r, degenerate_gamma(config.r))?;
        let mean = f_tilde[0].re / f.len() as f64;
        let summary = PosteriorSummary::from_variance(
            mean,
            0.0,
            Dof::Finite(f.len() as u64 - 1),
            config.confidence,
        )?;
        return Ok((
            ThetaFit {
                params,
                objective: f64::NEG_INFINITY,
                degenerate: true,
            },
            summary,
        ));
    }
    let (fit, ell) = search_theta(&f_tilde, rule, config)?;
    let cache = SpectralCache {
        n: rule.n(),
        f_tilde,
        ell,
        theta: fit.params.clone(),
    };
    let summary = fast_posterior(&cache, config.confidence)?;
    Ok((fit, summary))
}

fn check_finite(
    values: Vec<f64>,
    rule: &LatticeRule,
    index_map: impl Fn(usize) -> usize,
) -> Result<Vec<f64>> {
    for (k, v) in values.iter().enumerate() {
        if !v.is_finite() {
            let index = index_map(k);
            let mut point = vec![0.0; rule.dim()];
            rule.node_into(index, &mut point);
            return Err(CubatureError::EvaluationFailed {
                index,
                value: *v,
                point,
            });
        }
    }
    Ok(values)
}

fn evaluate_all<F>(integrand: &F, rule: &LatticeRule) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values = par::map_range_with_scratch(0, rule.n(), rule.dim(), |i, x| {
        rule.node_into(i, x);
        integrand(x)
    });
    check_finite(values, rule, |k| k)
}

/// Evaluates only the odd-indexed nodes of `rule` — the new points after a
/// doubling, since extension keeps the old nodes at the even indices.
fn evaluate_odd<F>(integrand: &F, rule: &LatticeRule) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values = par::map_range_with_scratch(0, rule.n() / 2, rule.dim(), |k, x| {
        rule.node_into(2 * k + 1, x);
        integrand(x)
    });
    check_finite(values, rule, |k| 2 * k + 1)
}

fn interleave(even: &[f64], odd: &[f64]) -> Vec<f64> {
    debug_assert_eq!(even.len(), odd.len());
    let mut out = Vec::with_capacity(2 * even.len());
    for (e, o) in even.iter().zip(odd) {
        out.push(*e);
        out.push(*o);
    }
    out
}

/// Runs the automatic cubature loop: sample on a shifted lattice, fit the
/// kernel, and double the sample size until the inflated credible half-width
/// is within tolerance or the cap is hit. Old integrand values are reused
/// across doublings, so each node is evaluated exactly once.
pub fn auto_cubature<F>(integrand: F, dim: usize, config: &CubatureConfig) -> Result<CubatureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if dim == 0 {
        return Err(CubatureError::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    if let Some(z) = &config.gen_vector {
        if z.len() != dim {
            return Err(CubatureError::InvalidArgument(format!(
                "gen_vector has {} entries but dim = {dim}",
                z.len()
            )));
        }
    }
    let start = Instant::now();
    let shift = random_shift(dim, config.seed);
    let mut rule = match &config.gen_vector {
        Some(z) => LatticeRule::new(z.clone(), shift, config.min_log2_n)?,
        None => LatticeRule::korobov(dim, shift, config.min_log2_n)?,
    };
    let mut f = evaluate_all(&integrand, &rule)?;
    let mut per_step = Vec::new();
    loop {
        let (fit, summary) = run_step(&f, &rule, config)?;
        per_step.push(StepTrace {
            n: rule.n(),
            theta: fit.params.clone(),
            estimate: summary.mean,
            variance: summary.variance,
            half_width: summary.half_width,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        let converged = config.inflation * summary.half_width <= config.tolerance;
        if converged || rule.log2_n() >= config.max_log2_n {
            return Ok(CubatureResult {
                estimate: summary.mean,
                half_width: summary.half_width,
                variance: summary.variance,
                n_used: rule.n(),
                theta: fit.params,
                degenerate: fit.degenerate,
                converged,
                per_step,
            });
        }
        let next = rule.extend()?;
        let odd = evaluate_odd(&integrand, &next)?;
        f = interleave(&f, &odd);
        rule = next;
    }
}
