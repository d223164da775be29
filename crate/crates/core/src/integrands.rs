//! Test problems: synthetic families with closed-form integrals, and the
//! arithmetic-mean Asian option payoff mapped to the unit cube.
//!
//! Every integrand is packaged as an [`IntegrandSpec`] whose evaluator is
//! pure and safe to call concurrently; the engine relies on that for
//! parallel node evaluation.

use std::collections::VecDeque;
use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use crate::error::{CubatureError, Result};
use crate::kernel::{bernoulli_poly, MAX_R};
use crate::lattice::LatticeRule;
use crate::par;
use crate::transform::sample_mean;

/// Smallest/largest arguments fed to the normal quantile: half an ulp of 1,
/// so the clamp changes inputs by at most one representable value.
const U_EPS: f64 = f64::EPSILON / 2.0;

/// A d-dimensional integration problem on `[0,1)^d`.
///
/// `eval` must be finite on the open cube and safe for concurrent calls;
/// `true_value`, when present, is the exact integral (or a reference value —
/// `description` says which).
pub struct IntegrandSpec {
    pub dim: usize,
    pub eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub true_value: Option<f64>,
    pub description: String,
}

impl IntegrandSpec {
    pub fn call(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

impl std::fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("dim", &self.dim)
            .field("true_value", &self.true_value)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

fn require_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(CubatureError::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

/// `f(x) = ∏ₗ (1 + a·(xₗ − 1/2))`; every factor integrates to 1, so the
/// integral is exactly 1 for any `a` and `d`.
pub fn product_peak(dim: usize, a: f64) -> Result<IntegrandSpec> {
    require_dim(dim)?;
    if !a.is_finite() {
        return Err(CubatureError::InvalidArgument(format!(
            "slope must be finite, got {a}"
        )));
    }
    Ok(IntegrandSpec {
        dim,
        eval: Box::new(move |x: &[f64]| x.iter().map(|&u| 1.0 + a * (u - 0.5)).product()),
        true_value: Some(1.0),
        description: format!("product of linear factors 1 + {a}(x_l - 1/2), d = {dim}"),
    })
}

/// `f(x) = ∏ₗ (1 + cₗ·B_{2r}(xₗ))`; Bernoulli polynomials integrate to zero
/// over a period, so the integral is exactly 1. This family lies in the
/// native space of the order-r kernel, making it the natural test of the
/// smoothness-matched model.
pub fn bernoulli_native(dim: usize, r: u32, coeffs: &[f64]) -> Result<IntegrandSpec> {
    require_dim(dim)?;
    if r < 1 || r > MAX_R {
        return Err(CubatureError::InvalidArgument(format!(
            "r must lie in 1..={MAX_R}, got {r}"
        )));
    }
    if coeffs.len() != dim {
        return Err(CubatureError::InvalidArgument(format!(
            "got {} coefficients for dimension {dim}",
            coeffs.len()
        )));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(CubatureError::InvalidArgument(
            "coefficients must be finite".into(),
        ));
    }
    let coeffs = coeffs.to_vec();
    let degree = 2 * r;
    Ok(IntegrandSpec {
        dim,
        eval: Box::new(move |x: &[f64]| {
            x.iter()
                .zip(&coeffs)
                .map(|(&u, &c)| 1.0 + c * bernoulli_poly(degree, u).expect("u in [0,1)"))
                .product()
        }),
        true_value: Some(1.0),
        description: format!("product of 1 + c_l B_{degree}(x_l), d = {dim}"),
    })
}

/// The constant function — integrated exactly by any sample average.
pub fn constant(dim: usize, value: f64) -> Result<IntegrandSpec> {
    require_dim(dim)?;
    if !value.is_finite() {
        return Err(CubatureError::InvalidArgument(format!(
            "constant must be finite, got {value}"
        )));
    }
    Ok(IntegrandSpec {
        dim,
        eval: Box::new(move |_: &[f64]| value),
        true_value: Some(value),
        description: format!("constant {value}, d = {dim}"),
    })
}

/// How the Gaussian vector is turned into a Brownian path. All three choices
/// factor the same covariance, so the *integral* is identical; the mapping of
/// low-index coordinates to path features differs, which matters for lattice
/// sampling accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathConstruction {
    /// Cumulative sums of √Δt-scaled increments in time order.
    CholeskyTimeOrder,
    /// Bisection: terminal value first, then conditional midpoints.
    BrownianBridge,
    /// Principal components of the path covariance, largest first.
    Pca,
}

/// Optional measure-preserving periodization applied before the Gaussian map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodization {
    None,
    /// The tent map `u ↦ 1 − |2u − 1|`, which makes the composed integrand
    /// continuous across the cube's periodic boundary.
    Baker,
}

/// Parameters of the arithmetic-mean Asian call benchmark. These defaults
/// define *this project's* benchmark problem; the reference price is
/// computed by [`qmc_reference`], not quoted from elsewhere.
#[derive(Debug, Clone)]
pub struct AsianOptionParams {
    pub s0: f64,
    pub strike: f64,
    pub rate: f64,
    pub volatility: f64,
    pub maturity: f64,
    pub n_monitor: usize,
    pub path_construction: PathConstruction,
    pub periodization: Periodization,
}

impl Default for AsianOptionParams {
    fn default() -> Self {
        Self {
            s0: 100.0,
            strike: 100.0,
            rate: 0.05,
            volatility: 0.5,
            maturity: 1.0,
            n_monitor: 12,
            path_construction: PathConstruction::CholeskyTimeOrder,
            periodization: Periodization::Baker,
        }
    }
}

impl AsianOptionParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("s0", self.s0),
            ("volatility", self.volatility),
            ("maturity", self.maturity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CubatureError::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        // strike = 0 is admitted deliberately: it has a closed-form price
        // (the discounted mean of lognormals) used as a correctness oracle.
        for (name, v) in [("strike", self.strike), ("rate", self.rate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CubatureError::InvalidArgument(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        if self.n_monitor == 0 {
            return Err(CubatureError::InvalidArgument(
                "n_monitor must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Row-major d×d factor `A` with `A·Aᵀ = [min(tᵢ, tⱼ)]`, the Brownian path
/// covariance at the monitoring dates, for the requested construction. The
/// path is `W = A·z` for a standard normal vector `z`.
pub(crate) fn path_matrix(
    n_monitor: usize,
    maturity: f64,
    construction: PathConstruction,
) -> Vec<f64> {
    let d = n_monitor;
    let dt = maturity / d as f64;
    let t = |j: usize| j as f64 * dt; // time at *path index* j ∈ 0..=d
    let mut a = vec![0.0; d * d];
    match construction {
        PathConstruction::CholeskyTimeOrder => {
            let sqrt_dt = dt.sqrt();
            for i in 0..d {
                for k in 0..=i {
                    a[i * d + k] = sqrt_dt;
                }
            }
        }
        PathConstruction::BrownianBridge => {
            // rows[j] holds the coefficients of W(t_j) over z; index 0 is the
            // pinned start W(0) = 0. The terminal value consumes z_0, then
            // each interval's midpoint is filled in breadth-first, so coarse
            // path features map to low-index coordinates.
            let mut rows = vec![vec![0.0; d]; d + 1];
            rows[d][0] = t(d).sqrt();
            let mut next_z = 1;
            let mut queue = VecDeque::from([(0usize, d)]);
            while let Some((lo, hi)) = queue.pop_front() {
                if hi - lo < 2 {
                    continue;
                }
                let m = (lo + hi) / 2;
                let span = t(hi) - t(lo);
                let wl = (t(hi) - t(m)) / span;
                let wr = (t(m) - t(lo)) / span;
                let sd = ((t(m) - t(lo)) * (t(hi) - t(m)) / span).sqrt();
                for k in 0..d {
                    rows[m][k] = wl * rows[lo][k] + wr * rows[hi][k];
                }
                rows[m][next_z] += sd;
                next_z += 1;
                queue.push_back((lo, m));
                queue.push_back((m, hi));
            }
            for i in 0..d {
                a[i * d..(i + 1) * d].copy_from_slice(&rows[i + 1]);
            }
        }
        PathConstruction::Pca => {
            let cov = nalgebra::DMatrix::from_fn(d, d, |i, j| t(i + 1).min(t(j + 1)));
            let eigen = nalgebra::SymmetricEigen::new(cov);
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&i, &j| eigen.eigenvalues[j].total_cmp(&eigen.eigenvalues[i]));
            for (col, &e) in order.iter().enumerate() {
                let scale = eigen.eigenvalues[e].max(0.0).sqrt();
                let v = eigen.eigenvectors.column(e);
                // Deterministic sign: the largest-magnitude component points up.
                let pivot = v
                    .iter()
                    .cloned()
                    .max_by(|x, y| x.abs().total_cmp(&y.abs()))
                    .unwrap_or(1.0);
                let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
                for i in 0..d {
                    a[i * d + col] = sign * scale * v[i];
                }
            }
        }
    }
    a
}

/// Discounted arithmetic-mean Asian call payoff as a unit-cube integrand:
/// each coordinate is (optionally baker-transformed, then) clamped away from
/// {0, 1} by half an ulp and mapped through the normal quantile; the
/// resulting Gaussian vector drives a geometric Brownian path at the
/// monitoring dates.
pub fn asian_option(params: &AsianOptionParams) -> Result<IntegrandSpec> {
    params.validate()?;
    let d = params.n_monitor;
    let a = path_matrix(d, params.maturity, params.path_construction);
    let dt = params.maturity / d as f64;
    let drift: Vec<f64> = (1..=d)
        .map(|j| (params.rate - 0.5 * params.volatility * params.volatility) * j as f64 * dt)
        .collect();
    let discount = (-params.rate * params.maturity).exp();
    let (s0, strike, sigma) = (params.s0, params.strike, params.volatility);
    let baker = params.periodization == Periodization::Baker;
    Ok(IntegrandSpec {
        dim: d,
        eval: Box::new(move |x: &[f64]| {
            let mut z = vec![0.0; d];
            for (zl, &u) in z.iter_mut().zip(x) {
                let u = if baker {
                    1.0 - (2.0 * u - 1.0).abs()
                } else {
                    u
                };
                *zl = normal_quantile_unchecked(u.clamp(U_EPS, 1.0 - U_EPS));
            }
            let mut path_sum = 0.0;
            for i in 0..d {
                let w: f64 = a[i * d..(i + 1) * d]
                    .iter()
                    .zip(&z)
                    .map(|(aik, zk)| aik * zk)
                    .sum();
                path_sum += (drift[i] + sigma * w).exp();
            }
            let average = s0 * path_sum / d as f64;
            discount * (average - strike).max(0.0)
        }),
        true_value: None,
        description: format!(
            "Asian call, s0 = {s0}, K = {strike}, r = {}, sigma = {sigma}, T = {}, d = {d}, \
             {:?} path, {:?} periodization",
            params.rate, params.maturity, params.path_construction, params.periodization
        ),
    })
}

/// Standard normal quantile, absolute error below 1e−9 on
/// `[1e−15, 1 − 1e−15]`: a rational initial guess polished by one Halley
/// step against an erfc-based CDF.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CubatureError::InvalidArgument(format!(
            "quantile argument must lie in (0, 1), got {p}"
        )));
    }
    Ok(normal_quantile_unchecked(p))
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn normal_quantile_unchecked(p: f64) -> f64 {
    // Reflect the upper half onto the lower: for p ≥ 1/2 the complement
    // 1 − p is exact (Sterbenz), and the lower-tail refinement below is free
    // of the cancellation that Φ(x) − p suffers near 1.
    if p > 0.5 {
        -lower_quantile(1.0 - p)
    } else {
        lower_quantile(p)
    }
}

/// Quantile for p ∈ (0, 1/2]: rational guess plus one Halley step. Here
/// x ≤ 0, so Φ(x) = erfc(|x|/√2)/2 is evaluated without cancellation and the
/// step lands at the precision of the erfc itself.
fn lower_quantile(p: f64) -> f64 {
    let x = rational_quantile_guess(p);
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Rational-function quantile approximation (absolute error ~1e−9), three
/// regimes: central polynomial in (p − 1/2)², and √(−2·log-tail) maps for
/// the two tails.
fn rational_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Reference value for an integrand without a closed form: the average of
/// `n_shifts` independent shifted-lattice sample means at `2^log2_n` points
/// each. Returns `(estimate, standard_error)` where the standard error is
/// taken over the independent shifts.
pub fn qmc_reference(
    spec: &IntegrandSpec,
    log2_n: u32,
    n_shifts: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_shifts < 2 {
        return Err(CubatureError::InvalidArgument(
            "need at least 2 shifts to estimate a standard error".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift_means = Vec::with_capacity(n_shifts);
    for _ in 0..n_shifts {
        let shift: Vec<f64> = (0..spec.dim).map(|_| rng.random()).collect();
        let rule = LatticeRule::korobov(spec.dim, shift, log2_n)?;
        let values = par::map_range_with_scratch(0, rule.n(), rule.dim(), |i, x| {
            rule.node_into(i, x);
            spec.call(x)
        });
        shift_means.push(sample_mean(&values));
    }
    let m = n_shifts as f64;
    let mean = shift_means.iter().sum::<f64>() / m;
    let ss: f64 = shift_means.iter().map(|v| (v - mean) * (v - mean)).sum();
    let se = (ss / (m * (m - 1.0))).sqrt();
    Ok((mean, se))
}
