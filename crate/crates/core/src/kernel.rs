//! Shift-invariant Bernoulli-polynomial covariance on `[0,1]^d`.
//!
//! The one-dimensional building block is
//!
//! ```text
//! k(u) = 1 - (-1)^r γ B_{2r}(u),    u = |x - x'|,
//! ```
//!
//! where `B_{2r}` is the Bernoulli polynomial of degree `2r`, and the
//! d-dimensional covariance `c0` is the product of the coordinate factors.
//! Even-degree Bernoulli polynomials satisfy `B_{2r}(u) = B_{2r}(1 - u)`, so
//! the factor depends only on the wrapped distance `(x - x') mod 1` and the
//! kernel is shift invariant on the torus. Because `∫₀¹ B_{2r}(|x - t|) dt = 0`
//! for every `x`, the kernel integrates to exactly 1 against the uniform
//! measure in each argument — the property that makes the posterior formulas
//! collapse to closed forms on lattice node sets.

use crate::error::{CubatureError, Result};

/// Largest smoothness order with tabulated closed-form coefficients
/// (polynomial degree `2r` up to 8).
pub const MAX_R: u32 = 4;

/// Safety margin δ in the admissibility bound γ ≤ (1 − δ)/max|B_{2r}|.
const GAMMA_MARGIN: f64 = 1e-6;

/// Covariance hyperparameters θ = (r, γ) plus the vertical scale λ.
///
/// `r` controls smoothness (degree-2r polynomial factors), `gamma` weights how
/// far the prior deviates from a flat function, and `lambda_scale` is the
/// multiplicative amplitude λ of the full covariance `c = λ·c0`. The posterior
/// mean and the cubature weights are independent of λ; it only matters for the
/// fixed-scale (zero-mean) credible intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    r: u32,
    gamma: f64,
    lambda_scale: f64,
}

impl KernelParams {
    /// Parameters with unit vertical scale.
    pub fn new(r: u32, gamma: f64) -> Result<Self> {
        Self::with_scale(r, gamma, 1.0)
    }

    /// Parameters with an explicit vertical scale λ > 0.
    pub fn with_scale(r: u32, gamma: f64, lambda_scale: f64) -> Result<Self> {
        if !(1..=MAX_R).contains(&r) {
            return Err(CubatureError::InvalidArgument(format!(
                "smoothness order r = {r} outside the supported range 1..={MAX_R}"
            )));
        }
        let hi = gamma_max(r);
        if !gamma.is_finite() || gamma <= 0.0 || gamma > hi {
            return Err(CubatureError::InvalidArgument(format!(
                "gamma = {gamma} outside the admissible range (0, {hi}] for r = {r}"
            )));
        }
        if !lambda_scale.is_finite() || lambda_scale <= 0.0 {
            return Err(CubatureError::InvalidArgument(format!(
                "lambda_scale = {lambda_scale} must be a positive real"
            )));
        }
        Ok(Self {
            r,
            gamma,
            lambda_scale,
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda_scale(&self) -> f64 {
        self.lambda_scale
    }
}

/// Largest admissible γ for a given order: `(1 − δ)/max_{[0,1]}|B_{2r}|`.
///
/// Keeping every one-dimensional factor strictly positive keeps Gram matrices
/// positive definite and the empirical-Bayes search bounded. The maximum of
/// `|B_{2r}|` on `[0,1]` is attained at the endpoints and equals the Bernoulli
/// number `|B_{2r}|` (1/6, 1/30, 1/42, 1/30 for degrees 2, 4, 6, 8).
///
/// # Panics
/// Panics if `r` is outside `1..=MAX_R`.
pub fn gamma_max(r: u32) -> f64 {
    let bernoulli_number_abs = match r {
        1 => 1.0 / 6.0,
        2 => 1.0 / 30.0,
        3 => 1.0 / 42.0,
        4 => 1.0 / 30.0,
        _ => panic!("smoothness order r = {r} outside 1..={MAX_R}"),
    };
    (1.0 - GAMMA_MARGIN) / bernoulli_number_abs
}

/// Bernoulli polynomial of even degree 2, 4, 6, or 8 on `[0,1]`, evaluated
/// from the standard closed-form coefficients.
pub fn bernoulli_poly(degree: u32, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CubatureError::InvalidArgument(format!(
            "Bernoulli polynomial argument {x} outside [0,1]"
        )));
    }
    match degree {
        2 | 4 | 6 | 8 => Ok(b2r(degree / 2, x)),
        _ => Err(CubatureError::InvalidArgument(format!(
            "unsupported Bernoulli polynomial degree {degree} (even degrees 2..=8)"
        ))),
    }
}

/// `B_{2r}(u)` for validated `r` and `u ∈ [0,1]`; the hot path behind
/// [`bernoulli_poly`] and [`eval_c0`].
#[inline]
pub(crate) fn b2r(r: u32, u: f64) -> f64 {
    match r {
        // B₂ = x² − x + 1/6
        1 => (u - 1.0) * u + 1.0 / 6.0,
        // B₄ = x⁴ − 2x³ + x² − 1/30
        2 => ((u - 2.0) * u + 1.0) * (u * u) - 1.0 / 30.0,
        // B₆ = x⁶ − 3x⁵ + (5/2)x⁴ − (1/2)x² + 1/42
        3 => (((u - 3.0) * u + 2.5) * (u * u) - 0.5) * (u * u) + 1.0 / 42.0,
        // B₈ = x⁸ − 4x⁷ + (14/3)x⁶ − (7/3)x⁴ + (2/3)x² − 1/30
        4 => {
            ((((u - 4.0) * u + 14.0 / 3.0) * (u * u) - 7.0 / 3.0) * (u * u) + 2.0 / 3.0) * (u * u)
                - 1.0 / 30.0
        }
        _ => unreachable!("r validated at construction"),
    }
}

/// Sign of the Bernoulli term: `-(-1)^r`, so the one-dimensional factor is
/// `1 + sign_r(r)·γ·B_{2r}(u)`.
#[inline]
pub(crate) fn sign_r(r: u32) -> f64 {
    if r % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// The covariance `c0(x, x')` (unit vertical scale): the product over
/// coordinates of `1 - (-1)^r γ B_{2r}(|x_l - x'_l|)`.
///
/// Symmetric in its arguments and shift invariant; coordinates are expected in
/// `[0,1]`. `|x_l - x'_l|` is used as-is rather than folded to `min(u, 1-u)` —
/// even-degree Bernoulli polynomials take the same value either way.
pub fn eval_c0(x: &[f64], x_prime: &[f64], params: &KernelParams) -> f64 {
    debug_assert_eq!(x.len(), x_prime.len(), "dimension mismatch");
    let s = sign_r(params.r) * params.gamma;
    let r = params.r;
    let mut prod = 1.0;
    for (a, b) in x.iter().zip(x_prime.iter()) {
        prod *= 1.0 + s * b2r(r, (a - b).abs());
    }
    prod
}

/// The kernel mean `∫ c0(x', x) dx'` against the uniform measure on
/// `[0,1]^d`: identically 1 for this family, since Bernoulli polynomials
/// integrate to zero over a period. Exposed as an operation so generic
/// dense-path code does not hard-code the constant.
pub fn c0_mean(_x: &[f64], _params: &KernelParams) -> f64 {
    1.0
}

/// The double integral `∬ c0(x, x') dx dx'`: exactly 1, forced by the kernel
/// mean being identically 1.
pub fn c0_double_mean(_params: &KernelParams) -> f64 {
    1.0
}
