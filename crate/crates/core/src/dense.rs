//! Dense O(n³) reference implementations of every posterior and error-bound
//! formula — the correctness oracle for the fast path, and the engine for
//! arbitrary (non-lattice) node sets.
//!
//! Everything routes through a Cholesky factorization of the Gram matrix
//! held in a [`GramContext`]. With `w = C⁻¹f`, `a = C⁻¹1`, `b = C⁻¹π`
//! (π the kernel means), the quantities computed here are
//!
//! ```text
//! full-Bayes mean       πᵀw + (1 − 1ᵀb)·(1ᵀw)/(1ᵀa)
//! full-Bayes variance   (1/(n−1))·[fᵀw − (1ᵀw)²/(1ᵀa)]
//!                         · [(1 − πᵀa)²/(1ᵀa) + ππ − πᵀb]
//! EB objective          log(fᵀw − (1ᵀw)²/(1ᵀa)) + (1/n)·logdet C
//! zero-mean variance    ππ − πᵀb
//! deterministic cubature πᵀw        (minimum-norm interpolant integral)
//! spline norm²          fᵀw
//! ```
//!
//! where `ππ` is the double kernel mean. On lattice nodes with the matched
//! kernel these collapse to the fast path's spectral forms; the agreement is
//! pinned by the equivalence tests rather than assumed.

use crate::error::{CubatureError, Result};
use crate::kernel::{c0_double_mean, c0_mean, eval_c0, KernelParams};
use crate::lattice::NodeSet;
use crate::posterior::{student_t_quantile, Dof, PosteriorSummary};
use nalgebra::{DMatrix, DVector, Dyn};

/// Diagonal jitter ladder (multiples of the mean diagonal) tried before
/// declaring the Gram matrix ill-conditioned.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Symmetry tolerance for accepted Gram matrices, relative to the diagonal
/// scale.
const SYMMETRY_TOL: f64 = 1e-12;

/// Negatives no larger than this (scaled) are rounding and clamp to zero;
/// anything worse is a formula or conditioning bug and turns into an error.
const CLAMP_TOL: f64 = 1e-12;

fn clamp_nonnegative(value: f64, scale: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -CLAMP_TOL * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(CubatureError::IllConditioned(format!(
            "{what} = {value:e} is negative beyond the rounding tolerance"
        )))
    }
}

/// A factorized kernel system: Gram matrix `C` (or `K`), kernel means
/// `π = Π[c(·,X)]`, and the double mean `ΠΠ[c]`, with the Cholesky factor
/// computed once at construction.
#[derive(Debug, Clone)]
pub struct GramContext {
    gram: DMatrix<f64>,
    kernel_means: DVector<f64>,
    double_mean: f64,
    chol: nalgebra::linalg::Cholesky<f64, Dyn>,
    jitter: f64,
}

impl GramContext {
    /// Builds a context from an explicit Gram matrix and kernel means.
    ///
    /// The matrix must be symmetric to roughly machine precision; a small
    /// diagonal jitter ladder is tried before giving up on factorization.
    pub fn new(gram: DMatrix<f64>, kernel_means: DVector<f64>, double_mean: f64) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 || gram.ncols() != n {
            return Err(CubatureError::InvalidArgument(format!(
                "Gram matrix must be square and non-empty, got {}x{}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        if kernel_means.len() != n {
            return Err(CubatureError::InvalidArgument(format!(
                "kernel means length {} != n = {n}",
                kernel_means.len()
            )));
        }
        let diag_scale = gram.diagonal().amax().max(1.0);
        let mut max_asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_asym = max_asym.max((gram[(i, j)] - gram[(j, i)]).abs());
            }
        }
        if max_asym > SYMMETRY_TOL * diag_scale {
            return Err(CubatureError::InvalidArgument(format!(
                "Gram matrix asymmetric: max |C_ij - C_ji| = {max_asym:e}"
            )));
        }
        let mean_diag = gram.diagonal().mean();
        for jitter in JITTER_LADDER {
            let mut candidate = gram.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    candidate[(i, i)] += jitter * mean_diag;
                }
            }
            if let Some(chol) = nalgebra::linalg::Cholesky::new(candidate) {
                // The factorization can "succeed" on an effectively singular
                // matrix when rounding leaves a pivot barely positive; such a
                // factor turns solves into noise. Demand pivots clearly above
                // the rounding floor before accepting.
                let min_pivot = chol.l_dirty().diagonal().min();
                if min_pivot.is_finite() && min_pivot * min_pivot >= 1e-13 * diag_scale {
                    return Ok(Self {
                        gram,
                        kernel_means,
                        double_mean,
                        chol,
                        jitter: jitter * mean_diag,
                    });
                }
            }
        }
        Err(CubatureError::IllConditioned(format!(
            "Cholesky failed for n = {n} even with jitter {:e}·diag",
            JITTER_LADDER[JITTER_LADDER.len() - 1]
        )))
    }

    /// Context for the Bernoulli kernel `λ·c0` on an explicit node set. The
    /// kernel means are identically λ and the double mean is λ.
    pub fn bernoulli(nodes: &NodeSet, params: &KernelParams) -> Result<Self> {
        let n = nodes.n();
        let lambda = params.lambda_scale();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            lambda * eval_c0(nodes.row(i), nodes.row(j), params)
        });
        let means = DVector::from_fn(n, |i, _| lambda * c0_mean(nodes.row(i), params));
        Self::new(gram, means, lambda * c0_double_mean(params))
    }

    pub fn n(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn kernel_means(&self) -> &DVector<f64> {
        &self.kernel_means
    }

    pub fn double_mean(&self) -> f64 {
        self.double_mean
    }

    /// Jitter actually added to the diagonal (0 for well-conditioned data).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        // One step of iterative refinement. The worst-conditioned kernels
        // (r = 2 at small γ, where κ grows like n⁴/γ) leave O(ε·κ) solve
        // noise in the small-eigenvalue directions, visible to cross-route
        // comparisons at n = 64. ε·κ ≪ 1 throughout the admissible γ range,
        // so a single correction restores solver-limited accuracy.
        let mut residual = rhs - &self.gram * &x;
        if self.jitter > 0.0 {
            residual.axpy(-self.jitter, &x, 1.0);
        }
        x += self.chol.solve(&residual);
        x
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n() {
            return Err(CubatureError::InvalidArgument(format!(
                "data length {} != n = {}",
                f.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// `log det C` via the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>()
    }

    /// Posterior variance of the integral under a zero-mean GP with fixed
    /// vertical scale: `ΠΠ[c] − πᵀC⁻¹π`, tiny negatives clamped.
    pub fn zero_mean_variance(&self) -> Result<f64> {
        let b = self.solve(&self.kernel_means);
        let v = self.double_mean - self.kernel_means.dot(&b);
        clamp_nonnegative(v, self.double_mean, "zero-mean variance")
    }

    /// Posterior mean of the integral under the improper prior on the GP mean
    /// and vertical scale.
    ///
    /// Of the typographically plausible transcriptions, this reading is the
    /// one that both reproduces constants exactly and equals the sample
    /// average on matched lattice node sets; the tests pin both properties.
    pub fn full_bayes_mean(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        // πᵀC⁻¹f and 1ᵀC⁻¹f are evaluated as bᵀf and aᵀf (C⁻¹ is
        // symmetric). The transposed route matters: C⁻¹f has large
        // mutually-cancelling components for rough data, while a and b are
        // smooth, so these dot products stay at machine accuracy.
        let fv = DVector::from_column_slice(f);
        let a = self.solve(&DVector::from_element(self.n(), 1.0));
        let b = self.solve(&self.kernel_means);
        Ok(b.dot(&fv) + (1.0 - b.sum()) * a.dot(&fv) / a.sum())
    }

    /// Posterior variance of the integral under the improper prior: the
    /// data-dependent quadratic form times the node-quality bracket, divided
    /// by `n − 1`.
    pub fn full_bayes_variance(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        let n = self.n();
        if n < 2 {
            return Err(CubatureError::InvalidArgument(
                "full-Bayes variance needs n >= 2 (zero degrees of freedom otherwise)".into(),
            ));
        }
        let fv = DVector::from_column_slice(f);
        let w = self.solve(&fv);
        let a = self.solve(&DVector::from_element(n, 1.0));
        let b = self.solve(&self.kernel_means);
        let ones_a = a.sum();
        let ones_w = a.dot(&fv); // 1ᵀC⁻¹f via the smooth solve (see mean)
        let quad = fv.dot(&w) - ones_w * ones_w / ones_a;
        let quad = clamp_nonnegative(quad, fv.dot(&w).abs(), "quadratic form")?;
        let centered = 1.0 - self.kernel_means.dot(&a);
        let bracket = centered * centered / ones_a + self.double_mean - self.kernel_means.dot(&b);
        let bracket = clamp_nonnegative(bracket, self.double_mean, "node-quality factor")?;
        Ok(quad * bracket / (n as f64 - 1.0))
    }

    /// Full posterior summary (mean, variance, Student-t half-width with
    /// `n − 1` degrees of freedom).
    pub fn full_bayes_posterior(&self, f: &[f64], confidence: f64) -> Result<PosteriorSummary> {
        let mean = self.full_bayes_mean(f)?;
        let variance = self.full_bayes_variance(f)?;
        PosteriorSummary::from_variance(
            mean,
            variance,
            Dof::Finite(self.n() as u64 - 1),
            confidence,
        )
    }

    /// The empirical-Bayes objective `log(quadratic form) + (1/n)·logdet C`
    /// for the kernel this context was built with.
    pub fn eb_objective_value(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        let n = self.n();
        let fv = DVector::from_column_slice(f);
        let w = self.solve(&fv);
        let a = self.solve(&DVector::from_element(n, 1.0));
        let quad = fv.dot(&w) - w.sum() * w.sum() / a.sum();
        if quad <= 0.0 {
            return Err(CubatureError::DegenerateData(format!(
                "quadratic form {quad:e} is non-positive (constant data?)"
            )));
        }
        Ok(quad.ln() + self.log_det() / n as f64)
    }

    /// Deterministic minimum-norm-interpolant cubature `πᵀK⁻¹f` — also the
    /// zero-mean Bayesian posterior mean. Invariant under rescaling of the
    /// kernel (`K → aK` rescales `π` identically).
    pub fn det_cubature(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        // bᵀf rather than πᵀ(K⁻¹f): see full_bayes_mean.
        let b = self.solve(&self.kernel_means);
        Ok(b.dot(&DVector::from_column_slice(f)))
    }

    /// Squared RKHS norm of the minimum-norm interpolant, `fᵀK⁻¹f ≥ 0`.
    pub fn spline_norm_sq(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        let fv = DVector::from_column_slice(f);
        let v = fv.dot(&self.solve(&fv));
        clamp_nonnegative(v, fv.amax() * fv.amax(), "spline norm")
    }

    /// Zero-mean posterior for the integral with the vertical scale set to
    /// its maximum-likelihood value `fᵀC⁻¹f/n`: mean `πᵀC⁻¹f`, variance
    /// `(fᵀC⁻¹f/n)·(ΠΠ[c] − πᵀC⁻¹π)`, normal quantile (infinite dof).
    pub fn zero_mean_posterior(&self, f: &[f64], confidence: f64) -> Result<PosteriorSummary> {
        let mean = self.det_cubature(f)?;
        let scale = self.spline_norm_sq(f)? / self.n() as f64;
        let variance = scale * self.zero_mean_variance()?;
        PosteriorSummary::from_variance(mean, variance, Dof::Infinite, confidence)
    }

    /// Whether the caller-supplied residual `‖f − f̂‖²_H` satisfies the
    /// pseudo error bound `‖f − f̂‖²_H ≤ t²_{0.995,n} · fᵀK⁻¹f / n`. The
    /// residual is computable only for synthetic `f` with known RKHS norm,
    /// hence it is an input rather than something this module derives.
    pub fn pseudo_bound_check(&self, f: &[f64], f_norm_sq_residual: f64) -> Result<bool> {
        let norm_sq = self.spline_norm_sq(f)?;
        let t = student_t_quantile(Dof::Finite(self.n() as u64), 0.995)?;
        Ok(f_norm_sq_residual <= t * t * norm_sq / self.n() as f64)
    }
}

/// The empirical-Bayes objective for hyperparameters `theta`, with the Gram
/// system rebuilt by `ctx_builder` — the shape the dense γ-grid search uses.
pub fn eb_objective<B>(ctx_builder: B, f: &[f64], theta: &KernelParams) -> Result<f64>
where
    B: Fn(&KernelParams) -> Result<GramContext>,
{
    ctx_builder(theta)?.eb_objective_value(f)
}
