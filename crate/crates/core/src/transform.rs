//! Circulant spectral machinery: the O(n log n) fast transform, Gram
//! eigenvalues, and the fixed-order sample mean.
//!
//! Convention: `V` is the n×n matrix with `V[j,k] = exp(+2πi·jk/n)`, so
//! `V^H V = n·I`, the first column of `V` is the ones vector, and the forward
//! map [`fast_transform`] computes `V^H b` — the standard DFT with conjugated
//! kernel. On lattice nodes in natural order the Gram matrix of a
//! shift-invariant kernel is circulant: `C0 = (1/n)·V·diag(ℓ)·V^H`, where
//! `ℓ = V^H C1` is the transform of the first Gram column. Since `V/√n` is
//! unitary, the `ℓ_i` are exactly the eigenvalues of `C0`.
//!
//! The transform is an iterative radix-2 decimation-in-time FFT with
//! bit-reversal permutation, implemented here rather than delegated so the
//! scaling claim stays measurable against this code. Zero-index butterflies
//! are pure add/sub, which keeps the zero-frequency bin a chain of plain
//! additions — the documented summation order that [`sample_mean`] replays
//! bit for bit.

use crate::error::{CubatureError, Result};
use crate::kernel::{eval_c0, KernelParams};
use crate::lattice::LatticeRule;
use crate::par;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

/// Minimum size before a transform parallelizes across butterfly blocks.
#[cfg(feature = "parallel")]
const PARALLEL_FFT_MIN: usize = 1 << 15;

/// Tolerance for discarding the imaginary parts of transformed real-even
/// data (Gram eigenvalues), relative to the largest eigenvalue. The largest
/// eigenvalue is the column sum (order n), so this bound scales with the
/// transform's own rounding noise rather than with the smallest eigenvalue,
/// which can legitimately sit many orders of magnitude lower.
const IM_REL_TOL: f64 = 1e-9;
const IM_ABS_TOL: f64 = 1e-12;

/// Most recent twiddle table, keyed by n. The empirical-Bayes search reuses
/// one size dozens of times before the doubling loop moves on, so a
/// single-entry cache captures almost all reuse without holding tables for
/// every size visited.
static TWIDDLES: Mutex<Option<(usize, Arc<Vec<Complex64>>)>> = Mutex::new(None);

fn twiddles_for(n: usize) -> Arc<Vec<Complex64>> {
    let mut guard = TWIDDLES.lock().unwrap();
    if let Some((cached_n, table)) = guard.as_ref() {
        if *cached_n == n {
            return Arc::clone(table);
        }
    }
    // tw[k] = exp(-2πi·k/n); k/n is exact (k < n/2, n a power of two).
    let table: Vec<Complex64> = (0..n / 2)
        .map(|k| {
            let angle = -2.0 * PI * (k as f64 / n as f64);
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect();
    let table = Arc::new(table);
    *guard = Some((n, Arc::clone(&table)));
    table
}

fn require_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        Err(CubatureError::InvalidArgument(format!(
            "transform length {n} is not a power of two"
        )))
    } else {
        Ok(())
    }
}

#[inline]
fn bit_reverse_permute(a: &mut [Complex64]) {
    let n = a.len();
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = if n > 1 { i.reverse_bits() >> shift } else { 0 };
        if j > i {
            a.swap(i, j);
        }
    }
}

/// One stage's butterflies over a single block of length `len`.
/// `stride = n/len` indexes the shared twiddle table.
#[inline]
fn butterfly_block(block: &mut [Complex64], twiddles: &[Complex64], stride: usize) {
    let half = block.len() / 2;
    let (lo, hi) = block.split_at_mut(half);
    // j = 0 has twiddle 1: written as a bare add/sub so the zero-frequency
    // data path is pure f64 addition (the sample-mean identity relies on it).
    let u = lo[0];
    let v = hi[0];
    lo[0] = u + v;
    hi[0] = u - v;
    for j in 1..half {
        let t = twiddles[j * stride] * hi[j];
        let u = lo[j];
        lo[j] = u + t;
        hi[j] = u - t;
    }
}

/// In-place forward transform `a ← V^H a`, radix-2 decimation in time.
fn fft_in_place(a: &mut [Complex64]) {
    let n = a.len();
    if n < 2 {
        return;
    }
    let twiddles = twiddles_for(n);
    bit_reverse_permute(a);
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if n >= PARALLEL_FFT_MIN && len < n {
                // Blocks are disjoint and the arithmetic inside each block is
                // fixed, so the parallel split is bit-identical to sequential.
                a.par_chunks_exact_mut(len)
                    .for_each(|block| butterfly_block(block, &twiddles, stride));
                len <<= 1;
                continue;
            }
        }
        for block in a.chunks_exact_mut(len) {
            butterfly_block(block, &twiddles, stride);
        }
        len <<= 1;
    }
}

/// The fast transform `V^H b` of a complex vector; length must be a power of
/// two.
pub fn fast_transform(b: &[Complex64]) -> Result<Vec<Complex64>> {
    require_power_of_two(b.len())?;
    let mut a = b.to_vec();
    fft_in_place(&mut a);
    Ok(a)
}

/// The fast transform `V^H b` of a real vector.
pub fn fast_transform_real(b: &[f64]) -> Result<Vec<Complex64>> {
    require_power_of_two(b.len())?;
    let mut a: Vec<Complex64> = b.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    fft_in_place(&mut a);
    Ok(a)
}

/// The inverse of [`fast_transform`]: `(1/n)·V·b`, computed as a conjugated
/// forward pass (`V = conj(V^H)` entrywise).
pub fn inverse_transform(b: &[Complex64]) -> Result<Vec<Complex64>> {
    require_power_of_two(b.len())?;
    let n = b.len() as f64;
    let mut a: Vec<Complex64> = b.iter().map(|x| x.conj()).collect();
    fft_in_place(&mut a);
    for x in &mut a {
        *x = x.conj() / n;
    }
    Ok(a)
}

/// Arithmetic mean of `values` under the documented summation order: the
/// addends are permuted by bit reversal and then pairwise-summed over
/// adjacent blocks, exactly the additions the fast transform performs on its
/// zero-frequency bin. `fast_transform(f)[0].re / n` reproduces this value
/// bit for bit for real `f`.
///
/// # Panics
/// Panics if the length is not a power of two.
pub fn sample_mean(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(
        n > 0 && n.is_power_of_two(),
        "sample_mean requires a power-of-two length, got {n}"
    );
    let shift = usize::BITS - n.trailing_zeros();
    let mut buf = vec![0.0; n];
    for (i, slot) in buf.iter_mut().enumerate() {
        let j = if n > 1 { i.reverse_bits() >> shift } else { 0 };
        *slot = values[j];
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let mut b = 0;
        while b < n {
            buf[b] = buf[b] + buf[b + half];
            b += len;
        }
        len <<= 1;
    }
    buf[0] / n as f64
}

/// Eigenvalues `ℓ = V^H C1` of the circulant Gram matrix `C0` of the kernel
/// on the rule's nodes, via the first Gram column `C1[i] = c0(x_i, x_0)`.
///
/// The transform of real even data is real in exact arithmetic; imaginary
/// parts must pass `|Im| ≤ 1e-9·max|Re| + 1e-12` before being discarded, and
/// all eigenvalues must be strictly positive. A violation signals γ too large
/// for the node count, coincident nodes, or (at very large n) eigenvalues
/// below the FFT noise floor — in every case the spectrum is numerically
/// unusable.
pub fn gram_eigenvalues(rule: &LatticeRule, params: &KernelParams) -> Result<Vec<f64>> {
    let n = rule.n();
    require_power_of_two(n)?;
    let dim = rule.dim();
    let mut x0 = vec![0.0; dim];
    rule.node_into(0, &mut x0);
    let column = par::map_range_with_scratch(0, n, dim, |i, buf| {
        rule.node_into(i, buf);
        eval_c0(buf, &x0, params)
    });
    let mut a: Vec<Complex64> = column.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut a);
    let scale = a.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let im_tol = IM_REL_TOL * scale + IM_ABS_TOL;
    let mut ell = Vec::with_capacity(n);
    for (k, v) in a.iter().enumerate() {
        if v.im.abs() > im_tol {
            return Err(CubatureError::IllConditioned(format!(
                "eigenvalue {k} of {n} has imaginary part {:e} (re {:e}, spectrum scale {scale:e})",
                v.im, v.re
            )));
        }
        if v.re <= 0.0 {
            return Err(CubatureError::IllConditioned(format!(
                "eigenvalue {k} of {n} is non-positive ({:e}); gamma = {} too large or nodes \
                 coincide",
                v.re,
                params.gamma()
            )));
        }
        ell.push(v.re);
    }
    Ok(ell)
}

/// Fast-transformed integrand data and Gram eigenvalues for one `(n, θ)`
/// pair — everything the fast posterior formulas consume.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    pub n: usize,
    /// `f̃ = V^H f`.
    pub f_tilde: Vec<Complex64>,
    /// `ℓ = diag(Λ) = V^H C1`, strictly positive.
    pub ell: Vec<f64>,
    /// Kernel parameters used to build `ell`.
    pub theta: KernelParams,
}

impl SpectralCache {
    /// Builds the cache for integrand values `f` at the rule's nodes.
    pub fn build(f: &[f64], rule: &LatticeRule, params: &KernelParams) -> Result<Self> {
        if f.len() != rule.n() {
            return Err(CubatureError::InvalidArgument(format!(
                "value count {} != node count {}",
                f.len(),
                rule.n()
            )));
        }
        Ok(Self {
            n: f.len(),
            f_tilde: fast_transform_real(f)?,
            ell: gram_eigenvalues(rule, params)?,
            theta: *params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n²) direct DFT oracle: `out[j] = Σ_k b[k]·exp(-2πi·jk/n)`.
    fn direct_dft(b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        (0..n)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, v) in b.iter().enumerate() {
                    let angle = -2.0 * PI * (j as f64) * (k as f64) / n as f64;
                    acc += v * Complex64::new(angle.cos(), angle.sin());
                }
                acc
            })
            .collect()
    }

    fn random_complex(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn ones_vector_transforms_to_n_e0() {
        for m in 0..=10 {
            let n = 1usize << m;
            let ones = vec![1.0; n];
            let out = fast_transform_real(&ones).unwrap();
            assert!((out[0].re - n as f64).abs() <= 1e-12 * n as f64);
            assert!(out[0].im.abs() <= 1e-12 * n as f64);
            for v in &out[1..] {
                assert!(v.norm() <= 1e-12 * n as f64);
            }
        }
    }

    #[test]
    fn impulse_transforms_to_ones() {
        let mut b = vec![Complex64::new(0.0, 0.0); 4];
        b[0] = Complex64::new(1.0, 0.0);
        let out = fast_transform(&b).unwrap();
        for v in out {
            assert_relative_eq!(v.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn matches_direct_dft() {
        for (n, seed) in [(8usize, 1u64), (32, 2), (128, 3)] {
            let b = random_complex(n, seed);
            let fast = fast_transform(&b).unwrap();
            let slow = direct_dft(&b);
            let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (f, s) in fast.iter().zip(&slow) {
                assert!(
                    (f - s).norm() <= 1e-12 * scale.max(1.0),
                    "n={n}: {f} vs {s}"
                );
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let b = vec![Complex64::new(1.0, 0.0); 3];
        assert!(fast_transform(&b).is_err());
        assert!(fast_transform(&[]).is_err());
        assert!(fast_transform_real(&[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn length_one_is_identity() {
        let b = [Complex64::new(2.5, -1.0)];
        assert_eq!(fast_transform(&b).unwrap()[0], b[0]);
        assert_eq!(inverse_transform(&b).unwrap()[0], b[0]);
        assert_eq!(sample_mean(&[3.25]), 3.25);
    }

    #[test]
    fn sample_mean_matches_transform_bin_zero_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for m in 0..=12 {
            let n = 1usize << m;
            let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
            let tilde = fast_transform_real(&f).unwrap();
            let via_fft = tilde[0].re / n as f64;
            assert_eq!(
                via_fft.to_bits(),
                sample_mean(&f).to_bits(),
                "order mismatch at n={n}"
            );
        }
    }

    #[test]
    fn gram_eigenvalues_closed_form_n4() {
        // d=1, r=1, γ=1, z=(1), Δ=0, n=4: first Gram column is
        // (7/6, 47/48, 11/12, 47/48) and the circulant eigenvalues are
        // ℓ = (194/48, 1/4, 1/8, 1/4).
        let rule = LatticeRule::new(vec![1], vec![0.0], 2).unwrap();
        let params = KernelParams::new(1, 1.0).unwrap();
        let ell = gram_eigenvalues(&rule, &params).unwrap();
        let want = [194.0 / 48.0, 0.25, 0.125, 0.25];
        for (a, b) in ell.iter().zip(&want) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn gram_eigenvalues_match_dense_eigensolver() {
        use nalgebra::DMatrix;
        let rule = LatticeRule::korobov_seeded(2, 11, 4).unwrap();
        let params = KernelParams::new(1, 2.5).unwrap();
        let n = rule.n();
        let nodes = rule.nodes();
        let gram = DMatrix::from_fn(n, n, |i, j| eval_c0(nodes.row(i), nodes.row(j), &params));
        let mut dense: Vec<f64> = gram.symmetric_eigenvalues().iter().cloned().collect();
        let mut fast = gram_eigenvalues(&rule, &params).unwrap();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fast.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in fast.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn eigenvalue_sum_is_trace() {
        for (d, r, gamma, m) in [(1usize, 1u32, 1.0, 5u32), (3, 2, 8.0, 6), (2, 4, 20.0, 4)] {
            let rule = LatticeRule::korobov_seeded(d, 5, m).unwrap();
            let params = KernelParams::new(r, gamma).unwrap();
            let ell = gram_eigenvalues(&rule, &params).unwrap();
            let n = rule.n();
            let mut x0 = vec![0.0; d];
            rule.node_into(0, &mut x0);
            let trace = n as f64 * eval_c0(&x0, &x0, &params);
            let sum: f64 = ell.iter().sum();
            assert_relative_eq!(sum, trace, epsilon = 1e-9 * trace);
        }
    }

    #[test]
    fn ell_zero_is_first_column_sum() {
        let rule = LatticeRule::korobov_seeded(3, 23, 6).unwrap();
        let params = KernelParams::new(1, 4.0).unwrap();
        let ell = gram_eigenvalues(&rule, &params).unwrap();
        let nodes = rule.nodes();
        let col_sum: f64 = (0..rule.n())
            .map(|i| eval_c0(nodes.row(i), nodes.row(0), &params))
            .sum();
        assert_relative_eq!(ell[0], col_sum, epsilon = 1e-9 * col_sum);
    }

    #[test]
    fn cache_build_validates_lengths() {
        let rule = LatticeRule::new(vec![1], vec![0.0], 2).unwrap();
        let params = KernelParams::new(1, 1.0).unwrap();
        assert!(SpectralCache::build(&[1.0, 2.0], &rule, &params).is_err());
        let cache = SpectralCache::build(&[1.0, 2.0, 3.0, 4.0], &rule, &params).unwrap();
        assert_eq!(cache.n, 4);
        assert!(cache.f_tilde[0].im == 0.0);
        assert!(cache.ell.iter().all(|l| *l > 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval_up_to_scale(seed in 0u64..500, m in 0u32..11) {
            let n = 1usize << m;
            let b = random_complex(n, seed);
            let out = fast_transform(&b).unwrap();
            let lhs: f64 = out.iter().map(|v| v.norm_sqr()).sum();
            let rhs: f64 = n as f64 * b.iter().map(|v| v.norm_sqr()).sum::<f64>();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }

        #[test]
        fn round_trip(seed in 0u64..500, m in 0u32..11) {
            let n = 1usize << m;
            let b = random_complex(n, seed);
            let back = inverse_transform(&fast_transform(&b).unwrap()).unwrap();
            let scale = b.iter().map(|v| v.norm()).fold(1e-300, f64::max);
            for (x, y) in b.iter().zip(&back) {
                prop_assert!((x - y).norm() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
