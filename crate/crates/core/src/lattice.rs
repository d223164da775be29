//! Shifted rank-1 integration lattice node sets, extensible in powers of two.
//!
//! The node set is `x_i = (i·z/n + Δ) mod 1` for `i = 0, …, n−1` with an odd
//! generating vector `z`, `n = 2^m`, and a common random shift `Δ ∈ [0,1)^d`.
//! Nodes are produced in natural index order: for a shift-invariant kernel the
//! Gram matrix is then circulant, which is the structural contract the
//! spectral transform relies on. Doubling `m` interleaves new points between
//! the old ones — `nodes(extend(rule))[2i]` equals `nodes(rule)[i]` bit for
//! bit, so integrand values survive a doubling by re-indexing.

use crate::error::{CubatureError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hard cap on `log2(n)`; `n·d` doubles at this size is already ~GB scale.
pub const MAX_LOG2_N: u32 = 26;

/// Documented default Korobov-style multiplier for generating vectors,
/// `z_l = a^(l-1) mod 2^26`. Odd, so every entry of `z` is odd and the base-2
/// extensible lattice has `2^m` distinct points for every `m`. A documented,
/// reproducible default — not claimed optimal for any particular dimension.
pub const DEFAULT_KOROBOV_A: u64 = 17_797;

/// A shifted rank-1 lattice rule: generating vector, shift, and current size.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRule {
    gen_vector: Vec<u64>,
    shift: Vec<f64>,
    log2_n: u32,
}

impl LatticeRule {
    /// Rule from an explicit generating vector and shift.
    pub fn new(gen_vector: Vec<u64>, shift: Vec<f64>, log2_n: u32) -> Result<Self> {
        if gen_vector.is_empty() {
            return Err(CubatureError::InvalidArgument(
                "generating vector must be non-empty".into(),
            ));
        }
        if gen_vector.len() != shift.len() {
            return Err(CubatureError::InvalidArgument(format!(
                "generating vector dimension {} != shift dimension {}",
                gen_vector.len(),
                shift.len()
            )));
        }
        if let Some(z) = gen_vector.iter().find(|z| **z % 2 == 0) {
            return Err(CubatureError::InvalidArgument(format!(
                "generating vector entry {z} is even; all entries must be odd"
            )));
        }
        if let Some(s) = shift.iter().find(|s| !(0.0..1.0).contains(*s)) {
            return Err(CubatureError::InvalidArgument(format!(
                "shift coordinate {s} outside [0,1)"
            )));
        }
        if log2_n > MAX_LOG2_N {
            return Err(CubatureError::ResourceLimit(format!(
                "log2_n = {log2_n} exceeds the cap {MAX_LOG2_N}"
            )));
        }
        Ok(Self {
            gen_vector,
            shift,
            log2_n,
        })
    }

    /// Rule with the default Korobov-style generating vector in `dim`
    /// dimensions and an explicit shift.
    pub fn korobov(dim: usize, shift: Vec<f64>, log2_n: u32) -> Result<Self> {
        Self::new(korobov_vector(dim), shift, log2_n)
    }

    /// Rule with the default generating vector and a shift drawn once from a
    /// seeded PRNG.
    pub fn korobov_seeded(dim: usize, seed: u64, log2_n: u32) -> Result<Self> {
        Self::korobov(dim, random_shift(dim, seed), log2_n)
    }

    pub fn dim(&self) -> usize {
        self.gen_vector.len()
    }

    pub fn log2_n(&self) -> u32 {
        self.log2_n
    }

    /// Number of nodes `n = 2^m`.
    pub fn n(&self) -> usize {
        1usize << self.log2_n
    }

    pub fn gen_vector(&self) -> &[u64] {
        &self.gen_vector
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Writes node `i` into `out` without allocating.
    ///
    /// `(i·z_l mod n)` is computed in wrapping integer arithmetic (exact,
    /// since `mod 2^m` only sees the low bits) and divided by the power of two
    /// `n` (exact float scaling), so the lattice part of every coordinate is
    /// an exact dyadic rational before the shift is added.
    #[inline]
    pub fn node_into(&self, i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        debug_assert!(i < self.n());
        let mask = (self.n() as u64) - 1;
        let inv_n = 1.0 / self.n() as f64;
        for (l, slot) in out.iter_mut().enumerate() {
            let frac = ((i as u64).wrapping_mul(self.gen_vector[l]) & mask) as f64 * inv_n;
            let s = frac + self.shift[l];
            *slot = if s >= 1.0 { s - 1.0 } else { s };
        }
    }

    /// The full `n × d` node matrix in natural index order.
    pub fn nodes(&self) -> NodeSet {
        let n = self.n();
        let d = self.dim();
        let mut data = vec![0.0; n * d];
        for (i, row) in data.chunks_exact_mut(d).enumerate() {
            self.node_into(i, row);
        }
        NodeSet { n, dim: d, data }
    }

    /// The same rule with `log2_n + 1`: even-index nodes of the extension
    /// reproduce this rule's nodes exactly, so cached integrand values move
    /// from index `i` to index `2i`.
    pub fn extend(&self) -> Result<Self> {
        if self.log2_n >= MAX_LOG2_N {
            return Err(CubatureError::ResourceLimit(format!(
                "cannot extend past log2_n = {MAX_LOG2_N}"
            )));
        }
        Ok(Self {
            gen_vector: self.gen_vector.clone(),
            shift: self.shift.clone(),
            log2_n: self.log2_n + 1,
        })
    }
}

/// Default generating vector `z_l = a^(l-1) mod 2^26` with
/// `a = DEFAULT_KOROBOV_A`.
pub fn korobov_vector(dim: usize) -> Vec<u64> {
    let modulus = 1u64 << MAX_LOG2_N;
    let mut z = Vec::with_capacity(dim);
    let mut a = 1u64;
    for _ in 0..dim {
        z.push(a);
        a = a.wrapping_mul(DEFAULT_KOROBOV_A) % modulus;
    }
    z
}

/// A shift in `[0,1)^d` drawn from a ChaCha stream seeded with `seed`.
pub fn random_shift(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// An `n × d` matrix of points in `[0,1)^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl NodeSet {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(CubatureError::InvalidArgument("empty node set".into()));
        }
        let dim = rows[0].len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(CubatureError::InvalidArgument(
                "node rows must share a positive dimension".into(),
            ));
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Self { n, dim, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Whether the point set is closed under the group operation
/// `(x + x' − x'') mod 1` to within `tol` per coordinate (distances wrap
/// around the torus). Exhaustive over all triples for `n ≤ 64`; for larger
/// sets, 1000 triples drawn from a fixed-seed PRNG (deterministic).
///
/// Rank-1 lattices form a group under addition mod 1 and a common shift
/// preserves the combination above, so genuine lattice node sets return true.
pub fn check_group_closure(points: &NodeSet, tol: f64) -> bool {
    let n = points.n();
    let closed = |i: usize, j: usize, k: usize| -> bool {
        let d = points.dim();
        let mut y = vec![0.0; d];
        for l in 0..d {
            let v = points.row(i)[l] + points.row(j)[l] - points.row(k)[l];
            y[l] = v.rem_euclid(1.0);
        }
        points.rows().any(|row| {
            row.iter().zip(&y).all(|(a, b)| {
                let diff = (a - b).abs();
                diff.min(1.0 - diff) <= tol
            })
        })
    };
    if n <= 64 {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if !closed(i, j, k) {
                        return false;
                    }
                }
            }
        }
        true
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_7474);
        (0..1000).all(|_| {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let k = rng.random_range(0..n);
            closed(i, j, k)
        })
    }
}
