//! User-visible dense/fast verification: replays the route-agreement matrix
//! (posterior mean, posterior variance, empirical-Bayes objective) over a
//! seeded grid and reports the worst normalized deviation per cell.

use cubayes::dense::GramContext;
use cubayes::fast::{fast_eb_objective, fast_posterior};
use cubayes::kernel::{gamma_max, KernelParams};
use cubayes::lattice::LatticeRule;
use cubayes::transform::SpectralCache;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

pub const SUITE_TOLERANCE: f64 = 1e-9;

/// Dense Cholesky on an n×n Gram matrix bounds the practical grid; 2^12
/// already takes minutes per cell.
pub const MAX_SUITE_LOG2_N: u32 = 12;

#[derive(Debug, Clone)]
pub struct CellReport {
    pub n: usize,
    pub dim: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub cells: Vec<CellReport>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Run the agreement matrix for n ∈ {4, …, 2^max_log2_n} × d ∈ {1, 2, 3};
/// within each cell both kernel orders r ∈ {1, 2}, five γ draws from
/// [0.1, 0.9]·γmax, and five data draws are compared. Deviations are
/// |fast − dense| / (1 + |dense|); the suite passes iff all ≤ 1e−9.
///
/// `inject_variance_sign_flip` is the documented mutation hook: it negates
/// the fast-route variance after computation, which any honest run of the
/// suite must catch. It exists so the harness itself can be tested.
pub fn run_equivalence_suite(
    max_log2_n: u32,
    inject_variance_sign_flip: bool,
) -> Result<SuiteReport> {
    if !(2..=MAX_SUITE_LOG2_N).contains(&max_log2_n) {
        return Err(CliError::Usage(format!(
            "--max-log2-n must lie in 2..={MAX_SUITE_LOG2_N}, got {max_log2_n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xeb);
    let mut cells = Vec::new();
    let mut max_deviation = 0.0f64;
    for log2_n in 2..=max_log2_n {
        for dim in 1..=3usize {
            let mut cell_dev = 0.0f64;
            for &r in &[1u32, 2] {
                let rule = LatticeRule::korobov_seeded(dim, rng.random(), log2_n)
                    .map_err(CliError::Engine)?;
                let n = rule.n();
                let nodes = rule.nodes();
                for _ in 0..5 {
                    let span = (0.9f64 / 0.1).ln();
                    let gamma = 0.1 * gamma_max(r) * (span * rng.random::<f64>()).exp();
                    let params = KernelParams::new(r, gamma)?;
                    let ctx = GramContext::bernoulli(&nodes, &params)?;
                    for _ in 0..5 {
                        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                        let cache = SpectralCache::build(&f, &rule, &params)?;
                        let posterior = fast_posterior(&cache, 0.99)?;
                        let mut fast_variance = posterior.variance;
                        if inject_variance_sign_flip {
                            fast_variance = -fast_variance;
                        }
                        let fast_objective = fast_eb_objective(&cache)? - (n as f64).ln();
                        for (got, want) in [
                            (posterior.mean, ctx.full_bayes_mean(&f)?),
                            (fast_variance, ctx.full_bayes_variance(&f)?),
                            (fast_objective, ctx.eb_objective_value(&f)?),
                        ] {
                            cell_dev = cell_dev.max((got - want).abs() / (1.0 + want.abs()));
                        }
                    }
                }
            }
            max_deviation = max_deviation.max(cell_dev);
            cells.push(CellReport {
                n: 1usize << log2_n,
                dim,
                max_deviation: cell_dev,
            });
        }
    }
    Ok(SuiteReport {
        cells,
        max_deviation,
        pass: max_deviation <= SUITE_TOLERANCE,
    })
}

impl SuiteReport {
    pub fn print(&self) {
        for cell in &self.cells {
            println!(
                "n={:>5} d={}  max deviation {:.3e}",
                cell.n, cell.dim, cell.max_deviation
            );
        }
        println!(
            "dense/fast equivalence: {} (worst {:.3e}, tolerance {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.max_deviation,
            SUITE_TOLERANCE
        );
    }
}
