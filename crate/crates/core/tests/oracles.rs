//! Cross-checks of the posterior formulas against an independent
//! extended-precision reference (see `support`): the same quantities are
//! recomputed with ~31-digit Gaussian elimination, with no shared
//! factorization code, and both the dense and the spectral routes must agree
//! with it.

mod support;

use cubayes::dense::GramContext;
use cubayes::fast::{fast_eb_objective, fast_posterior};
use cubayes::kernel::{eval_c0, gamma_max, KernelParams};
use cubayes::lattice::LatticeRule;
use cubayes::posterior::{student_t_quantile, Dof};
use cubayes::transform::SpectralCache;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{dd_dot, dd_log_det, dd_solve, dd_sum, Dd};

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * (1.0 + want.abs())
}

#[test]
fn dd_solver_recovers_known_solution() {
    // The oracle itself is checked first: build A·x for a known integer x
    // and a hand-made SPD matrix, then demand the solve returns x to far
    // beyond double precision.
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut m = vec![vec![Dd::ZERO; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = Dd::new(rng.random::<f64>() - 0.5);
            m[i][j] = v;
            m[j][i] = v;
        }
        m[i][i] = m[i][i].add(Dd::new(n as f64)); // diagonally dominant => SPD
    }
    let x_known: Vec<Dd> = (0..n).map(|i| Dd::new((i as f64) - 2.5)).collect();
    let b: Vec<Dd> = (0..n).map(|i| dd_dot(&m[i], &x_known)).collect();
    let x = dd_solve(&m, &b);
    for (got, want) in x.iter().zip(&x_known) {
        let err = got.sub(*want).to_f64().abs();
        assert!(err <= 1e-25, "solver error {err:e}");
    }
}

#[test]
fn dd_log_det_matches_diagonal_product() {
    let d = [2.0, 0.5, 8.0, 1.25];
    let n = d.len();
    let mut m = vec![vec![Dd::ZERO; n]; n];
    for i in 0..n {
        m[i][i] = Dd::new(d[i]);
    }
    let want: f64 = d.iter().map(|v| v.ln()).sum();
    assert!((dd_log_det(&m) - want).abs() <= 1e-14);
}

/// Extended-precision versions of the posterior mean, variance, and EB
/// objective for the unit-measure kernel (kernel means ≡ 1). With π = 1 the
/// formulas simplify: mean = (1ᵀC⁻¹f)/(1ᵀC⁻¹1) and the node-quality factor
/// is 1/(1ᵀC⁻¹1) − 1.
fn dd_reference(c: &[Vec<Dd>], f: &[f64]) -> (f64, f64, f64) {
    let n = f.len();
    let fv: Vec<Dd> = f.iter().map(|&v| Dd::new(v)).collect();
    let ones = vec![Dd::new(1.0); n];
    let w = dd_solve(c, &fv);
    let a = dd_solve(c, &ones);
    let s = dd_sum(a);
    let one_w = dd_sum(w.iter().copied());
    let mean = one_w.div(s);
    let quad = dd_dot(&fv, &w).sub(one_w.mul(one_w).div(s));
    let bracket = Dd::new(1.0).div(s).sub(Dd::new(1.0));
    let variance = quad.mul(bracket).div(Dd::new((n - 1) as f64));
    let objective = quad.ln_f64() + dd_log_det(c) / n as f64;
    (mean.to_f64(), variance.to_f64(), objective)
}

#[test]
fn dense_and_fast_agree_with_extended_precision_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdd);
    for &log2_n in &[2u32, 3, 4] {
        for &dim in &[1usize, 2] {
            for &r in &[1u32, 2] {
                for &frac in &[0.3, 0.9] {
                    let params = KernelParams::new(r, frac * gamma_max(r)).unwrap();
                    let rule = LatticeRule::korobov_seeded(dim, rng.random(), log2_n).unwrap();
                    let n = rule.n();
                    let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();

                    let nodes = rule.nodes();
                    let mut c = vec![vec![Dd::ZERO; n]; n];
                    for i in 0..n {
                        for j in 0..n {
                            c[i][j] = Dd::new(eval_c0(nodes.row(i), nodes.row(j), &params));
                        }
                    }
                    let (ref_mean, ref_var, ref_obj) = dd_reference(&c, &f);

                    let label = format!("n={n} d={dim} r={r} frac={frac}");
                    let ctx = GramContext::bernoulli(&nodes, &params).unwrap();
                    let dense_mean = ctx.full_bayes_mean(&f).unwrap();
                    let dense_var = ctx.full_bayes_variance(&f).unwrap();
                    let dense_obj = ctx.eb_objective_value(&f).unwrap();
                    assert!(close(dense_mean, ref_mean, 1e-9), "{label} dense mean");
                    assert!(close(dense_var, ref_var, 1e-9), "{label} dense variance");
                    assert!(close(dense_obj, ref_obj, 1e-9), "{label} dense objective");

                    let cache = SpectralCache::build(&f, &rule, &params).unwrap();
                    let posterior = fast_posterior(&cache, 0.99).unwrap();
                    let fast_obj = fast_eb_objective(&cache).unwrap() - (n as f64).ln();
                    assert!(close(posterior.mean, ref_mean, 1e-9), "{label} fast mean");
                    assert!(
                        close(posterior.variance, ref_var, 1e-9),
                        "{label} fast variance: {} vs {ref_var}",
                        posterior.variance
                    );
                    assert!(close(fast_obj, ref_obj, 1e-9), "{label} fast objective");
                }
            }
        }
    }
}

#[test]
fn pseudo_bound_flips_exactly_at_the_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let params = KernelParams::new(1, 1.0).unwrap();
    let rule = LatticeRule::korobov_seeded(2, 5, 3).unwrap();
    let nodes = rule.nodes();
    let ctx = GramContext::bernoulli(&nodes, &params).unwrap();
    let n = rule.n();
    let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let norm = ctx.spline_norm_sq(&f).unwrap();
    let t = student_t_quantile(Dof::Finite(n as u64), 0.995).unwrap();
    let threshold = t * t * norm / n as f64;
    assert!(ctx
        .pseudo_bound_check(&f, threshold * (1.0 - 1e-9))
        .unwrap());
    assert!(!ctx
        .pseudo_bound_check(&f, threshold * (1.0 + 1e-9))
        .unwrap());
}

#[test]
fn zero_mean_variance_decreases_along_lattice_doublings() {
    // More nodes can only help the zero-mean posterior: its variance is a
    // squared RKHS distance to a growing span.
    for dim in [1usize, 2, 3] {
        let params = KernelParams::new(1, 4.0).unwrap();
        let mut last = f64::INFINITY;
        let mut rule = LatticeRule::korobov_seeded(dim, 23, 2).unwrap();
        for _ in 0..4 {
            let v = GramContext::bernoulli(&rule.nodes(), &params)
                .unwrap()
                .zero_mean_variance()
                .unwrap();
            assert!(
                v <= last * (1.0 + 1e-9) + 1e-15,
                "dim {dim}: variance rose from {last} to {v}"
            );
            last = v;
            rule = rule.extend().unwrap();
        }
    }
}
