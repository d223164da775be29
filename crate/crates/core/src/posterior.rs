//! Posterior summaries and the Student-t quantiles behind credible widths.

use crate::error::{CubatureError, Result};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Degrees of freedom of the posterior scale: `n − 1` under the full-Bayes
/// treatment (vertical scale integrated out), `∞` (a plain normal) when the
/// scale is held fixed as in the zero-mean Gaussian case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    Finite(u64),
    Infinite,
}

/// The `p`-quantile of the Student-t distribution with the given degrees of
/// freedom; `Dof::Infinite` yields the standard normal quantile.
pub fn student_t_quantile(dof: Dof, p: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(CubatureError::InvalidArgument(format!(
            "quantile level {p} outside (0,1)"
        )));
    }
    match dof {
        Dof::Infinite => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            Ok(normal.inverse_cdf(p))
        }
        Dof::Finite(0) => Err(CubatureError::InvalidArgument(
            "Student-t requires at least one degree of freedom".into(),
        )),
        Dof::Finite(nu) => {
            let t = StudentsT::new(0.0, 1.0, nu as f64).expect("valid dof");
            Ok(t.inverse_cdf(p))
        }
    }
}

/// Posterior mean, variance, and the credible half-width
/// `t_{dof,(1+confidence)/2} · √variance` used by the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance: f64,
    pub dof: Dof,
    pub half_width: f64,
    pub confidence: f64,
}

impl PosteriorSummary {
    /// Builds a summary, deriving the half-width from the variance; the
    /// caller is responsible for variance clamping policy (this constructor
    /// rejects negatives outright).
    pub fn from_variance(mean: f64, variance: f64, dof: Dof, confidence: f64) -> Result<Self> {
        if !(0.0 < confidence && confidence < 1.0) {
            return Err(CubatureError::InvalidArgument(format!(
                "confidence {confidence} outside (0,1)"
            )));
        }
        if !variance.is_finite() || variance < 0.0 {
            return Err(CubatureError::InvalidArgument(format!(
                "variance {variance} must be finite and nonnegative"
            )));
        }
        let quantile = student_t_quantile(dof, 0.5 * (1.0 + confidence))?;
        Ok(Self {
            mean,
            variance,
            dof,
            half_width: quantile * variance.sqrt(),
            confidence,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_quantile_at_995() {
        let q = student_t_quantile(Dof::Infinite, 0.995).unwrap();
        assert!((q - 2.5758).abs() <= 1e-3, "got {q}");
    }

    #[test]
    fn cauchy_quartile_is_one() {
        // One degree of freedom is the Cauchy distribution: quantile(0.75) = tan(π/4).
        let q = student_t_quantile(Dof::Finite(1), 0.75).unwrap();
        assert_relative_eq!(q, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn symmetry_about_the_median() {
        for dof in [Dof::Finite(3), Dof::Finite(17), Dof::Infinite] {
            for p in [0.6, 0.9, 0.995] {
                let hi = student_t_quantile(dof, p).unwrap();
                let lo = student_t_quantile(dof, 1.0 - p).unwrap();
                assert!((hi + lo).abs() <= 1e-10, "asymmetry at {p}: {hi} vs {lo}");
            }
        }
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(student_t_quantile(Dof::Infinite, 0.0).is_err());
        assert!(student_t_quantile(Dof::Infinite, 1.0).is_err());
        assert!(student_t_quantile(Dof::Finite(0), 0.9).is_err());
    }

    #[test]
    fn quantile_matches_simulation_for_five_dof() {
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        use rand_distr::{Distribution, StudentT};

        let n = 10_000_000usize;
        let dist = StudentT::new(5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut samples: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let p = 0.995;
        let idx = ((n as f64) * p) as usize;
        let (_, empirical, _) =
            samples.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap());
        let empirical = *empirical;

        // MC error of an order statistic: √(p(1-p)/n) / pdf(q). With
        // q ≈ 4.03 and t₅-pdf(q) ≈ 0.00488, four sigmas is ~0.018.
        let q = student_t_quantile(Dof::Finite(5), p).unwrap();
        let pdf = {
            // Student-t density with ν = 5 at the reference quantile.
            let nu = 5.0f64;
            let c = 8.0 / (3.0 * std::f64::consts::PI * nu.sqrt()); // Γ(3)/ (Γ(5/2)√(νπ))
            c * (1.0 + q * q / nu).powf(-3.0)
        };
        let se = (p * (1.0 - p) / n as f64).sqrt() / pdf;
        assert!(
            (q - empirical).abs() <= 4.0 * se,
            "quantile {q} vs empirical {empirical} (se {se:e})"
        );
    }

    #[test]
    fn summary_half_width_construction() {
        let s = PosteriorSummary::from_variance(1.5, 4.0, Dof::Finite(9), 0.99).unwrap();
        let q = student_t_quantile(Dof::Finite(9), 0.995).unwrap();
        assert_eq!(s.half_width, q * 2.0);
        assert!(PosteriorSummary::from_variance(0.0, -1.0, Dof::Infinite, 0.99).is_err());
        assert!(PosteriorSummary::from_variance(0.0, 1.0, Dof::Infinite, 1.0).is_err());
    }
}
