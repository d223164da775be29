//! Tolerance-sweep experiment runner: replicated auto-cubature runs, one CSV
//! row per run, a JSON summary, and two static plots.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use cubayes::{auto_cubature, CubatureConfig};
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::factory::IntegrandRequest;
use crate::plot;

/// Engine knobs shared by every run of a plan; the per-run tolerance and
/// seed are filled in by the sweep.
#[derive(Debug, Clone)]
pub struct EngineSettings {
    pub r: u32,
    pub joint_r: bool,
    pub min_log2_n: u32,
    pub max_log2_n: u32,
    pub gamma_grid: usize,
    pub inflation: f64,
    pub gen_vector: Option<Vec<u64>>,
}

impl Default for EngineSettings {
    fn default() -> Self {
        let base = CubatureConfig::new(1.0);
        Self {
            r: base.r,
            joint_r: base.joint_r,
            min_log2_n: base.min_log2_n,
            max_log2_n: base.max_log2_n,
            gamma_grid: base.gamma_grid,
            inflation: base.inflation,
            gen_vector: None,
        }
    }
}

impl EngineSettings {
    fn config(&self, tolerance: f64, seed: u64) -> CubatureConfig {
        let mut config = CubatureConfig::new(tolerance);
        config.r = self.r;
        config.joint_r = self.joint_r;
        config.min_log2_n = self.min_log2_n;
        config.max_log2_n = self.max_log2_n;
        config.gamma_grid = self.gamma_grid;
        config.inflation = self.inflation;
        config.seed = seed;
        config.gen_vector = self.gen_vector.clone();
        config
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub integrand: IntegrandRequest,
    pub tolerances: Vec<f64>,
    pub replications: u32,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub engine: EngineSettings,
    /// Optional CI floor: overall exit code 1 when any tolerance's success
    /// rate falls below it (only checked when a true value exists).
    pub min_success: Option<f64>,
}

impl ExperimentPlan {
    pub fn new(integrand: IntegrandRequest, out_dir: PathBuf) -> Self {
        Self {
            integrand,
            tolerances: vec![1e-1, 1e-2, 1e-3, 1e-4],
            replications: 100,
            base_seed: 0,
            out_dir,
            engine: EngineSettings::default(),
            min_success: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tolerances.is_empty() {
            return Err(CliError::Usage("at least one tolerance required".into()));
        }
        for &t in &self.tolerances {
            if !(t > 0.0) {
                return Err(CliError::Usage(format!(
                    "tolerances must be positive, got {t}"
                )));
            }
        }
        let mut sorted = self.tolerances.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("tolerances must be distinct".into()));
        }
        if self.replications < 1 {
            return Err(CliError::Usage("replications must be ≥ 1".into()));
        }
        if let Some(floor) = self.min_success {
            if !(0.0..=1.0).contains(&floor) {
                return Err(CliError::Usage(format!(
                    "success floor must lie in [0, 1], got {floor}"
                )));
            }
        }
        Ok(())
    }
}

/// One completed run; maps 1:1 onto a CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub epsilon: f64,
    pub replication: u32,
    pub seed: u64,
    pub estimate: f64,
    pub true_value: Option<f64>,
    pub abs_error: Option<f64>,
    pub half_width: f64,
    pub n_used: usize,
    pub converged: bool,
    pub theta_r: u32,
    pub theta_gamma: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeQuantiles {
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceSummary {
    pub epsilon: f64,
    pub replications: u32,
    /// Runs with |estimate − truth| ≤ ε; absent without a closed form.
    pub successes: Option<u32>,
    pub success_rate: Option<f64>,
    pub converged: u32,
    pub median_n: usize,
    pub time: TimeQuantiles,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub integrand: String,
    pub dim: usize,
    pub base_seed: u64,
    pub replications: u32,
    pub tolerances: Vec<ToleranceSummary>,
    pub min_success: Option<f64>,
    /// False only when a floor is configured and some tolerance misses it.
    pub floor_met: bool,
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary> {
    plan.validate()?;
    let spec = plan.integrand.build()?;
    let dim = spec.dim;

    let cells: Vec<(usize, u32)> = plan
        .tolerances
        .iter()
        .enumerate()
        .flat_map(|(ti, _)| (0..plan.replications).map(move |rep| (ti, rep)))
        .collect();

    let run_one = |&(ti, rep): &(usize, u32)| -> Result<RunRecord> {
        let epsilon = plan.tolerances[ti];
        let seed = plan.base_seed + rep as u64;
        let config = plan.engine.config(epsilon, seed);
        let started = Instant::now();
        let result = auto_cubature(|x| spec.call(x), dim, &config)?;
        let wall_seconds = started.elapsed().as_secs_f64();
        let abs_error = spec.true_value.map(|t| (result.estimate - t).abs());
        Ok(RunRecord {
            epsilon,
            replication: rep,
            seed,
            estimate: result.estimate,
            true_value: spec.true_value,
            abs_error,
            half_width: result.half_width,
            n_used: result.n_used,
            converged: result.converged,
            theta_r: result.theta.r(),
            theta_gamma: result.theta.gamma(),
            wall_seconds,
        })
    };

    // Replications run concurrently; records come back in cell order, so
    // artifacts are written in deterministic (tolerance, replication) order.
    #[cfg(feature = "parallel")]
    let records: Vec<RunRecord> = cells.par_iter().map(run_one).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let records: Vec<RunRecord> = cells.iter().map(run_one).collect::<Result<_>>()?;

    std::fs::create_dir_all(&plan.out_dir)?;
    std::fs::write(
        plan.out_dir.join("runs.csv"),
        render_csv(plan, dim, &records),
    )?;
    std::fs::write(
        plan.out_dir.join("error_vs_tolerance.svg"),
        plot::error_scatter_svg(&records),
    )?;
    std::fs::write(
        plan.out_dir.join("time_vs_tolerance.svg"),
        plot::time_box_svg(&records),
    )?;

    let summary = summarize(plan, dim, &records);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(format!("summary serialization: {e}")))?;
    std::fs::write(plan.out_dir.join("summary.json"), json)?;

    for tol in &summary.tolerances {
        let success = match (tol.successes, tol.success_rate) {
            (Some(s), Some(rate)) => {
                format!("success {s}/{} ({:.1}%)", tol.replications, 100.0 * rate)
            }
            _ => "success n/a (no closed form)".into(),
        };
        println!(
            "epsilon {:>8}: {success}, converged {}/{}, median n {}, median {:.3}s p90 {:.3}s",
            tol.epsilon, tol.converged, tol.replications, tol.median_n, tol.time.p50, tol.time.p90
        );
    }
    Ok(summary)
}

fn render_csv(plan: &ExperimentPlan, dim: usize, records: &[RunRecord]) -> String {
    let mut out = String::new();
    out.push_str(
        "integrand,d,epsilon,replication,seed,estimate,true_value,abs_error,\
         half_width,n_used,converged,theta_r,theta_gamma,wall_seconds\n",
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            plan.integrand.name,
            dim,
            r.epsilon,
            r.replication,
            r.seed,
            r.estimate,
            opt(r.true_value),
            opt(r.abs_error),
            r.half_width,
            r.n_used,
            r.converged,
            r.theta_r,
            r.theta_gamma,
            r.wall_seconds
        )
        .expect("write to String cannot fail");
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn summarize(plan: &ExperimentPlan, dim: usize, records: &[RunRecord]) -> ExperimentSummary {
    let mut tolerances = Vec::with_capacity(plan.tolerances.len());
    for (ti, &epsilon) in plan.tolerances.iter().enumerate() {
        let rows: Vec<&RunRecord> = records
            .iter()
            .skip(ti * plan.replications as usize)
            .take(plan.replications as usize)
            .collect();
        let successes = rows
            .iter()
            .map(|r| r.abs_error.map(|e| u32::from(e <= epsilon)))
            .collect::<Option<Vec<u32>>>()
            .map(|hits| hits.iter().sum::<u32>());
        let mut times: Vec<f64> = rows.iter().map(|r| r.wall_seconds).collect();
        times.sort_by(f64::total_cmp);
        let mut ns: Vec<usize> = rows.iter().map(|r| r.n_used).collect();
        ns.sort_unstable();
        tolerances.push(ToleranceSummary {
            epsilon,
            replications: plan.replications,
            successes,
            success_rate: successes.map(|s| s as f64 / plan.replications as f64),
            converged: rows.iter().filter(|r| r.converged).count() as u32,
            median_n: ns[ns.len() / 2],
            time: TimeQuantiles {
                min: times[0],
                p25: quantile(&times, 0.25),
                p50: quantile(&times, 0.50),
                p75: quantile(&times, 0.75),
                p90: quantile(&times, 0.90),
                max: *times.last().expect("nonempty"),
            },
        });
    }
    let floor_met = match plan.min_success {
        None => true,
        Some(floor) => tolerances
            .iter()
            .filter_map(|t| t.success_rate)
            .all(|rate| rate >= floor),
    };
    ExperimentSummary {
        integrand: plan.integrand.name.clone(),
        dim,
        base_seed: plan.base_seed,
        replications: plan.replications,
        tolerances,
        min_success: plan.min_success,
        floor_met,
    }
}
