use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use cubayes_cli::error::{CliError, Result};
use cubayes_cli::experiment::{run_experiment, ExperimentPlan};
use cubayes_cli::factory::{parse_path, IntegrandRequest};
use cubayes_cli::settings::{self, ConfigFile};
use cubayes_cli::suite::run_equivalence_suite;

#[derive(Parser)]
#[command(
    name = "cubayes",
    version,
    about = "Automatic Bayesian cubature experiments on rank-1 lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated tolerance sweep and write CSV, summary, and plots
    Run(Box<RunArgs>),
    /// Replay the dense/fast agreement matrix and report deviations
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Integrand name: constant, product-peak, bernoulli-native, asian-option
    #[arg(long)]
    integrand: Option<String>,
    /// Dimension (monitoring dates for asian-option, default 12 there)
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated tolerance list (default 1e-1,1e-2,1e-3,1e-4)
    #[arg(long, value_delimiter = ',')]
    tol: Vec<f64>,
    /// Replications per tolerance
    #[arg(long)]
    reps: Option<u32>,
    /// Base seed; replication k runs with seed base+k
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for runs.csv, summary.json, and the plots
    #[arg(long)]
    out: Option<PathBuf>,
    /// Kernel smoothness order (1..=4)
    #[arg(long)]
    r: Option<u32>,
    /// Baker (tent) periodization for asian-option: on or off
    #[arg(long)]
    baker: Option<String>,
    /// Brownian path construction for asian-option: cholesky, bridge, pca
    #[arg(long)]
    path: Option<String>,
    /// Integrand parameters as a JSON object, e.g. '{"a": 0.5}'
    #[arg(long)]
    params: Option<String>,
    /// TOML config file; its keys override flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exit with code 1 when any tolerance's success rate falls below this
    #[arg(long)]
    min_success: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest lattice size as log2(n); the grid covers 4..=2^max_log2_n
    #[arg(long, default_value_t = 6)]
    max_log2_n: u32,
    /// Negate the fast-route variance before comparison (mutation hook for
    /// testing the harness itself; a healthy suite must then fail)
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run_cmd(&args),
        Command::Verify(args) => verify_cmd(&args),
    };
    std::process::exit(code);
}

fn run_cmd(args: &RunArgs) -> i32 {
    match build_plan(args).and_then(|plan| run_experiment(&plan)) {
        Ok(summary) => {
            if summary.floor_met {
                0
            } else {
                eprintln!(
                    "success rate below the configured floor {:?}",
                    summary.min_success
                );
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn verify_cmd(args: &VerifyArgs) -> i32 {
    match run_equivalence_suite(args.max_log2_n, args.inject_sign_flip) {
        Ok(report) => {
            report.print();
            if report.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn build_plan(args: &RunArgs) -> Result<ExperimentPlan> {
    let config = match &args.config {
        Some(path) => settings::load(path)?,
        None => ConfigFile::default(),
    };
    let run = config.run.unwrap_or_default();
    let engine_table = config.engine.unwrap_or_default();

    let name = run
        .integrand
        .clone()
        .or_else(|| args.integrand.clone())
        .ok_or_else(|| CliError::Usage("--integrand (or config run.integrand) required".into()))?;
    let mut request = IntegrandRequest::new(name);
    request.dim = run.dim.or(args.dim);

    // Parameter layers, least to most specific: --params JSON, dedicated
    // flags, config [params] table (config overrides flags).
    if let Some(json) = &args.params {
        let value: Value = serde_json::from_str(json)
            .map_err(|e| CliError::Usage(format!("--params is not valid JSON: {e}")))?;
        request.merge_params(&value)?;
    }
    if let Some(baker) = &args.baker {
        let on = match baker.as_str() {
            "on" => true,
            "off" => false,
            other => {
                return Err(CliError::Usage(format!(
                    "--baker takes on or off, got '{other}'"
                )))
            }
        };
        request.set_param("baker", Value::Bool(on));
    }
    if let Some(path) = &args.path {
        parse_path(path)?; // validate early for a code-2 exit
        request.set_param("path", Value::String(path.clone()));
    }
    if let Some(table) = &config.params {
        let value = serde_json::to_value(table)
            .map_err(|e| CliError::Usage(format!("config params table: {e}")))?;
        request.merge_params(&value)?;
    }

    let out_dir = std::env::var_os("CUBAYES_OUT_DIR")
        .map(PathBuf::from)
        .or_else(|| run.out.clone())
        .or_else(|| args.out.clone())
        .ok_or_else(|| CliError::Usage("--out (or config run.out) required".into()))?;

    let mut plan = ExperimentPlan::new(request, out_dir);
    if !args.tol.is_empty() {
        plan.tolerances = args.tol.clone();
    }
    if let Some(tols) = run.tolerances {
        plan.tolerances = tols;
    }
    if let Some(reps) = args.reps {
        plan.replications = reps;
    }
    if let Some(reps) = run.replications {
        plan.replications = reps;
    }
    if let Some(seed) = args.seed {
        plan.base_seed = seed;
    }
    if let Some(seed) = run.seed {
        plan.base_seed = seed;
    }
    plan.min_success = run.min_success.or(args.min_success);

    if let Some(r) = args.r {
        plan.engine.r = r;
    }
    if let Some(r) = engine_table.r {
        plan.engine.r = r;
    }
    if let Some(v) = engine_table.joint_r {
        plan.engine.joint_r = v;
    }
    if let Some(v) = engine_table.min_log2_n {
        plan.engine.min_log2_n = v;
    }
    if let Some(v) = engine_table.max_log2_n {
        plan.engine.max_log2_n = v;
    }
    if let Some(v) = engine_table.gamma_grid {
        plan.engine.gamma_grid = v;
    }
    if let Some(v) = engine_table.inflation {
        plan.engine.inflation = v;
    }
    if let Some(v) = engine_table.gen_vector {
        plan.engine.gen_vector = Some(v);
    }
    Ok(plan)
}
