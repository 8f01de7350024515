//! `lpmhd [run] <experiment> [--config FILE] [overrides...]`

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lpmhd::experiments::{
    error_exit_code, run_experiment, ExperimentConfig, ExperimentKind, InitialData, EXIT_CONFIG,
};

#[derive(Parser, Debug)]
#[command(name = "lpmhd", version, about = "Littlewood-Paley / MHD verification experiments")]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentKind,
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spatial dimension.
    #[arg(long = "n", value_name = "DIM")]
    dim: Option<usize>,
    /// Points per axis.
    #[arg(long = "N", value_name = "POINTS")]
    grid: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<f64>,
    #[arg(long = "T", value_name = "T", allow_negative_numbers = true)]
    t_final: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Comma-separated list of ε values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    initial: Option<InitialData>,
    /// Constant table for `propagation`.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Refit on a doubled grid and flag drifting constants.
    #[arg(long)]
    audit: bool,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: None,
            dim: self.dim,
            grid: self.grid,
            nu: self.nu,
            alpha: self.alpha,
            s: self.s,
            r: self.r,
            t0: self.t0,
            t_final: self.t_final,
            dt: self.dt,
            eps_list: self.eps.clone(),
            seed: self.seed,
            samples: self.samples,
            initial: self.initial,
            constants: self.constants.clone(),
            audit: self.audit.then_some(true),
            output: self.output.clone(),
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("LPMHD_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("LPMHD_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("LPMHD_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    // `run` is an optional leading verb
    let mut args: Vec<String> = std::env::args().collect();
    if args.get(1).map(String::as_str) == Some("run") {
        args.remove(1);
    }
    let cli = Cli::parse_from(args);
    if let Err(e) = init_threads() {
        eprintln!("lpmhd: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let base = match &cli.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("lpmhd: {e}");
                return ExitCode::from(error_exit_code(&e));
            }
        },
        None => ExperimentConfig::default(),
    };
    let config = base.merged(&cli.overrides());
    match run_experiment(cli.experiment, &config) {
        Ok(summary) => {
            println!("{}: {}", cli.experiment.name(), summary.headline);
            println!("status: {:?}; outputs in {}", summary.status, summary.output.display());
            ExitCode::from(summary.status.exit_code())
        }
        Err(e) => {
            eprintln!("lpmhd: {}: {e}", cli.experiment.name());
            ExitCode::from(error_exit_code(&e))
        }
    }
}
