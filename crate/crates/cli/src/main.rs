use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use faigp_cli::harness::{run_summary, sweep_summary, write_json};
use faigp_cli::{run, sweep, DataSource, HarnessError, RunConfig, SweepAxis};
use faigp_core::{ExponentRange, LengthMode, LossKind};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LengthArg {
    Flat,
    Weighted,
}

/// Evolve expressions for a benchmark or a CSV file (header x1..xd,y).
#[derive(Debug, Parser)]
#[command(name = "faigp", version)]
struct Args {
    #[arg(long, conflicts_with = "data", required_unless_present_any = ["data", "list"])]
    benchmark: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Print the benchmark names and exit.
    #[arg(long)]
    list: bool,
    #[arg(long, default_value = "chi2")]
    loss: LossKind,
    #[arg(long, default_value_t = 400)]
    pop: usize,
    #[arg(long, default_value_t = 100)]
    gens: usize,
    #[arg(long, default_value_t = 0.01)]
    loss_target: f64,
    #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
    exp_min: i32,
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    exp_max: i32,
    #[arg(long, default_value_t = 0.3)]
    diversity_weight: f64,
    #[arg(long, default_value_t = 0.01)]
    length_weight: f64,
    #[arg(long, value_enum, default_value = "weighted")]
    length_mode: LengthArg,
    #[arg(long)]
    length_limit: Option<u64>,
    /// Levenberg-Marquardt budget per fit; 0 disables fitting.
    #[arg(long, default_value = "3", value_parser = ["0", "3", "5"])]
    fit_max_calls: String,
    /// JSON operator prior, e.g. {"sqrt":0.2,"cos":0.2,"sin":0.2,"log":0.2,"affine":0.2}.
    #[arg(long)]
    prior: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    noise_lambda: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Base seed; repetitions use seed, seed+1, ...
    #[arg(long, env = "FAIGP_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Vary one hyperparameter over --sweep-values.
    #[arg(long, value_enum, requires = "sweep_values")]
    sweep: Option<SweepAxis>,
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    sweep_values: Vec<u64>,
}

impl Args {
    fn config(&self) -> RunConfig {
        let source = match (&self.benchmark, &self.data) {
            (Some(name), _) => DataSource::Benchmark(name.clone()),
            (None, Some(path)) => DataSource::Csv(path.clone()),
            (None, None) => unreachable!("clap requires a source"),
        };
        let mut cfg = RunConfig::new(source);
        cfg.engine.population_size = self.pop;
        cfg.engine.parents = (self.pop / 2).max(1);
        cfg.engine.generations = self.gens;
        cfg.engine.loss_target = self.loss_target;
        cfg.engine.exponents = ExponentRange::new(self.exp_min, self.exp_max);
        cfg.engine.seed = self.seed;
        cfg.engine.workers = self.workers;
        cfg.loss = self.loss;
        cfg.regularizer.diversity_weight = self.diversity_weight;
        cfg.regularizer.length_weight = self.length_weight;
        cfg.regularizer.length_mode = match self.length_mode {
            LengthArg::Flat => LengthMode::Flat,
            LengthArg::Weighted => LengthMode::ExponentWeighted,
        };
        cfg.regularizer.length_limit = self.length_limit;
        cfg.fit.max_calls = self.fit_max_calls.parse().expect("restricted by clap");
        cfg.prior = self.prior.clone();
        cfg.noise_lambda = self.noise_lambda;
        cfg.repetitions = self.reps;
        cfg.out = self.out.clone();
        cfg
    }
}

fn execute(args: &Args) -> Result<(), HarnessError> {
    let cfg = args.config();
    match args.sweep {
        Some(axis) => {
            let out = sweep(&cfg, axis, &args.sweep_values)?;
            print!("{}", sweep_summary(&out));
            if let Some(path) = &cfg.out {
                write_json(&out, path)?;
            }
        }
        None => {
            let out = run(&cfg)?;
            print!("{}", run_summary(&out));
            if let Some(path) = &cfg.out {
                write_json(&out, path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list {
        for name in faigp_core::bench::benchmark_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
