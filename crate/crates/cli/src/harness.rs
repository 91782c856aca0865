use std::fs;
use std::path::Path;

use faigp_core::bench::{benchmark, benchmark_names, generate_dataset, score_recovery, BenchmarkSpec, Recovery};
use faigp_core::dataset::{add_noise, DataError};
use faigp_core::evolve::{EngineError, PriorError};
use faigp_core::{evolve, Dataset, OperatorPrior, RunReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{DataSource, RunConfig, SweepAxis};

// the noise stream must not coincide with the benchmark sampling stream
const NOISE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown benchmark '{name}'; valid names: {}", valid.join(", "))]
    UnknownBenchmark { name: String, valid: Vec<&'static str> },
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("prior: {0}")]
    Prior(#[from] PriorError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("writing report {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl HarnessError {
    /// 2 for bad input, 1 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Output { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub report: RunReport,
    /// Score against the noise-free benchmark values; absent for CSV data.
    pub clean: Option<Recovery>,
}

impl RunRecord {
    /// R² used for aggregation: clean when available.
    pub fn r2(&self) -> f64 {
        self.clean.map_or(self.report.r2, |c| c.r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub best_r2: f64,
    pub r2: Stat,
    pub length: Stat,
    pub wall_time_s: Stat,
    pub reached_target: usize,
    pub exact: usize,
}

impl Aggregate {
    pub fn of(records: &[RunRecord]) -> Aggregate {
        let r2: Vec<f64> = records.iter().map(RunRecord::r2).collect();
        let len: Vec<f64> = records.iter().map(|r| r.report.length as f64).collect();
        let wall: Vec<f64> = records.iter().map(|r| r.report.wall_time_s).collect();
        Aggregate {
            runs: records.len(),
            best_r2: r2.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            r2: Stat::of(&r2),
            length: Stat::of(&len),
            wall_time_s: Stat::of(&wall),
            reached_target: records.iter().filter(|r| r.report.reached_target).count(),
            exact: records.iter().filter(|r| r.clean.is_some_and(|c| c.exact)).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: RunConfig,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: u64,
    pub runs: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub config: RunConfig,
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

pub fn resolve_benchmark(name: &str) -> Result<BenchmarkSpec, HarnessError> {
    benchmark(name).ok_or_else(|| HarnessError::UnknownBenchmark { name: name.to_string(), valid: benchmark_names() })
}

fn load_prior(cfg: &RunConfig) -> Result<OperatorPrior, HarnessError> {
    Ok(match &cfg.prior {
        Some(path) => OperatorPrior::from_path(path)?,
        None => OperatorPrior::uniform(),
    })
}

/// Runs `cfg.repetitions` searches with seeds `s, s+1, ...`. Benchmark data
/// is redrawn per run from the run seed.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let prior = load_prior(cfg)?;
    let (spec, file_data) = match &cfg.source {
        DataSource::Benchmark(name) => (Some(resolve_benchmark(name)?), None),
        DataSource::Csv(path) => (None, Some(Dataset::from_csv_path(path)?)),
    };
    let mut runs = Vec::with_capacity(cfg.repetitions);
    for k in 0..cfg.repetitions as u64 {
        let seed = cfg.engine.seed.wrapping_add(k);
        let clean = match (&spec, &file_data) {
            (Some(spec), _) => generate_dataset(spec, seed),
            (None, Some(d)) => d.clone(),
            (None, None) => unreachable!("one source is always set"),
        };
        let data = add_noise(&clean, cfg.noise_lambda, seed ^ NOISE_SEED_OFFSET)?;
        let mut engine = cfg.engine.clone();
        engine.seed = seed;
        let report = evolve(&data, &prior, &engine, cfg.loss, &cfg.regularizer, &cfg.fit)?;
        let clean = spec.as_ref().map(|s| score_recovery(&report.best_program, s, seed));
        runs.push(RunRecord { seed, report, clean });
    }
    let aggregate = Aggregate::of(&runs);
    Ok(RunOutput { config: cfg.clone(), runs, aggregate })
}

/// Runs the template at each axis value.
pub fn sweep(template: &RunConfig, axis: SweepAxis, values: &[u64]) -> Result<SweepOutput, HarnessError> {
    if values.is_empty() || values.contains(&0) {
        return Err(HarnessError::Config("sweep values must be positive integers".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let out = run(&axis.apply(template, value))?;
        points.push(SweepPoint { value, runs: out.runs, aggregate: out.aggregate });
    }
    Ok(SweepOutput { config: template.clone(), axis, points })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text).map_err(|source| HarnessError::Output { path: path.display().to_string(), source })
}

fn row(label: &str, a: &Aggregate) -> String {
    format!(
        "{label:<12} {:>4} {:>9.5} {:>9.5} {:>8.5} {:>8.1} {:>7.1} {:>8.2} {:>7.2} {:>5}",
        a.runs, a.best_r2, a.r2.mean, a.r2.sd, a.length.mean, a.length.sd, a.wall_time_s.mean, a.wall_time_s.sd, a.exact
    )
}

const HEADER: &str = "             runs   best_r2   mean_r2    sd_r2  mean_len  sd_len  mean_s    sd_s exact";

pub fn run_summary(out: &RunOutput) -> String {
    let mut s = String::new();
    for r in &out.runs {
        s.push_str(&format!("seed {:>6}  r2 {:>9.5}  len {:>4}  {}\n", r.seed, r.r2(), r.report.length, r.report.best_serialized));
    }
    s.push_str(HEADER);
    s.push('\n');
    s.push_str(&row("all", &out.aggregate));
    s.push('\n');
    s
}

pub fn sweep_summary(out: &SweepOutput) -> String {
    let mut s = format!("{HEADER}\n");
    for p in &out.points {
        s.push_str(&row(&p.value.to_string(), &p.aggregate));
        s.push('\n');
    }
    s
}
