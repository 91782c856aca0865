use std::path::PathBuf;

use faigp_core::{EngineConfig, FitConfig, LossKind, RegularizerConfig};
use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;

/// Where the search data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Benchmark(String),
    Csv(PathBuf),
}

/// Everything needed to reproduce a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub engine: EngineConfig,
    pub loss: LossKind,
    pub regularizer: RegularizerConfig,
    pub fit: FitConfig,
    /// Operator prior file; uniform when absent.
    pub prior: Option<PathBuf>,
    pub noise_lambda: f64,
    /// Runs use seeds `engine.seed .. engine.seed + repetitions`.
    pub repetitions: usize,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(source: DataSource) -> Self {
        RunConfig {
            source,
            engine: EngineConfig::default(),
            loss: LossKind::default(),
            regularizer: RegularizerConfig::default(),
            fit: FitConfig::default(),
            prior: None,
            noise_lambda: 0.0,
            repetitions: 1,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be at least 1".into()));
        }
        if !(self.noise_lambda.is_finite() && self.noise_lambda >= 0.0) {
            return Err(HarnessError::Config(format!("noise lambda must be non-negative, got {}", self.noise_lambda)));
        }
        self.engine.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.fit.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.regularizer.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Hyperparameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Population,
    Generations,
    LengthLimit,
}

impl SweepAxis {
    /// `template` with this axis set to `value`.
    pub fn apply(self, template: &RunConfig, value: u64) -> RunConfig {
        let mut cfg = template.clone();
        match self {
            SweepAxis::Population => {
                cfg.engine.population_size = value as usize;
                cfg.engine.parents = (value as usize / 2).max(1);
            }
            SweepAxis::Generations => cfg.engine.generations = value as usize,
            SweepAxis::LengthLimit => cfg.regularizer.length_limit = Some(value),
        }
        cfg
    }
}
