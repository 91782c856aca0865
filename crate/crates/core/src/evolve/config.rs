use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExponentRange;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("population size must be at least 2, got {0}")]
    Population(usize),
    #[error("parent count {parents} must lie in 1..={population}")]
    Parents { parents: usize, population: usize },
    #[error("exponent interval [{0}, {1}] must be ordered and contain a non-zero integer")]
    Exponents(i32, i32),
    #[error("{0} weights must be finite, non-negative and not all zero")]
    Weights(&'static str),
    #[error("operator probabilities sum to {0}, not 1")]
    OperatorMix(f64),
    #[error("tournament size must be at least 1")]
    Tournament,
    #[error("elitism {elitism} must be below the population size {population}")]
    Elitism { elitism: usize, population: usize },
    #[error("depth limits must be at least 1 and the initial depth at most the maximum")]
    Depth,
}

/// Relative odds of mutating each element of the chosen 4-tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementWeights {
    pub coeff: f64,
    pub operands: f64,
    pub op: f64,
    pub exponent: f64,
}

impl Default for ElementWeights {
    fn default() -> Self {
        ElementWeights { coeff: 15.0, operands: 15.0, op: 82.5, exponent: 2.5 }
    }
}

impl ElementWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.coeff, self.operands, self.op, self.exponent]
    }
}

/// Probabilities of the variation operators applied to produce an offspring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorMix {
    pub crossover: f64,
    pub point: f64,
    pub subtree: f64,
    pub hoist: f64,
    pub replication: f64,
}

impl Default for OperatorMix {
    fn default() -> Self {
        OperatorMix { crossover: 0.65, point: 0.20, subtree: 0.08, hoist: 0.05, replication: 0.02 }
    }
}

impl OperatorMix {
    pub fn as_array(&self) -> [f64; 5] {
        [self.crossover, self.point, self.subtree, self.hoist, self.replication]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub population_size: usize,
    /// Size of the mating pool filled by tournaments each generation.
    pub parents: usize,
    pub generations: usize,
    /// A run stops once some program's raw loss is at or below this.
    pub loss_target: f64,
    pub exponents: ExponentRange,
    pub element_weights: ElementWeights,
    pub operator_mix: OperatorMix,
    pub tournament_size: usize,
    pub elitism: usize,
    pub seed: u64,
    pub max_depth: usize,
    /// Nesting depth of freshly generated programs.
    pub init_depth: usize,
    /// Evaluation threads; results do not depend on this.
    pub workers: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            population_size: 400,
            parents: 200,
            generations: 100,
            loss_target: 0.01,
            exponents: ExponentRange::new(-2, 2),
            element_weights: ElementWeights::default(),
            operator_mix: OperatorMix::default(),
            tournament_size: 3,
            elitism: 1,
            seed: 0,
            max_depth: 6,
            init_depth: 3,
            workers: 1,
        }
    }
}

fn weights_ok(w: &[f64]) -> bool {
    w.iter().all(|v| v.is_finite() && *v >= 0.0) && w.iter().sum::<f64>() > 0.0
}

impl EngineConfig {
    /// Default configuration with `n` individuals and `n / 2` parents.
    pub fn with_population(n: usize) -> Self {
        EngineConfig { population_size: n, parents: (n / 2).max(1), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size < 2 {
            return Err(ConfigError::Population(self.population_size));
        }
        if self.parents == 0 || self.parents > self.population_size {
            return Err(ConfigError::Parents { parents: self.parents, population: self.population_size });
        }
        let ExponentRange { min, max } = self.exponents;
        if min > max || (min == 0 && max == 0) {
            return Err(ConfigError::Exponents(min, max));
        }
        if !weights_ok(&self.element_weights.as_array()) {
            return Err(ConfigError::Weights("element mutation"));
        }
        let mix = self.operator_mix.as_array();
        if !weights_ok(&mix) {
            return Err(ConfigError::Weights("operator"));
        }
        let total: f64 = mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ConfigError::OperatorMix(total));
        }
        if self.tournament_size == 0 {
            return Err(ConfigError::Tournament);
        }
        if self.elitism >= self.population_size {
            return Err(ConfigError::Elitism { elitism: self.elitism, population: self.population_size });
        }
        if self.max_depth == 0 || self.init_depth == 0 || self.init_depth > self.max_depth {
            return Err(ConfigError::Depth);
        }
        Ok(())
    }

    /// Non-zero exponents of the interval.
    pub(crate) fn nonzero_exponents(&self) -> Vec<i32> {
        (self.exponents.min..=self.exponents.max).filter(|&e| e != 0).collect()
    }
}
