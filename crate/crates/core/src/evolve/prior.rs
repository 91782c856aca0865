use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Op;

const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("probability for {op} is {value}; must be finite and non-negative")]
    Negative { op: &'static str, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("unknown operator '{0}' (expected sqrt, cos, sin, log, affine)")]
    UnknownOperator(String),
    #[error("missing probability for '{0}'")]
    Missing(&'static str),
    #[error("malformed prior document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Sampling distribution over the library operators, in [`Op::LIBRARY`]
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct OperatorPrior {
    probs: [f64; 5],
}

impl Default for OperatorPrior {
    fn default() -> Self {
        OperatorPrior::uniform()
    }
}

impl OperatorPrior {
    pub fn uniform() -> Self {
        OperatorPrior { probs: [0.2; 5] }
    }

    /// All mass on `op`, which must be a library operator.
    pub fn degenerate(op: Op) -> Self {
        let i = op.library_index().expect("library operator");
        let mut probs = [0.0; 5];
        probs[i] = 1.0;
        OperatorPrior { probs }
    }

    pub fn new(probs: [f64; 5]) -> Result<Self, PriorError> {
        for (op, &value) in Op::LIBRARY.iter().zip(&probs) {
            if !value.is_finite() || value < 0.0 {
                return Err(PriorError::Negative { op: op.name(), value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(PriorError::NotNormalized(total));
        }
        Ok(OperatorPrior { probs })
    }

    pub fn probs(&self) -> [f64; 5] {
        self.probs
    }

    pub fn prob(&self, op: Op) -> f64 {
        op.library_index().map_or(0.0, |i| self.probs[i])
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Op {
        let dist = WeightedIndex::new(self.probs).expect("validated simplex");
        Op::LIBRARY[dist.sample(rng)]
    }

    /// Parses `{"sqrt": p, "cos": p, "sin": p, "log": p, "affine": p}`.
    pub fn from_json(text: &str) -> Result<Self, PriorError> {
        let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
        OperatorPrior::try_from(map)
    }

    pub fn from_path(path: &Path) -> Result<Self, PriorError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| PriorError::Io { path: path.display().to_string(), source })?;
        OperatorPrior::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain map")
    }
}

impl TryFrom<BTreeMap<String, f64>> for OperatorPrior {
    type Error = PriorError;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        let mut probs = [f64::NAN; 5];
        for (name, value) in map {
            let i = Op::from_name(&name)
                .and_then(Op::library_index)
                .ok_or(PriorError::UnknownOperator(name))?;
            probs[i] = value;
        }
        if let Some(i) = probs.iter().position(|v| v.is_nan()) {
            return Err(PriorError::Missing(Op::LIBRARY[i].name()));
        }
        OperatorPrior::new(probs)
    }
}

impl From<OperatorPrior> for BTreeMap<String, f64> {
    fn from(p: OperatorPrior) -> Self {
        Op::LIBRARY.iter().zip(p.probs).map(|(op, v)| (op.name().to_string(), v)).collect()
    }
}
