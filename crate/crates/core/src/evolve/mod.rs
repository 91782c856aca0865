//! Population search: generation from an operator prior, variation
//! operators, tournament selection with elitism and the generational loop.

mod config;
mod engine;
mod prior;
mod variation;

pub use config::{ConfigError, ElementWeights, EngineConfig, OperatorMix};
pub use engine::{evolve, EngineError, Evolution, RunReport};
pub use prior::{OperatorPrior, PriorError};
pub use variation::{Variation, VariationKind};
