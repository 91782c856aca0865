//! Symbolic regression over a set-based function algebra.
//!
//! Programs are sets of `(coefficient, operator, argument, exponent)` nodes
//! ([`expr`]). A search ([`evolve`]) grows a population of programs from an
//! operator prior, scores them with a loss plus length and diversity
//! regularizers ([`loss`], [`diversity`]), refines coefficients by
//! least squares ([`fit`]) and varies them by crossover and mutation.
//! [`bench`] carries the standard benchmark problems.

pub mod bench;
pub mod dataset;
pub mod diversity;
pub mod evolve;
pub mod expr;
pub mod fit;
pub mod loss;
pub mod rng;

pub use dataset::Dataset;
pub use evolve::{evolve, EngineConfig, OperatorPrior, RunReport};
pub use expr::{Arg, ExponentRange, ExprError, LengthMode, Node, Op, OperandSet, Program};
pub use fit::FitConfig;
pub use loss::{LossKind, RegularizerConfig};
