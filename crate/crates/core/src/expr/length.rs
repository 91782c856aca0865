use serde::{Deserialize, Serialize};

use super::{Arg, Node, Program};

/// Complexity measure used by the length regularizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMode {
    /// `3 + |O|` per node; a nested program counts in place of `|O|`.
    Flat,
    /// `1 + (1 + len(E)) * |P|` per node, with `len(O) = |O|`.
    #[default]
    ExponentWeighted,
}

impl Program {
    pub fn length(&self, mode: LengthMode) -> u64 {
        self.nodes().iter().map(|n| n.length(mode)).sum()
    }
}

impl Node {
    pub fn length(&self, mode: LengthMode) -> u64 {
        let inner = match &self.arg {
            Arg::Operands(o) => o.len() as u64,
            Arg::Program(p) => p.length(mode),
        };
        match mode {
            LengthMode::Flat => 3 + inner,
            LengthMode::ExponentWeighted => 1 + (1 + inner) * self.exponent.unsigned_abs() as u64,
        }
    }
}
