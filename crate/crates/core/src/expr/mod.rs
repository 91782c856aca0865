//! Programs of the function-algebra grammar.
//!
//! A [`Program`] is a set of 4-tuple [`Node`]s `(coefficient, operator,
//! argument, exponent)`. The argument of a node is either an [`OperandSet`]
//! (variables and real constants) or a nested [`Program`], which is how
//! composition, sums and products are expressed.
//!
//! Node value: `coeff * op(aggregate(arg)) ^ exponent`, where the aggregate of
//! an operand set is the sum of its members, the aggregate of a program under
//! `prod` is the product of its node values and otherwise the sum. A program
//! evaluates to the sum of its node values.

mod canonical;
mod eval;
mod length;
mod parse;
mod poly;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{merge_elements, merge_union, MergeElement, MergeMode};
pub use length::LengthMode;
pub use parse::ParseError;
pub use poly::Monomial;

/// Errors raised by expression construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("program must contain at least one node")]
    EmptyProgram,
    #[error("operand set must contain at least one element")]
    EmptyOperands,
    #[error("point has {got} coordinates but the program references x{needed}")]
    Arity { needed: usize, got: usize },
    #[error("exponent {exponent} outside [{min}, {max}]")]
    ExponentRange { exponent: i64, min: i32, max: i32 },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Operator tags. The first five form the unary library; `Sum` and `Prod`
/// aggregate a child program additively or multiplicatively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    SqrtAbs,
    Cos,
    Sin,
    LogAbs,
    Affine,
    Sum,
    Prod,
}

impl Op {
    pub const LIBRARY: [Op; 5] = [Op::SqrtAbs, Op::Cos, Op::Sin, Op::LogAbs, Op::Affine];

    pub fn is_library(self) -> bool {
        self.library_index().is_some()
    }

    /// Position in [`Op::LIBRARY`].
    pub fn library_index(self) -> Option<usize> {
        match self {
            Op::SqrtAbs => Some(0),
            Op::Cos => Some(1),
            Op::Sin => Some(2),
            Op::LogAbs => Some(3),
            Op::Affine => Some(4),
            Op::Sum | Op::Prod => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::SqrtAbs => "sqrt",
            Op::Cos => "cos",
            Op::Sin => "sin",
            Op::LogAbs => "log",
            Op::Affine => "affine",
            Op::Sum => "sum",
            Op::Prod => "prod",
        }
    }

    pub fn from_name(name: &str) -> Option<Op> {
        Some(match name {
            "sqrt" | "sqrt_abs" => Op::SqrtAbs,
            "cos" => Op::Cos,
            "sin" => Op::Sin,
            "log" | "log_abs" => Op::LogAbs,
            "affine" => Op::Affine,
            "sum" => Op::Sum,
            "prod" => Op::Prod,
            _ => return None,
        })
    }

    /// Applies the operator to an already aggregated argument.
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Op::SqrtAbs => v.abs().sqrt(),
            Op::Cos => v.cos(),
            Op::Sin => v.sin(),
            Op::LogAbs => {
                if v == 0.0 {
                    0.0
                } else {
                    v.abs().ln()
                }
            }
            Op::Affine | Op::Sum | Op::Prod => v,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive interval of admissible integer exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentRange {
    pub min: i32,
    pub max: i32,
}

impl ExponentRange {
    pub const fn new(min: i32, max: i32) -> Self {
        ExponentRange { min, max }
    }

    /// No practical bound; used for ground truths and hand-written programs.
    pub const fn unbounded() -> Self {
        ExponentRange { min: i32::MIN, max: i32::MAX }
    }

    pub fn contains(&self, exponent: i64) -> bool {
        exponent >= self.min as i64 && exponent <= self.max as i64
    }

    pub fn check(&self, exponent: i64) -> Result<i32, ExprError> {
        if self.contains(exponent) {
            Ok(exponent as i32)
        } else {
            Err(ExprError::ExponentRange { exponent, min: self.min, max: self.max })
        }
    }
}

impl Default for ExponentRange {
    fn default() -> Self {
        ExponentRange::new(-2, 2)
    }
}

/// Bit-level total order on floats; `-0.0 < 0.0` and NaNs are ordered.
#[inline]
pub(crate) fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

/// A finite set of variables and real constants.
///
/// Variables are zero-based indices (`x1` is index 0). Constants are compared
/// by bit pattern, so near-equal values are distinct members.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OperandSet {
    vars: Vec<u32>,
    consts: Vec<f64>,
}

impl OperandSet {
    pub fn new(vars: impl IntoIterator<Item = u32>, consts: impl IntoIterator<Item = f64>) -> Self {
        let mut vars: Vec<u32> = vars.into_iter().collect();
        vars.sort_unstable();
        vars.dedup();
        let mut consts: Vec<f64> = consts.into_iter().collect();
        consts.sort_by(|a, b| cmp_f64(*a, *b));
        consts.dedup_by(|a, b| a.to_bits() == b.to_bits());
        OperandSet { vars, consts }
    }

    pub fn var(index: u32) -> Self {
        OperandSet { vars: vec![index], consts: Vec::new() }
    }

    pub fn constant(value: f64) -> Self {
        OperandSet { vars: Vec::new(), consts: vec![value] }
    }

    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    pub fn consts(&self) -> &[f64] {
        &self.consts
    }

    pub fn len(&self) -> usize {
        self.vars.len() + self.consts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.consts.is_empty()
    }

    pub fn has_variables(&self) -> bool {
        !self.vars.is_empty()
    }

    pub fn contains_var(&self, index: u32) -> bool {
        self.vars.binary_search(&index).is_ok()
    }

    pub fn insert_var(&mut self, index: u32) -> bool {
        match self.vars.binary_search(&index) {
            Ok(_) => false,
            Err(pos) => {
                self.vars.insert(pos, index);
                true
            }
        }
    }

    pub fn insert_const(&mut self, value: f64) -> bool {
        match self.consts.binary_search_by(|c| cmp_f64(*c, value)) {
            Ok(_) => false,
            Err(pos) => {
                self.consts.insert(pos, value);
                true
            }
        }
    }

    /// Removes the `i`-th member, counting variables first then constants.
    pub fn remove_member(&mut self, i: usize) {
        if i < self.vars.len() {
            self.vars.remove(i);
        } else {
            self.consts.remove(i - self.vars.len());
        }
    }

    /// Plain set union.
    pub fn union(&self, other: &OperandSet) -> OperandSet {
        OperandSet::new(
            self.vars.iter().chain(&other.vars).copied(),
            self.consts.iter().chain(&other.consts).copied(),
        )
    }

    /// `|self ∩ other|` with bitwise constant equality.
    pub fn intersection_len(&self, other: &OperandSet) -> usize {
        let shared_vars = self.vars.iter().filter(|v| other.contains_var(**v)).count();
        let shared_consts = self
            .consts
            .iter()
            .filter(|c| other.consts.iter().any(|o| o.to_bits() == c.to_bits()))
            .count();
        shared_vars + shared_consts
    }

    pub fn max_var(&self) -> Option<u32> {
        self.vars.last().copied()
    }

    #[inline]
    pub fn aggregate(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &v in &self.vars {
            acc += point[v as usize];
        }
        for &c in &self.consts {
            acc += c;
        }
        acc
    }
}

impl PartialEq for OperandSet {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OperandSet {}

impl PartialOrd for OperandSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OperandSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.vars.cmp(&other.vars).then_with(|| {
            self.consts
                .iter()
                .zip(&other.consts)
                .map(|(a, b)| cmp_f64(*a, *b))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or_else(|| self.consts.len().cmp(&other.consts.len()))
        })
    }
}

impl Hash for OperandSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.vars.hash(state);
        for c in &self.consts {
            c.to_bits().hash(state);
        }
    }
}

/// What a node's operator acts on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arg {
    Operands(OperandSet),
    Program(Program),
}

impl Arg {
    pub fn as_program(&self) -> Option<&Program> {
        match self {
            Arg::Program(p) => Some(p),
            Arg::Operands(_) => None,
        }
    }

    pub fn as_operands(&self) -> Option<&OperandSet> {
        match self {
            Arg::Operands(o) => Some(o),
            Arg::Program(_) => None,
        }
    }

    pub fn has_variables(&self) -> bool {
        match self {
            Arg::Operands(o) => o.has_variables(),
            Arg::Program(p) => p.nodes.iter().any(|n| n.arg.has_variables()),
        }
    }
}

/// The grammar's 4-tuple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub coeff: f64,
    pub op: Op,
    pub arg: Arg,
    pub exponent: i32,
}

impl Node {
    pub fn new(coeff: f64, op: Op, arg: Arg, exponent: i32) -> Self {
        Node { coeff, op, arg, exponent }
    }

    pub fn leaf(coeff: f64, op: Op, operands: OperandSet, exponent: i32) -> Self {
        Node::new(coeff, op, Arg::Operands(operands), exponent)
    }

    /// `c * x_index ^ exponent`.
    pub fn monomial(coeff: f64, index: u32, exponent: i32) -> Self {
        Node::leaf(coeff, Op::Affine, OperandSet::var(index), exponent)
    }

    /// The canonical representation of a constant term.
    pub fn constant(value: f64) -> Self {
        Node::leaf(value, Op::Affine, OperandSet::constant(1.0), 1)
    }

    /// True when the node's value does not depend on any variable.
    pub fn is_constant(&self) -> bool {
        self.exponent == 0 || !self.arg.has_variables()
    }

    /// Structural order ignoring the coefficient: op, argument, exponent.
    pub fn cmp_structure(&self, other: &Node) -> Ordering {
        self.op
            .cmp(&other.op)
            .then_with(|| self.arg.cmp(&other.arg))
            .then_with(|| self.exponent.cmp(&other.exponent))
    }

    /// Nodes reachable from this one, itself included.
    pub fn node_count(&self) -> usize {
        1 + self.arg.as_program().map_or(0, Program::node_count)
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_structure(other).then_with(|| cmp_f64(self.coeff, other.coeff))
    }
}

impl Hash for Node {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coeff.to_bits().hash(state);
        self.op.hash(state);
        self.arg.hash(state);
        self.exponent.hash(state);
    }
}

/// A non-empty set of nodes, kept sorted in canonical order.
///
/// Equality is multiset equality of the node list; for canonical programs
/// this coincides with set equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct Program {
    nodes: Vec<Node>,
}

impl TryFrom<Vec<Node>> for Program {
    type Error = ExprError;

    fn try_from(nodes: Vec<Node>) -> Result<Self, Self::Error> {
        Program::new(nodes)
    }
}

impl From<Program> for Vec<Node> {
    fn from(p: Program) -> Self {
        p.nodes
    }
}

impl Program {
    pub fn new(mut nodes: Vec<Node>) -> Result<Self, ExprError> {
        if nodes.is_empty() {
            return Err(ExprError::EmptyProgram);
        }
        nodes.sort();
        Ok(Program { nodes })
    }

    /// Caller guarantees `nodes` is non-empty.
    pub(crate) fn from_nodes(mut nodes: Vec<Node>) -> Self {
        debug_assert!(!nodes.is_empty());
        nodes.sort();
        Program { nodes }
    }

    pub fn single(node: Node) -> Self {
        Program { nodes: vec![node] }
    }

    /// The program that evaluates to zero everywhere.
    pub fn zero() -> Self {
        Program::single(Node::leaf(1.0, Op::Affine, OperandSet::constant(0.0), 1))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }

    /// Mutable access for in-place edits; callers re-canonicalize afterwards.
    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<Node> {
        &mut self.nodes
    }

    /// Total number of nodes at every nesting level.
    pub fn node_count(&self) -> usize {
        self.nodes.iter().map(Node::node_count).sum()
    }

    /// Nesting depth; a program of leaf nodes has depth 1.
    pub fn depth(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| 1 + n.arg.as_program().map_or(0, Program::depth))
            .max()
            .unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<u32> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.arg {
                Arg::Operands(o) => o.max_var(),
                Arg::Program(p) => p.max_var(),
            })
            .max()
    }

    /// Number of coordinates a point needs to evaluate this program.
    pub fn arity(&self) -> usize {
        self.max_var().map_or(0, |v| v as usize + 1)
    }

    /// True if every exponent at every level lies in `range`.
    pub fn exponents_within(&self, range: ExponentRange) -> bool {
        self.nodes.iter().all(|n| {
            range.contains(n.exponent as i64)
                && n.arg.as_program().is_none_or(|p| p.exponents_within(range))
        })
    }

    /// Checks the structural grammar rules: non-empty programs and operand
    /// sets at every level, `sum`/`prod` acting on programs only, exponents in
    /// range.
    pub fn validate(&self, range: ExponentRange) -> Result<(), ExprError> {
        for n in &self.nodes {
            range.check(n.exponent as i64)?;
            match &n.arg {
                Arg::Operands(o) => {
                    if o.is_empty() {
                        return Err(ExprError::EmptyOperands);
                    }
                }
                Arg::Program(p) => {
                    if p.nodes.is_empty() {
                        return Err(ExprError::EmptyProgram);
                    }
                    p.validate(range)?;
                }
            }
        }
        if self.nodes.is_empty() {
            return Err(ExprError::EmptyProgram);
        }
        Ok(())
    }

    /// Free coefficients in pre-order. Nodes directly under a `prod` are
    /// skipped: their coefficients fold into the parent's.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::new();
        collect_coefficients(self, false, &mut out);
        out
    }

    /// Inverse of [`Program::coefficients`]; `values` must have matching length.
    pub fn with_coefficients(&self, values: &[f64]) -> Program {
        let mut p = self.clone();
        let mut it = values.iter().copied();
        assign_coefficients(&mut p, false, &mut it);
        assert!(it.next().is_none(), "too many coefficients supplied");
        p.resort();
        p
    }

    pub(crate) fn resort(&mut self) {
        for n in &mut self.nodes {
            if let Arg::Program(child) = &mut n.arg {
                child.resort();
            }
        }
        self.nodes.sort();
    }
}

fn collect_coefficients(p: &Program, under_prod: bool, out: &mut Vec<f64>) {
    for n in &p.nodes {
        if !under_prod {
            out.push(n.coeff);
        }
        if let Arg::Program(child) = &n.arg {
            collect_coefficients(child, n.op == Op::Prod, out);
        }
    }
}

fn assign_coefficients(p: &mut Program, under_prod: bool, it: &mut impl Iterator<Item = f64>) {
    for n in &mut p.nodes {
        if !under_prod {
            n.coeff = it.next().expect("too few coefficients supplied");
        }
        let is_prod = n.op == Op::Prod;
        if let Arg::Program(child) = &mut n.arg {
            assign_coefficients(child, is_prod, it);
        }
    }
}
