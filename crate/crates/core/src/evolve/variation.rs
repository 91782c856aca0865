use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EngineConfig, OperatorPrior};
use crate::expr::{Arg, LengthMode, Node, Op, OperandSet, Program};
use crate::fit::FitConfig;

/// Chance that a generated node nests a program instead of an operand set.
const NEST_PROB: f64 = 0.35;
const VAR_PROB: f64 = 0.5;
const CONST_PROB: f64 = 0.3;
const LITERAL_ONE_PROB: f64 = 0.1;
const COEFF_RANGE: f64 = 2.0;
const CROSSOVER_ATTEMPTS: usize = 16;
/// Chance that a periodic leaf gets a scaled argument, op(b*affine(O)), when
/// the prior allows affine nodes.
const SCALED_ARG_PROB: f64 = 0.5;
/// Inner scales are log-uniform in [1/SCALE_SPAN, SCALE_SPAN].
const SCALE_SPAN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationKind {
    Crossover,
    Point,
    Subtree,
    Hoist,
    Replication,
}

impl VariationKind {
    pub const ALL: [VariationKind; 5] = [
        VariationKind::Crossover,
        VariationKind::Point,
        VariationKind::Subtree,
        VariationKind::Hoist,
        VariationKind::Replication,
    ];
}

/// Address of a node: indices through nested program arguments.
type NodePath = Vec<usize>;

fn collect_paths(p: &Program, prefix: &mut NodePath, out: &mut Vec<NodePath>) {
    for (i, n) in p.nodes().iter().enumerate() {
        prefix.push(i);
        out.push(prefix.clone());
        if let Arg::Program(child) = &n.arg {
            collect_paths(child, prefix, out);
        }
        prefix.pop();
    }
}

fn node_paths(p: &Program) -> Vec<NodePath> {
    let mut out = Vec::new();
    collect_paths(p, &mut Vec::new(), &mut out);
    out
}

fn node_at<'a>(p: &'a Program, path: &[usize]) -> &'a Node {
    let n = &p.nodes()[path[0]];
    if path.len() == 1 {
        n
    } else {
        node_at(n.arg.as_program().expect("path runs through programs"), &path[1..])
    }
}

/// The sibling list holding the node at `path`.
fn siblings_mut<'a>(p: &'a mut Program, path: &[usize]) -> &'a mut Vec<Node> {
    if path.len() == 1 {
        return p.nodes_mut();
    }
    match &mut p.nodes_mut()[path[0]].arg {
        Arg::Program(child) => siblings_mut(child, &path[1..]),
        Arg::Operands(_) => unreachable!("path runs through programs"),
    }
}

fn node_at_mut<'a>(p: &'a mut Program, path: &[usize]) -> &'a mut Node {
    let i = *path.last().expect("non-empty path");
    &mut siblings_mut(p, path)[i]
}

/// Variation operators bound to one prior and configuration. `arity` is the
/// number of input variables available to generated operands.
#[derive(Debug, Clone, Copy)]
pub struct Variation<'a> {
    pub prior: &'a OperatorPrior,
    pub engine: &'a EngineConfig,
    pub fit: &'a FitConfig,
    pub arity: usize,
}

impl<'a> Variation<'a> {
    pub fn new(prior: &'a OperatorPrior, engine: &'a EngineConfig, fit: &'a FitConfig, arity: usize) -> Self {
        Variation { prior, engine, fit, arity: arity.max(1) }
    }

    fn finish(&self, mut p: Program) -> Program {
        p.resort();
        p.canonicalize_in(self.engine.exponents)
    }

    fn coefficient(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(-COEFF_RANGE..=COEFF_RANGE)
    }

    fn exponent(&self, rng: &mut impl Rng) -> i32 {
        let choices = self.engine.nonzero_exponents();
        if choices.contains(&1) && rng.random_bool(LITERAL_ONE_PROB) {
            return 1;
        }
        *choices.choose(rng).expect("validated interval has a non-zero exponent")
    }

    fn operands(&self, rng: &mut impl Rng) -> OperandSet {
        loop {
            let mut o = OperandSet::default();
            for v in 0..self.arity as u32 {
                if rng.random_bool(VAR_PROB) {
                    o.insert_var(v);
                }
            }
            if rng.random_bool(CONST_PROB) {
                o.insert_const(self.coefficient(rng));
            }
            if !o.is_empty() {
                return o;
            }
        }
    }

    fn leaf(&self, rng: &mut impl Rng) -> Node {
        let coeff = self.coefficient(rng);
        let exponent = self.exponent(rng);
        let op = self.prior.sample(rng);
        if matches!(op, Op::Sin | Op::Cos) && self.prior.prob(Op::Affine) > 0.0 && rng.random_bool(SCALED_ARG_PROB) {
            let inner = Node::leaf(self.scale(rng), Op::Affine, self.operands(rng), 1);
            return Node::new(coeff, op, Arg::Program(Program::from_nodes(vec![inner])), exponent);
        }
        Node::leaf(coeff, op, self.operands(rng), exponent)
    }

    fn scale(&self, rng: &mut impl Rng) -> f64 {
        let ln = SCALE_SPAN.ln();
        let b = rng.random_range(-ln..=ln).exp();
        if rng.random_bool(0.5) { -b } else { b }
    }

    fn random_node(&self, depth: usize, rng: &mut impl Rng) -> Node {
        if depth <= 1 || !rng.random_bool(NEST_PROB) {
            return self.leaf(rng);
        }
        let coeff = self.coefficient(rng);
        let exponent = self.exponent(rng);
        match rng.random_range(0..3) {
            0 => Node::new(coeff, Op::Sum, Arg::Program(self.grow(depth - 1, rng)), exponent),
            1 => {
                let factors = vec![self.random_node(depth - 1, rng), self.random_node(depth - 1, rng)];
                Node::new(coeff, Op::Prod, Arg::Program(Program::from_nodes(factors)), exponent)
            }
            _ => {
                let op = self.prior.sample(rng);
                Node::new(coeff, op, Arg::Program(self.grow(depth - 1, rng)), exponent)
            }
        }
    }

    fn grow(&self, depth: usize, rng: &mut impl Rng) -> Program {
        let k = rng.random_range(1..=3);
        Program::from_nodes((0..k).map(|_| self.random_node(depth, rng)).collect())
    }

    /// A fresh canonical program: operators drawn from the prior, nesting up
    /// to the initial depth.
    pub fn generate(&self, rng: &mut impl Rng) -> Program {
        let p = self.grow(self.engine.init_depth, rng);
        self.finish(p)
    }

    /// Redraws one element of one uniformly chosen node; the element is
    /// picked by the configured (C, O, F, P) weights.
    pub fn point_mutation(&self, p: &Program, rng: &mut impl Rng) -> Program {
        let paths = node_paths(p);
        let path = paths.choose(rng).expect("programs are non-empty");
        let element = WeightedIndex::new(self.engine.element_weights.as_array()).expect("validated weights");
        let mut child = p.clone();
        match element.sample(rng) {
            0 => {
                let n = node_at_mut(&mut child, path);
                n.coeff += self.fit.perturbation(rng);
            }
            1 => self.mutate_argument(&mut child, path, rng),
            2 => {
                let replacement = {
                    let n = node_at(p, path);
                    match n.op {
                        Op::Sum => Op::Prod,
                        Op::Prod => Op::Sum,
                        _ => self.prior.sample(rng),
                    }
                };
                node_at_mut(&mut child, path).op = replacement;
            }
            _ => {
                let e = self.exponent(rng);
                node_at_mut(&mut child, path).exponent = e;
            }
        }
        self.finish(child)
    }

    /// A constant term's operator tag is representational; before its argument
    /// can gain variables it takes an operator drawn from the prior.
    fn revive(&self, n: &mut Node, rng: &mut impl Rng) {
        if n.op.is_library() && n.is_constant() {
            n.op = self.prior.sample(rng);
        }
    }

    fn mutate_argument(&self, child: &mut Program, path: &[usize], rng: &mut impl Rng) {
        let n = node_at_mut(child, path);
        self.revive(n, rng);
        match &mut n.arg {
            Arg::Operands(o) => {
                let action = if o.len() > 1 { rng.random_range(0..3) } else { 0 };
                if action != 0 {
                    o.remove_member(rng.random_range(0..o.len()));
                }
                if action != 1 {
                    // add (or swap in) a member not already present
                    for _ in 0..8 {
                        let fresh = if rng.random_bool(0.5) {
                            o.insert_var(rng.random_range(0..self.arity as u32))
                        } else {
                            o.insert_const(rng.random_range(-COEFF_RANGE..=COEFF_RANGE))
                        };
                        if fresh {
                            break;
                        }
                    }
                }
            }
            Arg::Program(inner) => {
                let nodes = inner.nodes_mut();
                let action = if nodes.len() > 1 { rng.random_range(0..3) } else { 0 };
                if action != 0 {
                    nodes.remove(rng.random_range(0..nodes.len()));
                }
                if action != 1 {
                    nodes.push(self.leaf(rng));
                }
            }
        }
    }

    /// Splices a segment of `p2` into `p1`: either a whole node, or a node's
    /// argument. Operand sets and programs are interchangeable as arguments
    /// of library operators; `sum` and `prod` only accept programs.
    pub fn crossover(&self, p1: &Program, p2: &Program, rng: &mut impl Rng) -> Program {
        if p1 == p2 {
            return p1.clone();
        }
        let paths1 = node_paths(p1);
        let paths2 = node_paths(p2);
        for _ in 0..CROSSOVER_ATTEMPTS {
            let a = paths1.choose(rng).expect("non-empty");
            let b = paths2.choose(rng).expect("non-empty");
            let donor = node_at(p2, b);
            let mut child = p1.clone();
            if rng.random_bool(0.5) {
                *node_at_mut(&mut child, a) = donor.clone();
            } else {
                let target = node_at_mut(&mut child, a);
                if !target.op.is_library() && matches!(donor.arg, Arg::Operands(_)) {
                    continue;
                }
                self.revive(target, rng);
                target.arg = donor.arg.clone();
            }
            let child = self.finish(child);
            if child.depth() <= self.engine.max_depth {
                return child;
            }
        }
        p1.clone()
    }

    /// Crossover with a freshly generated donor.
    pub fn subtree_mutation(&self, p: &Program, rng: &mut impl Rng) -> Program {
        let donor = self.generate(rng);
        self.crossover(p, &donor, rng)
    }

    /// Replaces a node that nests a program by that program's nodes, or by
    /// one node found inside it. Returns `p` when nothing is nested or the
    /// result would be longer.
    pub fn hoist_mutation(&self, p: &Program, rng: &mut impl Rng) -> Program {
        let nested: Vec<NodePath> =
            node_paths(p).into_iter().filter(|path| node_at(p, path).arg.as_program().is_some()).collect();
        let Some(path) = nested.choose(rng) else {
            return p.clone();
        };
        let inner = node_at(p, path).arg.as_program().expect("filtered on programs");
        let mut child = p.clone();
        let i = *path.last().expect("non-empty path");
        if rng.random_bool(0.5) {
            let siblings = siblings_mut(&mut child, path);
            siblings.remove(i);
            siblings.extend(inner.nodes().iter().cloned());
        } else {
            let inner_paths = node_paths(inner);
            let sub = node_at(inner, inner_paths.choose(rng).expect("non-empty")).clone();
            *node_at_mut(&mut child, path) = sub;
        }
        let child = self.finish(child);
        if child.length(LengthMode::ExponentWeighted) > p.length(LengthMode::ExponentWeighted) {
            p.clone()
        } else {
            child
        }
    }

    /// Applies `kind`; `mate` is used by crossover only.
    pub fn apply(&self, kind: VariationKind, p: &Program, mate: &Program, rng: &mut impl Rng) -> Program {
        match kind {
            VariationKind::Crossover => self.crossover(p, mate, rng),
            VariationKind::Point => self.point_mutation(p, rng),
            VariationKind::Subtree => self.subtree_mutation(p, rng),
            VariationKind::Hoist => self.hoist_mutation(p, rng),
            VariationKind::Replication => p.clone(),
        }
    }
}
