#![allow(dead_code)]

use faigp_core::{Arg, Node, Op, OperandSet, Program};
use proptest::prelude::*;

pub fn library_op() -> impl Strategy<Value = Op> {
    prop::sample::select(Op::LIBRARY.to_vec())
}

pub fn operands(arity: u32) -> impl Strategy<Value = OperandSet> {
    (prop::collection::vec(0..arity, 0..=arity as usize), prop::collection::vec(-3.0..3.0f64, 0..2))
        .prop_filter("non-empty", |(v, c)| !v.is_empty() || !c.is_empty())
        .prop_map(|(v, c)| OperandSet::new(v, c))
}

pub fn leaf(arity: u32) -> impl Strategy<Value = Node> {
    (-3.0..3.0f64, library_op(), operands(arity), -2..=2i32).prop_map(|(c, op, o, e)| Node::leaf(c, op, o, e))
}

/// Arbitrary (not necessarily canonical) programs with up to three levels.
pub fn program(arity: u32) -> impl Strategy<Value = Program> {
    let node = leaf(arity).prop_recursive(3, 24, 3, |inner| {
        let ops = prop::sample::select(vec![Op::SqrtAbs, Op::Cos, Op::Sin, Op::LogAbs, Op::Affine, Op::Sum, Op::Prod]);
        (-3.0..3.0f64, ops, prop::collection::vec(inner, 1..=3), -2..=2i32)
            .prop_map(|(c, op, kids, e)| Node::new(c, op, Arg::Program(Program::new(kids).unwrap()), e))
    });
    prop::collection::vec(node, 1..=3).prop_map(|nodes| Program::new(nodes).unwrap())
}

pub fn point(arity: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, arity)
}

/// Magnitude scale for comparing two evaluations of the same function.
pub fn scale(p: &Program, x: &[f64]) -> f64 {
    fn node_mag(n: &Node, x: &[f64]) -> f64 {
        let inner = match &n.arg {
            Arg::Program(p) => p.nodes().iter().map(|m| node_mag(m, x)).sum::<f64>(),
            Arg::Operands(_) => 0.0,
        };
        n.eval_unchecked(x).abs().max(inner)
    }
    p.nodes().iter().map(|n| node_mag(n, x)).sum::<f64>().max(1.0)
}
