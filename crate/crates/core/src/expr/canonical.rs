//! Merge-union operators and reduction to the equivalence-class representative.
//!
//! The representative of a program is its expanded form: sums are flattened
//! into their parent sum, products into their parent product, mergeable
//! siblings are combined, zero terms are dropped and variable-free nodes are
//! folded into a single constant term.

use std::cmp::Ordering;

use super::{Arg, ExponentRange, ExprError, Node, Op, OperandSet, Program};

/// Sibling context in which two nodes are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMode {
    /// Siblings are added (`sum` parent or program root).
    Additive,
    /// Siblings are multiplied (`prod` parent).
    Multiplicative,
}

/// `u1 ∪̇ u2` (additive) or `u1 ∪̇× u2` (multiplicative).
///
/// Additive: nodes agreeing on operator, argument and exponent merge into one
/// node carrying the summed coefficient. Multiplicative: nodes agreeing on
/// operator and argument merge with multiplied coefficients and added
/// exponents; otherwise both are kept and the product of the coefficients is
/// carried by `u1` while `u2` gets coefficient 1.
pub fn merge_union(u1: &Node, u2: &Node, mode: MergeMode, range: ExponentRange) -> Result<Vec<Node>, ExprError> {
    match mode {
        MergeMode::Additive => {
            if u1.cmp_structure(u2) == Ordering::Equal {
                let mut n = u1.clone();
                n.coeff = u1.coeff + u2.coeff;
                Ok(vec![n])
            } else {
                Ok(vec![u1.clone(), u2.clone()])
            }
        }
        MergeMode::Multiplicative => {
            if u1.op == u2.op && u1.arg == u2.arg {
                let exponent = range.check(u1.exponent as i64 + u2.exponent as i64)?;
                let mut n = u1.clone();
                n.coeff = u1.coeff * u2.coeff;
                n.exponent = exponent;
                Ok(vec![n])
            } else {
                let mut a = u1.clone();
                let mut b = u2.clone();
                a.coeff = u1.coeff * u2.coeff;
                b.coeff = 1.0;
                Ok(vec![a, b])
            }
        }
    }
}

/// An element of a union: a 4-tuple node or a bare operand set.
#[derive(Debug, Clone, PartialEq)]
pub enum MergeElement {
    Node(Node),
    Operands(OperandSet),
}

/// Lifts [`merge_union`] to elements. Whenever one side is a bare operand set
/// both merge operators reduce to plain set union.
pub fn merge_elements(
    a: &MergeElement,
    b: &MergeElement,
    mode: MergeMode,
    range: ExponentRange,
) -> Result<Vec<MergeElement>, ExprError> {
    match (a, b) {
        (MergeElement::Node(u1), MergeElement::Node(u2)) => {
            Ok(merge_union(u1, u2, mode, range)?.into_iter().map(MergeElement::Node).collect())
        }
        (MergeElement::Operands(o1), MergeElement::Operands(o2)) => Ok(vec![MergeElement::Operands(o1.union(o2))]),
        _ => Ok(vec![a.clone(), b.clone()]),
    }
}

impl Program {
    /// Equivalence-class representative with no exponent bound on merges.
    pub fn canonicalize(&self) -> Program {
        self.canonicalize_in(ExponentRange::unbounded())
    }

    /// Equivalence-class representative. Merges whose exponent would leave
    /// `range` are not performed, so in-range input stays in range.
    pub fn canonicalize_in(&self, range: ExponentRange) -> Program {
        let c = Canonicalizer { range };
        let terms = c.terms(self);
        terms.into_program().unwrap_or_else(Program::zero)
    }

    pub fn is_canonical_in(&self, range: ExponentRange) -> bool {
        self.canonicalize_in(range) == *self
    }
}

enum Canon {
    Const(f64),
    Node(Node),
}

/// Additive context: non-constant nodes plus an accumulated constant.
struct Terms {
    constant: f64,
    nodes: Vec<Node>,
}

impl Terms {
    fn into_program(mut self) -> Option<Program> {
        if self.constant != 0.0 {
            self.nodes.push(Node::constant(self.constant));
        }
        if self.nodes.is_empty() {
            None
        } else {
            Some(Program::from_nodes(self.nodes))
        }
    }

    /// `(1, affine, O_k, 1)` terms with disjoint variables collapse into one
    /// operand set; the constant joins it.
    fn as_operands(&self) -> Option<OperandSet> {
        let mut vars: Vec<u32> = Vec::new();
        let mut constant = self.constant;
        for n in &self.nodes {
            if n.coeff != 1.0 || n.op != Op::Affine || n.exponent != 1 {
                return None;
            }
            let o = n.arg.as_operands()?;
            if o.vars().iter().any(|v| vars.contains(v)) {
                return None;
            }
            vars.extend_from_slice(o.vars());
            constant += o.consts().iter().fold(0.0, |a, b| a + b);
        }
        let consts = if constant == 0.0 { None } else { Some(constant) };
        Some(OperandSet::new(vars, consts))
    }
}

/// Multiplicative context: coefficient-free factors plus an accumulated scale.
struct Factors {
    scale: f64,
    nodes: Vec<Node>,
}

struct Canonicalizer {
    range: ExponentRange,
}

impl Canonicalizer {
    fn terms(&self, p: &Program) -> Terms {
        let mut constant = 0.0;
        let mut nodes = Vec::with_capacity(p.nodes().len());
        for n in p.nodes() {
            match self.node(n) {
                Canon::Const(v) => constant += v,
                Canon::Node(m) if m.op == Op::Sum && m.exponent == 1 => {
                    let Arg::Program(children) = m.arg else { unreachable!("canonical sum holds a program") };
                    for mut child in children.into_nodes() {
                        if is_constant_term(&child) {
                            constant += m.coeff * child.coeff;
                        } else {
                            child.coeff *= m.coeff;
                            if child.coeff != 0.0 {
                                nodes.push(child);
                            }
                        }
                    }
                }
                Canon::Node(m) => nodes.push(m),
            }
        }
        nodes.sort_by(Node::cmp_structure);
        let mut merged: Vec<Node> = Vec::with_capacity(nodes.len());
        for n in nodes {
            match merged.last_mut() {
                Some(last) if last.cmp_structure(&n) == Ordering::Equal => last.coeff += n.coeff,
                _ => merged.push(n),
            }
        }
        merged.retain(|n| n.coeff != 0.0);
        merged.sort();
        if constant == 0.0 {
            constant = 0.0;
        }
        Terms { constant, nodes: merged }
    }

    fn factors(&self, p: &Program) -> Factors {
        let mut scale = 1.0;
        let mut nodes = Vec::with_capacity(p.nodes().len());
        for n in p.nodes() {
            match self.node(n) {
                Canon::Const(v) => scale *= v,
                Canon::Node(mut m) => {
                    scale *= m.coeff;
                    m.coeff = 1.0;
                    nodes.push(m);
                }
            }
        }
        loop {
            // prod^1 inside a product flattens; merging powers can create new ones
            let mut flattened = Vec::with_capacity(nodes.len());
            for m in nodes {
                if m.op == Op::Prod && m.exponent == 1 {
                    let Arg::Program(children) = m.arg else { unreachable!("canonical prod holds a program") };
                    flattened.extend(children.into_nodes());
                } else {
                    flattened.push(m);
                }
            }
            flattened.sort_by(|a, b| a.op.cmp(&b.op).then_with(|| a.arg.cmp(&b.arg)));
            let mut out: Vec<Node> = Vec::with_capacity(flattened.len());
            let mut i = 0;
            while i < flattened.len() {
                let mut j = i + 1;
                while j < flattened.len() && flattened[j].op == flattened[i].op && flattened[j].arg == flattened[i].arg {
                    j += 1;
                }
                out.extend(self.merge_powers(&flattened[i..j]));
                i = j;
            }
            out.sort();
            if !out.iter().any(|m| m.op == Op::Prod && m.exponent == 1) {
                return Factors { scale, nodes: out };
            }
            nodes = out;
        }
    }

    /// Combines factors sharing operator and argument by adding exponents.
    /// An out-of-range total is split into as few in-range factors as
    /// possible, which keeps the result a function of the total alone.
    fn merge_powers(&self, group: &[Node]) -> Vec<Node> {
        if group.len() == 1 {
            return group.to_vec();
        }
        let total: i64 = group.iter().map(|n| n.exponent as i64).sum();
        if total == 0 {
            return Vec::new();
        }
        let with_exp = |e: i64| {
            let mut n = group[0].clone();
            n.exponent = e as i32;
            n
        };
        if self.range.contains(total) {
            return vec![with_exp(total)];
        }
        let step = if total > 0 { self.range.max as i64 } else { self.range.min as i64 };
        if step == 0 || step.signum() != total.signum() {
            return group.to_vec();
        }
        let mut out = Vec::new();
        let mut rest = total;
        while rest.abs() > step.abs() {
            out.push(with_exp(step));
            rest -= step;
        }
        out.push(with_exp(rest));
        out
    }

    fn node(&self, n: &Node) -> Canon {
        if n.exponent == 0 {
            return Canon::Const(n.coeff);
        }
        if n.coeff == 0.0 {
            return Canon::Const(0.0);
        }
        match &n.arg {
            Arg::Operands(o) => {
                let op = if n.op.is_library() { n.op } else { Op::Affine };
                let operands = normalize_operands(o);
                let m = Node::leaf(n.coeff, op, operands, n.exponent);
                fold_if_constant(m)
            }
            Arg::Program(sub) => {
                let op = if n.op == Op::Affine { Op::Sum } else { n.op };
                match op {
                    Op::Prod => self.prod_node(n.coeff, sub, n.exponent),
                    Op::Sum => self.sum_node(n.coeff, sub, n.exponent),
                    _ => self.composed_node(n.coeff, op, sub, n.exponent),
                }
            }
        }
    }

    fn prod_node(&self, coeff: f64, sub: &Program, exponent: i32) -> Canon {
        let Factors { scale, mut nodes } = self.factors(sub);
        let coeff = coeff * pow(scale, exponent);
        if nodes.is_empty() {
            return Canon::Const(coeff);
        }
        if coeff == 0.0 {
            return Canon::Const(0.0);
        }
        if nodes.len() == 1 {
            if let Some(folded) = self.fold_single(coeff, &nodes[0], exponent) {
                return Canon::Node(folded);
            }
        }
        nodes.sort();
        Canon::Node(Node::new(coeff, Op::Prod, Arg::Program(Program::from_nodes(nodes)), exponent))
    }

    fn sum_node(&self, coeff: f64, sub: &Program, exponent: i32) -> Canon {
        let terms = self.terms(sub);
        if terms.nodes.is_empty() {
            let v = coeff * pow(terms.constant, exponent);
            return finite_or(v, || Node::new(coeff, Op::Sum, Arg::Program(Program::single(Node::constant(terms.constant))), exponent));
        }
        if terms.nodes.len() == 1 && terms.constant == 0.0 {
            if let Some(folded) = self.fold_single(coeff, &terms.nodes[0], exponent) {
                return Canon::Node(folded);
            }
        }
        let child = terms.into_program().expect("non-empty terms");
        Canon::Node(Node::new(coeff, Op::Sum, Arg::Program(child), exponent))
    }

    fn composed_node(&self, coeff: f64, op: Op, sub: &Program, exponent: i32) -> Canon {
        let terms = self.terms(sub);
        if terms.nodes.is_empty() {
            let v = coeff * pow(op.apply(terms.constant), exponent);
            return finite_or(v, || Node::leaf(coeff, op, OperandSet::constant(terms.constant), exponent));
        }
        if let Some(operands) = terms.as_operands() {
            return Canon::Node(Node::leaf(coeff, op, operands, exponent));
        }
        let child = terms.into_program().expect("non-empty terms");
        Canon::Node(Node::new(coeff, op, Arg::Program(child), exponent))
    }

    /// `c * (c2 * F(E)^p)^P  =  c * c2^P * F(E)^(p*P)`, if `p*P` is in range.
    fn fold_single(&self, coeff: f64, child: &Node, exponent: i32) -> Option<Node> {
        let e = child.exponent as i64 * exponent as i64;
        if !self.range.contains(e) {
            return None;
        }
        let c = coeff * pow(child.coeff, exponent);
        if !c.is_finite() || c == 0.0 {
            return None;
        }
        let mut n = child.clone();
        n.coeff = c;
        n.exponent = e as i32;
        Some(n)
    }
}

#[inline]
fn pow(v: f64, e: i32) -> f64 {
    if e == 1 {
        v
    } else {
        v.powi(e)
    }
}

fn is_constant_term(n: &Node) -> bool {
    n.op == Op::Affine
        && n.exponent == 1
        && matches!(&n.arg, Arg::Operands(o) if !o.has_variables() && o.consts() == [1.0])
}

/// Sums constant members; a zero sum is dropped when variables are present.
fn normalize_operands(o: &OperandSet) -> OperandSet {
    match o.consts() {
        [] => o.clone(),
        [c] if *c != 0.0 || !o.has_variables() => o.clone(),
        cs => {
            let s = cs.iter().fold(0.0, |a, b| a + b);
            let keep = !(o.has_variables() && s == 0.0);
            OperandSet::new(o.vars().iter().copied(), keep.then_some(s))
        }
    }
}

fn fold_if_constant(m: Node) -> Canon {
    if m.arg.has_variables() {
        return Canon::Node(m);
    }
    if is_constant_term(&m) {
        return Canon::Const(m.coeff);
    }
    let v = m.eval_unchecked(&[]);
    finite_or(v, || m)
}

fn finite_or(v: f64, node: impl FnOnce() -> Node) -> Canon {
    if v.is_finite() {
        Canon::Const(v)
    } else {
        Canon::Node(node())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(c: f64, e: i32) -> Node {
        Node::monomial(c, 0, e)
    }

    fn sin_x(c: f64, e: i32) -> Node {
        Node::leaf(c, Op::Sin, OperandSet::var(0), e)
    }

    #[test]
    fn additive_merge_sums_coefficients() {
        let out = merge_union(&sin_x(2.0, 1), &sin_x(3.0, 1), MergeMode::Additive, ExponentRange::default()).unwrap();
        assert_eq!(out, vec![sin_x(5.0, 1)]);
    }

    #[test]
    fn multiplicative_merge_adds_exponents() {
        let r = ExponentRange::new(-5, 5);
        let out = merge_union(&x(2.0, 1), &x(3.0, 2), MergeMode::Multiplicative, r).unwrap();
        assert_eq!(out, vec![x(6.0, 3)]);
    }

    #[test]
    fn mismatch_keeps_both() {
        let cos_x = Node::leaf(3.0, Op::Cos, OperandSet::var(0), 1);
        let out = merge_union(&sin_x(2.0, 1), &cos_x, MergeMode::Additive, ExponentRange::default()).unwrap();
        assert_eq!(out, vec![sin_x(2.0, 1), cos_x.clone()]);
        let out = merge_union(&sin_x(2.0, 1), &cos_x, MergeMode::Multiplicative, ExponentRange::default()).unwrap();
        assert_eq!(out[0].coeff, 6.0);
        assert_eq!(out[1].coeff, 1.0);
    }

    #[test]
    fn multiplicative_range_violation() {
        let err = merge_union(&x(1.0, 2), &x(1.0, 1), MergeMode::Multiplicative, ExponentRange::default());
        assert!(matches!(err, Err(ExprError::ExponentRange { exponent: 3, .. })));
    }

    #[test]
    fn operand_union_is_plain() {
        let a = MergeElement::Node(sin_x(1.0, 1));
        let b = MergeElement::Operands(OperandSet::var(1));
        let out = merge_elements(&a, &b, MergeMode::Additive, ExponentRange::default()).unwrap();
        assert_eq!(out, vec![a.clone(), b.clone()]);
        let o = merge_elements(
            &MergeElement::Operands(OperandSet::var(0)),
            &b,
            MergeMode::Multiplicative,
            ExponentRange::default(),
        )
        .unwrap();
        assert_eq!(o, vec![MergeElement::Operands(OperandSet::new([0, 1], []))]);
    }

    #[test]
    fn cancelling_terms_reduce_to_class_representative() {
        let p = Program::new(vec![x(1.0, 1), x(1.0, 2), x(-1.0, 1)]).unwrap();
        assert_eq!(p.canonicalize(), Program::single(x(1.0, 2)));
    }

    #[test]
    fn zero_exponent_collapses_to_constant() {
        let p = Program::new(vec![sin_x(3.0, 0), x(1.0, 1), Node::constant(2.0)]).unwrap();
        let c = p.canonicalize();
        assert_eq!(c, Program::new(vec![x(1.0, 1), Node::constant(5.0)]).unwrap());
    }

    #[test]
    fn everything_cancels_to_zero_program() {
        let p = Program::new(vec![x(1.0, 1), x(-1.0, 1)]).unwrap();
        let c = p.canonicalize();
        assert_eq!(c, Program::zero());
        assert_eq!(c.evaluate(&[3.0]).unwrap(), 0.0);
        assert_eq!(c.canonicalize(), c);
    }

    #[test]
    fn nested_sums_flatten_with_scaled_coefficients() {
        let inner = Program::new(vec![x(1.0, 1), sin_x(2.0, 1)]).unwrap();
        let p = Program::new(vec![Node::new(3.0, Op::Sum, Arg::Program(inner), 1), x(1.0, 1)]).unwrap();
        let c = p.canonicalize();
        assert_eq!(c, Program::new(vec![x(4.0, 1), sin_x(6.0, 1)]).unwrap());
    }

    #[test]
    fn product_pulls_coefficients_and_merges_powers() {
        let kids = Program::new(vec![x(2.0, 1), x(3.0, 1), sin_x(0.5, 1)]).unwrap();
        let p = Program::single(Node::new(1.0, Op::Prod, Arg::Program(kids), 1));
        let c = p.canonicalize_in(ExponentRange::default());
        let expected_kids = Program::new(vec![x(1.0, 2), sin_x(1.0, 1)]).unwrap();
        assert_eq!(c, Program::single(Node::new(3.0, Op::Prod, Arg::Program(expected_kids), 1)));
    }

    #[test]
    fn out_of_range_powers_split_deterministically() {
        let kids = Program::new(vec![x(1.0, 2), x(1.0, 2), x(1.0, 1)]).unwrap();
        let p = Program::single(Node::new(1.0, Op::Prod, Arg::Program(kids), 1));
        let r = ExponentRange::default();
        let c = p.canonicalize_in(r);
        assert!(c.exponents_within(r));
        assert_eq!(c.canonicalize_in(r), c);
        let v = c.evaluate(&[1.3]).unwrap();
        assert!((v - 1.3f64.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn single_child_sum_folds_exponent() {
        let kids = Program::single(x(2.0, 1));
        let p = Program::single(Node::new(3.0, Op::Sum, Arg::Program(kids), 2));
        assert_eq!(p.canonicalize_in(ExponentRange::default()), Program::single(x(12.0, 2)));
    }

    #[test]
    fn trivial_composition_argument_becomes_operand_set() {
        let p = Program::single(Node::new(1.0, Op::Sin, Arg::Program(Program::single(x(1.0, 1))), 1));
        assert_eq!(p.canonicalize(), Program::single(sin_x(1.0, 1)));
    }

    #[test]
    fn operand_constants_are_summed() {
        let p = Program::single(Node::leaf(1.0, Op::Sin, OperandSet::new([0], [0.25, 0.5]), 1));
        let c = p.canonicalize();
        assert_eq!(c.nodes()[0].arg.as_operands().unwrap().consts(), &[0.75]);
    }

    #[test]
    fn variable_free_nodes_fold() {
        let p = Program::new(vec![Node::leaf(2.0, Op::Cos, OperandSet::constant(0.0), 1), x(1.0, 1)]).unwrap();
        assert_eq!(p.canonicalize(), Program::new(vec![x(1.0, 1), Node::constant(2.0)]).unwrap());
    }

    #[test]
    fn pole_constants_stay_symbolic() {
        let p = Program::new(vec![Node::leaf(1.0, Op::Affine, OperandSet::constant(0.0), -1), x(1.0, 1)]).unwrap();
        let c = p.canonicalize();
        assert_eq!(c.canonicalize(), c);
        assert!(!c.evaluate(&[1.0]).unwrap().is_finite());
    }
}
