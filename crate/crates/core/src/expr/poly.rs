//! Exact construction of polynomials as programs.
//!
//! Every monomial `c * x1^a1 * ... * xd^ad` becomes a `prod` of affine
//! factors, with powers above the interval bound split across repeated
//! factors, so the construction stays inside any interval containing 1.

use super::{Arg, ExponentRange, ExprError, Node, Op, Program};

/// One monomial: coefficient and per-variable powers (`powers[i]` is the
/// power of `x{i+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Program {
    /// The polynomial `sum(terms)` as a canonical program whose exponents lie
    /// in `range`. Fails when `range` does not contain 1.
    pub fn polynomial(terms: &[Monomial], range: ExponentRange) -> Result<Program, ExprError> {
        let step = range.check(1).map(|_| range.max.max(1))?;
        let mut nodes = Vec::new();
        for t in terms.iter().filter(|t| t.coeff != 0.0) {
            let mut factors = Vec::new();
            for (i, &power) in t.powers.iter().enumerate() {
                let mut left = power as i32;
                while left > 0 {
                    let e = left.min(step);
                    factors.push(Node::monomial(1.0, i as u32, e));
                    left -= e;
                }
            }
            nodes.push(match factors.len() {
                0 => Node::constant(t.coeff),
                1 => {
                    let mut n = factors.pop().expect("one factor");
                    n.coeff = t.coeff;
                    n
                }
                _ => Node::new(t.coeff, Op::Prod, Arg::Program(Program::from_nodes(factors)), 1),
            });
        }
        if nodes.is_empty() {
            return Ok(Program::zero());
        }
        Ok(Program::from_nodes(nodes).canonicalize_in(range))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_in_narrow_interval() {
        let terms = [
            Monomial { coeff: 2.0, powers: vec![3] },
            Monomial { coeff: -1.0, powers: vec![1] },
            Monomial { coeff: 4.0, powers: vec![0] },
        ];
        let p = Program::polynomial(&terms, ExponentRange::new(-2, 2)).unwrap();
        assert!(p.exponents_within(ExponentRange::new(-2, 2)));
        for x in [-1.5, 0.0, 0.7, 3.0] {
            assert_eq!(p.eval_unchecked(&[x]), 2.0 * x * x * x - x + 4.0);
        }
    }

    #[test]
    fn interval_without_one_rejected() {
        let terms = [Monomial { coeff: 1.0, powers: vec![1] }];
        assert!(Program::polynomial(&terms, ExponentRange::new(-2, -1)).is_err());
    }
}
