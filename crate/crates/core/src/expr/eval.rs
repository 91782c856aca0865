use super::{Arg, ExprError, Node, Op, Program};

impl Node {
    /// Evaluates without an arity check. Exponent 0 yields the coefficient
    /// even when the operator value is non-finite.
    #[inline]
    pub fn eval_unchecked(&self, point: &[f64]) -> f64 {
        if self.exponent == 0 {
            return self.coeff;
        }
        let inner = match (&self.arg, self.op) {
            (Arg::Operands(o), _) => o.aggregate(point),
            (Arg::Program(p), Op::Prod) => p.nodes().iter().map(|n| n.eval_unchecked(point)).product(),
            (Arg::Program(p), _) => p.eval_unchecked(point),
        };
        let base = self.op.apply(inner);
        if self.exponent == 1 {
            self.coeff * base
        } else {
            self.coeff * base.powi(self.exponent)
        }
    }
}

impl Program {
    /// Evaluates at one point. Non-finite values (poles of negative exponents,
    /// overflow) are returned as-is for the caller to penalize.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, ExprError> {
        let needed = self.arity();
        if point.len() < needed {
            return Err(ExprError::Arity { needed, got: point.len() });
        }
        Ok(self.eval_unchecked(point))
    }

    #[inline]
    pub fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.nodes().iter().map(|n| n.eval_unchecked(point)).sum()
    }

    /// Evaluates at every row of `points`, checking arity once.
    pub fn evaluate_all<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<Vec<f64>, ExprError> {
        let needed = self.arity();
        if let Some(bad) = points.iter().find(|p| p.as_ref().len() < needed) {
            return Err(ExprError::Arity { needed, got: bad.as_ref().len() });
        }
        Ok(points.iter().map(|p| self.eval_unchecked(p.as_ref())).collect())
    }
}
