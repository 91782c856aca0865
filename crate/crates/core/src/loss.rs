//! Loss functions, goodness-of-fit metrics and the regularized fitness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{LengthMode, Program};

/// Stand-in for non-finite predictions.
pub const NON_FINITE_SENTINEL: f64 = 1e10;

const CHI2_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LossError {
    #[error("target has {y} values but prediction has {yhat}")]
    LengthMismatch { y: usize, yhat: usize },
    #[error("at least two points are required, got {0}")]
    TooFewPoints(usize),
    #[error("target values are constant; R² is undefined")]
    ConstantTarget,
    #[error("unknown loss '{0}' (expected one of mae, mse, rmse, pearson, spearman, chi2)")]
    UnknownLoss(String),
    #[error("length limit {0} is below the minimum program length 4")]
    LengthLimit(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mae,
    Mse,
    Rmse,
    Pearson,
    Spearman,
    #[default]
    Chi2,
}

impl LossKind {
    pub const ALL: [LossKind; 6] =
        [LossKind::Mae, LossKind::Mse, LossKind::Rmse, LossKind::Pearson, LossKind::Spearman, LossKind::Chi2];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mae => "mae",
            LossKind::Mse => "mse",
            LossKind::Rmse => "rmse",
            LossKind::Pearson => "pearson",
            LossKind::Spearman => "spearman",
            LossKind::Chi2 => "chi2",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LossError::UnknownLoss(s.to_string()))
    }
}

fn check(y: &[f64], yhat: &[f64]) -> Result<(), LossError> {
    if y.len() != yhat.len() {
        return Err(LossError::LengthMismatch { y: y.len(), yhat: yhat.len() });
    }
    if y.len() < 2 {
        return Err(LossError::TooFewPoints(y.len()));
    }
    Ok(())
}

#[inline]
pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        NON_FINITE_SENTINEL
    }
}

/// Loss of `yhat` against `y`; non-finite predictions are replaced by
/// [`NON_FINITE_SENTINEL`] first.
pub fn compute_loss(kind: LossKind, y: &[f64], yhat: &[f64]) -> Result<f64, LossError> {
    check(y, yhat)?;
    Ok(loss_unchecked(kind, y, yhat))
}

pub(crate) fn loss_unchecked(kind: LossKind, y: &[f64], yhat: &[f64]) -> f64 {
    let n = y.len() as f64;
    let residuals = || y.iter().zip(yhat).map(|(&a, &b)| a - sanitize(b));
    let value = match kind {
        LossKind::Mae => residuals().map(f64::abs).sum::<f64>() / n,
        LossKind::Mse => residuals().map(|r| r * r).sum::<f64>() / n,
        LossKind::Rmse => (residuals().map(|r| r * r).sum::<f64>() / n).sqrt(),
        LossKind::Pearson => {
            let clean: Vec<f64> = yhat.iter().map(|&v| sanitize(v)).collect();
            1.0 - pearson(y, &clean).map_or(0.0, f64::abs)
        }
        LossKind::Spearman => 1.0 - spearman_rho(y, yhat).abs(),
        LossKind::Chi2 => y
            .iter()
            .zip(yhat)
            .map(|(&a, &b)| {
                let b = sanitize(b);
                (a - b) * (a - b) / (b.abs() + CHI2_EPS)
            })
            .sum(),
    };
    if value.is_nan() {
        f64::INFINITY
    } else {
        value.max(0.0)
    }
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 || !(saa * sbb).is_finite() {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman_rho(y: &[f64], yhat: &[f64]) -> f64 {
    let clean: Vec<f64> = yhat.iter().map(|&v| sanitize(v)).collect();
    pearson(&average_ranks(y), &average_ranks(&clean)).unwrap_or(0.0)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64, LossError> {
    check(y, yhat)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(LossError::ConstantTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, &b)| (a - sanitize(b)).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Weights of the terms added to the raw loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegularizerConfig {
    pub diversity_weight: f64,
    pub length_weight: f64,
    pub length_mode: LengthMode,
    /// Threshold `λ` on the exponent-weighted length.
    pub length_limit: Option<u64>,
    /// Penalty `M` added above the threshold.
    pub penalty: f64,
}

impl Default for RegularizerConfig {
    fn default() -> Self {
        RegularizerConfig {
            diversity_weight: 0.3,
            length_weight: 0.01,
            length_mode: LengthMode::ExponentWeighted,
            length_limit: None,
            penalty: 1e6,
        }
    }
}

impl RegularizerConfig {
    /// No regularization at all.
    pub fn none() -> Self {
        RegularizerConfig { diversity_weight: 0.0, length_weight: 0.0, length_limit: None, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        match self.length_limit {
            Some(l) if l < 4 => Err(LossError::LengthLimit(l)),
            _ => Ok(()),
        }
    }

    /// Length and threshold terms, which do not depend on the generation.
    pub fn static_penalty(&self, p: &Program) -> f64 {
        let mut penalty = 0.0;
        if self.length_weight != 0.0 {
            penalty += self.length_weight * p.length(self.length_mode) as f64;
        }
        if let Some(limit) = self.length_limit {
            if p.length(LengthMode::ExponentWeighted) > limit {
                penalty += self.penalty;
            }
        }
        penalty
    }
}

/// `loss + w_len * len(p) - w_div * D_j + M * 1[len_ew(p) > λ]`; lower is
/// better.
pub fn total_fitness(p: &Program, loss: f64, diversity: f64, cfg: &RegularizerConfig) -> f64 {
    loss + cfg.static_penalty(p) - cfg.diversity_weight * diversity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn perfect_fit_is_zero_for_every_loss() {
        let y = [0.5, -1.0, 2.0, 3.5];
        for kind in LossKind::ALL {
            assert_eq!(compute_loss(kind, &y, &y).unwrap(), 0.0, "{kind}");
        }
    }

    #[test]
    fn correlation_losses_ignore_scale_and_monotone_maps() {
        assert!(compute_loss(LossKind::Pearson, &[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().abs() < 1e-15);
        assert!(compute_loss(LossKind::Pearson, &[1.0, 2.0, 3.0], &[-2.0, -4.0, -6.0]).unwrap().abs() < 1e-15);
        let x = [0.1, 0.4, 0.2, 0.9, 0.5];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp() * 3.0).collect();
        assert_eq!(compute_loss(LossKind::Spearman, &y, &x).unwrap(), 0.0);
    }

    #[test]
    fn zero_variance_correlation_is_maximal() {
        assert_eq!(compute_loss(LossKind::Pearson, &[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(compute_loss(LossKind::Spearman, &[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap(), 1.0);
    }

    #[test]
    fn chi2_formula() {
        let got = compute_loss(LossKind::Chi2, &[1.0, 2.0], &[2.0, -1.0]).unwrap();
        let want = 1.0 / (2.0 + 1e-8) + 9.0 / (1.0 + 1e-8);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn non_finite_predictions_are_penalized_not_nan() {
        for kind in LossKind::ALL {
            let l = compute_loss(kind, &[1.0, 2.0, 3.0], &[f64::NAN, 2.0, f64::INFINITY]).unwrap();
            assert!(!l.is_nan() && l > 0.0, "{kind}");
        }
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn r_squared_reference_points() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(r_squared(&y, &[2.5; 4]).unwrap(), 0.0);
        assert_eq!(r_squared(&[1.0, 1.0], &[1.0, 1.0]), Err(LossError::ConstantTarget));
    }

    #[test]
    fn fitness_terms() {
        let short = Program::single(Node::monomial(1.0, 0, 1));
        let long = Program::single(Node::monomial(1.0, 0, 2));
        let none = RegularizerConfig::none();
        assert_eq!(total_fitness(&short, 0.7, 0.3, &none), 0.7);
        let cfg = RegularizerConfig::default();
        assert!(total_fitness(&short, 0.5, 0.0, &cfg) < total_fitness(&long, 0.5, 0.0, &cfg));
        let limited = RegularizerConfig { length_limit: Some(4), ..RegularizerConfig::none() };
        assert!(total_fitness(&long, 0.0, 0.0, &limited) >= 1e6);
        assert!(RegularizerConfig { length_limit: Some(3), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn loss_names_parse() {
        for kind in LossKind::ALL {
            assert_eq!(kind.name().parse::<LossKind>().unwrap(), kind);
        }
        assert!("huber".parse::<LossKind>().is_err());
    }
}
