//! Coefficient updates: random perturbation during mutation and a truncated
//! Levenberg–Marquardt refinement during evaluation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::expr::Program;

/// Residual substituted where a prediction is non-finite.
const RESIDUAL_SENTINEL: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitConfigError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("perturbation range [{0}, {1}] is empty")]
    Range(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub perturb_prob: f64,
    pub fit_prob: f64,
    /// Residual evaluations per fit; 0 disables fitting.
    pub max_calls: u32,
    pub perturb_range: (f64, f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { perturb_prob: 0.15, fit_prob: 0.15, max_calls: 3, perturb_range: (-1.0, 1.0) }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitConfigError> {
        for (name, value) in [("perturb_prob", self.perturb_prob), ("fit_prob", self.fit_prob)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(FitConfigError::Probability { name, value });
            }
        }
        let (lo, hi) = self.perturb_range;
        if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) || !lo.is_finite() || !hi.is_finite() {
            return Err(FitConfigError::Range(lo, hi));
        }
        Ok(())
    }

    pub(crate) fn perturbation(&self, rng: &mut impl Rng) -> f64 {
        let (lo, hi) = self.perturb_range;
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }
}

/// Adds a draw from `perturb_range` to each coefficient chosen with
/// `perturb_prob`. Structure is untouched.
pub fn perturb_coefficients(p: &Program, cfg: &FitConfig, rng: &mut impl Rng) -> Program {
    let mut coeffs = p.coefficients();
    let mut changed = false;
    for c in &mut coeffs {
        if rng.random_bool(cfg.perturb_prob) {
            let delta = cfg.perturbation(rng);
            if delta != 0.0 {
                *c += delta;
                changed = true;
            }
        }
    }
    if !changed {
        return p.clone();
    }
    let q = p.with_coefficients(&coeffs);
    if coeffs.contains(&0.0) {
        q.canonicalize()
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// No coefficient was selected or fitting is disabled.
    Skipped,
    Improved,
    /// Fitting ran but found nothing better.
    Unchanged,
    /// Every residual was non-finite.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub program: Program,
    pub status: FitStatus,
    pub ssr_before: f64,
    pub ssr_after: f64,
    /// Residual evaluations spent.
    pub calls: u32,
}

struct Problem<'a> {
    base: &'a Program,
    coeffs: Vec<f64>,
    selected: Vec<usize>,
    data: &'a Dataset,
}

impl Problem<'_> {
    fn program(&self, theta: &[f64]) -> Program {
        let mut c = self.coeffs.clone();
        for (&slot, &v) in self.selected.iter().zip(theta) {
            c[slot] = v;
        }
        self.base.with_coefficients(&c)
    }

    fn predictions(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.program(theta);
        self.data.x.iter().map(|x| p.eval_unchecked(x)).collect()
    }

    /// Residuals `y - ŷ`, or `None` if no prediction is finite.
    fn residuals(&self, theta: &[f64]) -> Option<DVector<f64>> {
        let pred = self.predictions(theta);
        if !pred.iter().any(|v| v.is_finite()) {
            return None;
        }
        Some(DVector::from_iterator(
            pred.len(),
            self.data.y.iter().zip(&pred).map(|(y, v)| {
                let r = y - v;
                if r.is_finite() {
                    r
                } else {
                    RESIDUAL_SENTINEL
                }
            }),
        ))
    }

    /// Central-difference Jacobian of the predictions.
    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.data.len();
        let mut j = DMatrix::zeros(n, theta.len());
        let mut probe = theta.to_vec();
        for k in 0..theta.len() {
            let h = 1e-6 * theta[k].abs().max(1.0);
            probe[k] = theta[k] + h;
            let up = self.predictions(&probe);
            probe[k] = theta[k] - h;
            let down = self.predictions(&probe);
            probe[k] = theta[k];
            for i in 0..n {
                let d = (up[i] - down[i]) / (2.0 * h);
                j[(i, k)] = if d.is_finite() { d } else { 0.0 };
            }
        }
        j
    }
}

fn ssr(r: &DVector<f64>) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Least-squares refinement of a random subset of the coefficients (each
/// chosen with `fit_prob`). At most `max_calls` residual evaluations are
/// spent, the initial one included; Jacobian probes are not counted. The
/// result never has a larger squared-residual sum than `p`.
pub fn lm_fit(p: &Program, data: &Dataset, cfg: &FitConfig, rng: &mut impl Rng) -> FitOutcome {
    let coeffs = p.coefficients();
    let selected: Vec<usize> = (0..coeffs.len()).filter(|_| rng.random_bool(cfg.fit_prob)).collect();
    let unchanged = |status, ssr, calls| FitOutcome {
        program: p.clone(),
        status,
        ssr_before: ssr,
        ssr_after: ssr,
        calls,
    };
    if selected.is_empty() || cfg.max_calls == 0 {
        return unchanged(FitStatus::Skipped, f64::NAN, 0);
    }
    let theta0: Vec<f64> = selected.iter().map(|&i| coeffs[i]).collect();
    let problem = Problem { base: p, coeffs, selected, data };
    let Some(mut r) = problem.residuals(&theta0) else {
        return unchanged(FitStatus::Degenerate, f64::INFINITY, 1);
    };
    let ssr_before = ssr(&r);
    let mut best = ssr_before;
    let mut theta = theta0;
    let mut calls = 1;
    let mut lambda = 1e-3;
    let mut jacobian = None;
    while calls < cfg.max_calls {
        let j = jacobian.get_or_insert_with(|| problem.jacobian(&theta));
        let jt = j.transpose();
        let mut a = &jt * &*j;
        let g = &jt * &r;
        for k in 0..a.nrows() {
            let d = a[(k, k)];
            a[(k, k)] = d + lambda * d.max(1e-12);
        }
        let step = a.clone().cholesky().map(|c| c.solve(&g)).or_else(|| a.lu().solve(&g));
        let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
            lambda *= 10.0;
            calls += 1;
            continue;
        };
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        calls += 1;
        match problem.residuals(&trial) {
            Some(tr) if ssr(&tr) < best => {
                best = ssr(&tr);
                theta = trial;
                r = tr;
                lambda /= 10.0;
                jacobian = None;
            }
            _ => lambda *= 10.0,
        }
    }
    if best < ssr_before {
        FitOutcome {
            program: problem.program(&theta),
            status: FitStatus::Improved,
            ssr_before,
            ssr_after: best,
            calls,
        }
    } else {
        unchanged(FitStatus::Unchanged, ssr_before, calls)
    }
}
