//! Operator-frequency entropy and diversity measures over a generation.
//!
//! Rows of the frequency table are expressions, columns the five library
//! operators in [`Op::LIBRARY`] order. All logarithms are base 2.

use thiserror::Error;

use crate::expr::{Arg, Node, Op, Program};

pub const LIBRARY_SIZE: usize = Op::LIBRARY.len();

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiversityError {
    #[error("generation is empty")]
    EmptyGeneration,
}

/// Per-expression operator frequencies `p_ij` and their mean `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub per_expression: Vec<[f64; LIBRARY_SIZE]>,
    pub mean: [f64; LIBRARY_SIZE],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub h: Vec<f64>,
    pub specificity: [f64; LIBRARY_SIZE],
    pub delta: Vec<f64>,
    pub h_r: Vec<f64>,
    pub d: Vec<f64>,
    pub d_dot: Option<Vec<u64>>,
}

/// Library-operator occurrences at every nesting level. Nodes that do not
/// depend on a variable (constant terms, exponent 0) are not counted.
pub fn operator_counts(p: &Program) -> [u64; LIBRARY_SIZE] {
    let mut counts = [0; LIBRARY_SIZE];
    count_into(p, &mut counts);
    counts
}

fn count_into(p: &Program, counts: &mut [u64; LIBRARY_SIZE]) {
    for n in p.nodes() {
        if n.is_constant() {
            continue;
        }
        if let Some(i) = n.op.library_index() {
            counts[i] += 1;
        }
        if let Arg::Program(inner) = &n.arg {
            count_into(inner, counts);
        }
    }
}

impl FrequencyTable {
    /// Normalizes raw count rows, optionally with add-one smoothing.
    pub fn from_counts(counts: &[[u64; LIBRARY_SIZE]], smoothing: bool) -> Result<Self, DiversityError> {
        if counts.is_empty() {
            return Err(DiversityError::EmptyGeneration);
        }
        let extra = if smoothing { 1.0 } else { 0.0 };
        let per_expression: Vec<[f64; LIBRARY_SIZE]> = counts
            .iter()
            .map(|row| {
                let total: f64 = row.iter().map(|&c| c as f64 + extra).sum();
                if total == 0.0 {
                    return [1.0 / LIBRARY_SIZE as f64; LIBRARY_SIZE];
                }
                row.map(|c| (c as f64 + extra) / total)
            })
            .collect();
        let n = per_expression.len() as f64;
        let mut mean = [0.0; LIBRARY_SIZE];
        for row in &per_expression {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        Ok(FrequencyTable { per_expression, mean })
    }

    pub fn len(&self) -> usize {
        self.per_expression.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_expression.is_empty()
    }
}

/// Smoothed operator frequencies of a generation.
pub fn operator_frequencies(generation: &[Program]) -> Result<FrequencyTable, DiversityError> {
    let counts: Vec<_> = generation.iter().map(operator_counts).collect();
    FrequencyTable::from_counts(&counts, true)
}

fn xlog2(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * q.log2()
    }
}

/// Entropy `H_j`, specificity `S_i`, `δ_j`, cross-entropy `H_Rj` and the
/// divergence `D_j = H_Rj - H_j` of every expression from the mean profile.
pub fn shannon_diversity(ft: &FrequencyTable) -> DiversityReport {
    let n = ft.len() as f64;
    let mut specificity = [0.0; LIBRARY_SIZE];
    for (i, s) in specificity.iter_mut().enumerate() {
        let mean = ft.mean[i];
        if mean > 0.0 {
            *s = ft.per_expression.iter().map(|row| xlog2(row[i] / mean, row[i] / mean)).sum::<f64>() / n;
        }
    }
    let mut h = Vec::with_capacity(ft.len());
    let mut delta = Vec::with_capacity(ft.len());
    let mut h_r = Vec::with_capacity(ft.len());
    let mut d = Vec::with_capacity(ft.len());
    for row in &ft.per_expression {
        let hj = -row.iter().map(|&p| xlog2(p, p)).sum::<f64>();
        let hr = -row.iter().zip(&ft.mean).map(|(&p, &m)| xlog2(p, m)).sum::<f64>();
        h.push(hj);
        delta.push(row.iter().zip(&specificity).map(|(p, s)| p * s).sum());
        h_r.push(hr);
        d.push(divergence(row, &ft.mean));
    }
    DiversityReport { h, specificity, delta, h_r, d, d_dot: None }
}

/// `sum p log2(p / m)`, which equals `H_R - H`. Ratios within rounding of 1
/// count as exact so identical profiles give exactly zero.
fn divergence(row: &[f64; LIBRARY_SIZE], mean: &[f64; LIBRARY_SIZE]) -> f64 {
    let d: f64 = row
        .iter()
        .zip(mean)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &m)| {
            let r = p / m;
            if (r - 1.0).abs() < 1e-12 {
                0.0
            } else {
                p * r.log2()
            }
        })
        .sum();
    d.max(0.0)
}

/// `u1 ∩̇ u2`: size of the shared argument when the operators agree.
/// Program arguments share the nodes they have in common.
pub fn node_intersection(a: &Node, b: &Node) -> u64 {
    if a.op != b.op {
        return 0;
    }
    match (&a.arg, &b.arg) {
        (Arg::Operands(o1), Arg::Operands(o2)) => o1.intersection_len(o2) as u64,
        (Arg::Program(p1), Arg::Program(p2)) => shared_nodes(p1.nodes(), p2.nodes()),
        _ => 0,
    }
}

fn shared_nodes(a: &[Node], b: &[Node]) -> u64 {
    // both sides are sorted
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `Ḋ_j = Σ_k E_j ∩̇ E_k` over all expressions `k`, `j` itself included,
/// summing `∩̇` over every pair of top-level nodes.
pub fn pairwise_diversity(generation: &[Program]) -> Vec<u64> {
    generation
        .iter()
        .map(|ej| {
            generation
                .iter()
                .map(|ek| {
                    ej.nodes()
                        .iter()
                        .flat_map(|a| ek.nodes().iter().map(move |b| node_intersection(a, b)))
                        .sum::<u64>()
                })
                .sum()
        })
        .collect()
}

/// Full report including `Ḋ_j`.
pub fn diversity_report(generation: &[Program]) -> Result<DiversityReport, DiversityError> {
    let ft = operator_frequencies(generation)?;
    let mut report = shannon_diversity(&ft);
    report.d_dot = Some(pairwise_diversity(generation));
    Ok(report)
}
