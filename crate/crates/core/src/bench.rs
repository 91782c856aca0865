//! Standard symbolic-regression benchmarks: ground truths, sampling domains
//! and recovery scoring.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Provenance};
use crate::expr::Program;
use crate::loss::{r_squared, sanitize, spearman_rho};
use crate::rng;

/// Attempts per point before a non-finite uniform draw is kept anyway.
const RESAMPLE_LIMIT: usize = 1000;

/// How input points are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `U(a, b, n)`: `n` independent uniform draws.
    Uniform { a: f64, b: f64, n: usize },
    /// `E(a, b, n)`: the `n + 1` end points of `n` equal segments.
    Equal { a: f64, b: f64, n: usize },
    /// `U(a, b, n) × U(a, b, n)`: all pairs of two independent draws.
    UniformGrid { a: f64, b: f64, n: usize },
}

impl Domain {
    pub fn arity(&self) -> usize {
        match self {
            Domain::UniformGrid { .. } => 2,
            _ => 1,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Uniform { a, b, .. } | Domain::Equal { a, b, .. } | Domain::UniformGrid { a, b, .. } => (a, b),
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            Domain::Uniform { n, .. } => n,
            Domain::Equal { n, .. } => n + 1,
            Domain::UniformGrid { n, .. } => n * n,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Domain::Uniform { a, b, n } => write!(f, "U({a}, {b}, {n})"),
            Domain::Equal { a, b, n } => write!(f, "E({a}, {b}, {n})"),
            Domain::UniformGrid { a, b, n } => write!(f, "U({a}, {b}, {n}) x U({a}, {b}, {n})"),
        }
    }
}

/// `n + 1` equally spaced points from `a` to `b` inclusive.
pub fn equal_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect()
}

#[derive(Debug, Clone)]
pub enum GroundTruth {
    /// Expressible in the grammar.
    Program(Program),
    /// Uses functions outside the operator library.
    Native(fn(&[f64]) -> f64),
}

impl GroundTruth {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            GroundTruth::Program(p) => p.eval_unchecked(x),
            GroundTruth::Native(f) => f(x),
        }
    }

    pub fn as_program(&self) -> Option<&Program> {
        match self {
            GroundTruth::Program(p) => Some(p),
            GroundTruth::Native(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: &'static str,
    /// Human-readable formula.
    pub formula: &'static str,
    pub ground_truth: GroundTruth,
    pub domain: Domain,
}

impl BenchmarkSpec {
    pub fn arity(&self) -> usize {
        self.domain.arity()
    }
}

enum Truth {
    Text(&'static str),
    Native(fn(&[f64]) -> f64),
}

const fn u(a: f64, b: f64, n: usize) -> Domain {
    Domain::Uniform { a, b, n }
}

const fn e(a: f64, b: f64, n: usize) -> Domain {
    Domain::Equal { a, b, n }
}

const fn uu(a: f64, b: f64, n: usize) -> Domain {
    Domain::UniformGrid { a, b, n }
}

const R1: &str = "(x + 1)^3 / (x^2 - x + 1)";
const R2: &str = "(x^5 - 3*x^3 + 1) / (x^2 + 1)";
const R3: &str = "(x^6 + x^5) / (x^4 + x^3 + x^2 + x + 1)";
const KEIJZER_2: &str = "0.3*x*sin(6.283185307179586*x)";

#[rustfmt::skip]
const TABLE: [(&str, &str, Truth, Domain); 43] = [
    ("Nguyen-1", "x^3 + x^2 + x", Truth::Text("x^3 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Nguyen-2", "x^4 + x^3 + x^2 + x", Truth::Text("x^4 + x^3 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Nguyen-3", "x^5 + x^4 + x^3 + x^2 + x", Truth::Text("x^5 + x^4 + x^3 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Nguyen-4", "x^6 + x^5 + x^4 + x^3 + x^2 + x", Truth::Text("x^6 + x^5 + x^4 + x^3 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Nguyen-5", "sin(x^2)cos(x) - 1", Truth::Text("sin(x^2)*cos(x) - 1"), u(-1.0, 1.0, 20)),
    ("Nguyen-6", "sin(x) + sin(x + x^2)", Truth::Text("sin(x) + sin(x + x^2)"), u(-1.0, 1.0, 20)),
    ("Nguyen-7", "log(x + 1) + log(x^2 + 1)", Truth::Text("log(x + 1) + log(x^2 + 1)"), u(0.0, 2.0, 20)),
    ("Nguyen-8", "sqrt(x)", Truth::Text("sqrt(x)"), u(0.0, 4.0, 20)),
    ("Nguyen-9", "sin(x) + sin(y^2)", Truth::Text("sin(x) + sin(y^2)"), uu(0.0, 1.0, 20)),
    ("Nguyen-10", "2 sin(x) cos(y)", Truth::Text("2*sin(x)*cos(y)"), uu(0.0, 1.0, 20)),
    ("Nguyen-11", "x^y", Truth::Native(|v| v[0].powf(v[1])), uu(0.0, 1.0, 20)),
    ("Nguyen-12", "x^4 - x^3 + y^2/2 - y", Truth::Text("x^4 - x^3 + 0.5*y^2 - y"), uu(0.0, 1.0, 20)),
    ("Nguyen-12*", "x^4 - x^3 + y^2/2 - y", Truth::Text("x^4 - x^3 + 0.5*y^2 - y"), uu(0.0, 10.0, 20)),
    ("R-1", R1, Truth::Text(R1), e(-1.0, 1.0, 20)),
    ("R-2", R2, Truth::Text(R2), e(-1.0, 1.0, 20)),
    ("R-3", R3, Truth::Text(R3), e(-1.0, 1.0, 20)),
    ("R-1*", R1, Truth::Text(R1), e(-10.0, 10.0, 20)),
    ("R-2*", R2, Truth::Text(R2), e(-10.0, 10.0, 20)),
    ("R-3*", R3, Truth::Text(R3), e(-10.0, 10.0, 20)),
    ("Livermore-1", "1/3 + x + sin(x^2)", Truth::Text("1/3 + x + sin(x^2)"), u(-10.0, 10.0, 1000)),
    ("Livermore-2", "sin(x^2)cos(x) - 2", Truth::Text("sin(x^2)*cos(x) - 2"), u(-1.0, 1.0, 20)),
    ("Livermore-3", "sin(x^3)cos(x^2) - 1", Truth::Text("sin(x^3)*cos(x^2) - 1"), u(-1.0, 1.0, 20)),
    ("Livermore-4", "log(x + 1) + log(x^2 + 1) + log(x)", Truth::Text("log(x + 1) + log(x^2 + 1) + log(x)"), u(0.0, 2.0, 20)),
    ("Livermore-5", "x^4 - x^3 + x^2 - y", Truth::Text("x^4 - x^3 + x^2 - y"), uu(0.0, 1.0, 20)),
    ("Livermore-6", "4x^4 + 3x^3 + 2x^2 + x", Truth::Text("4*x^4 + 3*x^3 + 2*x^2 + x"), u(-1.0, 1.0, 20)),
    ("Livermore-7", "sinh(x)", Truth::Native(|v| v[0].sinh()), u(-1.0, 1.0, 20)),
    ("Livermore-8", "cosh(x)", Truth::Native(|v| v[0].cosh()), u(-1.0, 1.0, 20)),
    ("Livermore-9", "x^9 + x^8 + ... + x", Truth::Text("x^9 + x^8 + x^7 + x^6 + x^5 + x^4 + x^3 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Livermore-10", "6 sin(x) cos(y)", Truth::Text("6*sin(x)*cos(y)"), uu(0.0, 1.0, 20)),
    ("Livermore-11", "x^2 y^2 / (x + y)", Truth::Text("x^2*y^2/(x + y)"), uu(-1.0, 1.0, 50)),
    ("Livermore-12", "x^5 / y^3", Truth::Text("x^5/y^3"), uu(-1.0, 1.0, 50)),
    ("Livermore-13", "x^(1/3)", Truth::Native(|v| v[0].cbrt()), u(0.0, 4.0, 20)),
    ("Livermore-14", "x^3 + x^2 + x + sin(x) + sin(x^2)", Truth::Text("x^3 + x^2 + x + sin(x) + sin(x^2)"), u(-1.0, 1.0, 20)),
    ("Livermore-15", "x^(1/5)", Truth::Native(|v| v[0].powf(0.2)), u(0.0, 4.0, 20)),
    ("Livermore-16", "x^(2/5)", Truth::Native(|v| v[0].powf(0.4)), u(0.0, 4.0, 20)),
    ("Livermore-17", "4 sin(x) cos(y)", Truth::Text("4*sin(x)*cos(y)"), uu(0.0, 1.0, 20)),
    ("Livermore-18", "sin(x^2)cos(x) - 5", Truth::Text("sin(x^2)*cos(x) - 5"), u(-1.0, 1.0, 20)),
    ("Livermore-19", "x^5 + x^4 + x^2 + x", Truth::Text("x^5 + x^4 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Livermore-20", "exp(-x^2)", Truth::Native(|v| (-v[0] * v[0]).exp()), u(-1.0, 1.0, 20)),
    ("Livermore-21", "x^8 + x^7 + ... + x", Truth::Text("x^8 + x^7 + x^6 + x^5 + x^4 + x^3 + x^2 + x"), u(-1.0, 1.0, 20)),
    ("Livermore-22", "exp(-0.5x^2)", Truth::Native(|v| (-0.5 * v[0] * v[0]).exp()), u(-1.0, 1.0, 20)),
    ("Keijzer-2", "0.3 x sin(2 pi x)", Truth::Text(KEIJZER_2), u(-2.0, 2.0, 300)),
    ("Keijzer-2*", "0.3 x sin(2 pi x)", Truth::Text(KEIJZER_2), u(-2.0, 2.0, 20)),
];

fn build(entry: &(&'static str, &'static str, Truth, Domain)) -> BenchmarkSpec {
    let (name, formula, truth, domain) = entry;
    let ground_truth = match truth {
        Truth::Text(text) => {
            GroundTruth::Program(Program::parse(text).unwrap_or_else(|e| panic!("{name} ground truth: {e}")))
        }
        Truth::Native(f) => GroundTruth::Native(*f),
    };
    BenchmarkSpec { name, formula, ground_truth, domain: *domain }
}

/// Every benchmark, in table order.
pub fn benchmarks() -> Vec<BenchmarkSpec> {
    TABLE.iter().map(build).collect()
}

pub fn benchmark_names() -> Vec<&'static str> {
    TABLE.iter().map(|t| t.0).collect()
}

/// Case-insensitive lookup.
pub fn benchmark(name: &str) -> Option<BenchmarkSpec> {
    TABLE.iter().find(|t| t.0.eq_ignore_ascii_case(name)).map(build)
}

fn draw<R: Rng>(rng: &mut R, a: f64, b: f64) -> f64 {
    rng.random_range(a..b)
}

/// Samples the benchmark's domain and evaluates the ground truth.
/// Uniform draws where the truth is non-finite are redrawn.
pub fn generate_dataset(spec: &BenchmarkSpec, seed: u64) -> Dataset {
    let mut rng = rng::seeded(seed);
    let truth = &spec.ground_truth;
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(spec.domain.size());
    match spec.domain {
        Domain::Uniform { a, b, n } => {
            for _ in 0..n {
                let mut p = vec![draw(&mut rng, a, b)];
                for _ in 0..RESAMPLE_LIMIT {
                    if truth.eval(&p).is_finite() {
                        break;
                    }
                    p[0] = draw(&mut rng, a, b);
                }
                x.push(p);
            }
        }
        Domain::Equal { a, b, n } => x.extend(equal_points(a, b, n).into_iter().map(|v| vec![v])),
        Domain::UniformGrid { a, b, n } => {
            let xs: Vec<f64> = (0..n).map(|_| draw(&mut rng, a, b)).collect();
            let ys: Vec<f64> = (0..n).map(|_| draw(&mut rng, a, b)).collect();
            for &xv in &xs {
                for &yv in &ys {
                    x.push(vec![xv, yv]);
                }
            }
        }
    }
    let y = x.iter().map(|p| truth.eval(p)).collect();
    Dataset::with_provenance(x, y, Provenance::Benchmark { name: spec.name.to_string(), seed })
        .expect("benchmark domains have at least two points")
}

/// Points ten times denser than the sampling domain, spanning its bounds.
pub fn probe_points(domain: &Domain) -> Vec<Vec<f64>> {
    let (a, b) = domain.bounds();
    match *domain {
        Domain::Uniform { n, .. } | Domain::Equal { n, .. } => {
            equal_points(a, b, 10 * n).into_iter().map(|v| vec![v]).collect()
        }
        Domain::UniformGrid { n, .. } => {
            let g = equal_points(a, b, 10 * n);
            g.iter().flat_map(|&xv| g.iter().map(move |&yv| vec![xv, yv])).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub r2: f64,
    pub spearman: f64,
    pub exact: bool,
}

/// Scores `candidate` against the clean benchmark data drawn with `seed`.
/// `exact` holds when canonical forms agree, or when the candidate matches
/// the truth to 1e-9 (relative) on a grid ten times denser than the domain.
pub fn score_recovery(candidate: &Program, spec: &BenchmarkSpec, seed: u64) -> Recovery {
    let data = generate_dataset(spec, seed);
    let yhat: Vec<f64> = data.x.iter().map(|p| candidate.eval_unchecked(p)).collect();
    let r2 = r_squared(&data.y, &yhat).unwrap_or(0.0);
    let spearman = spearman_rho(&data.y, &yhat);
    let non_finite = yhat.iter().filter(|v| !v.is_finite()).count();
    let exact = 2 * non_finite <= yhat.len() && matches_truth(candidate, spec);
    Recovery { r2, spearman, exact }
}

fn matches_truth(candidate: &Program, spec: &BenchmarkSpec) -> bool {
    if let Some(truth) = spec.ground_truth.as_program() {
        if candidate.canonicalize().to_string() == truth.canonicalize().to_string() {
            return true;
        }
    }
    probe_points(&spec.domain).iter().all(|p| {
        let t = spec.ground_truth.eval(p);
        if !t.is_finite() {
            return true;
        }
        let c = sanitize(candidate.eval_unchecked(p));
        (c - t).abs() < 1e-9 * t.abs().max(1.0)
    })
}
