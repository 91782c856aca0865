//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Instant;

use faigp_cli::{run, DataSource, RunConfig, RunOutput};
use faigp_core::bench::{benchmark, generate_dataset};
use faigp_core::diversity::diversity_report;
use faigp_core::evolve::{Variation, VariationKind};
use faigp_core::expr::{merge_union, MergeMode, Monomial};
use faigp_core::fit::lm_fit;
use faigp_core::rng;
use faigp_core::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Criterion = (&'static str, fn() -> (bool, String));

const KEIJZER: &str = "Keijzer-2*";

fn batch(name: &str, reps: usize, edit: impl FnOnce(&mut RunConfig)) -> RunOutput {
    let mut cfg = RunConfig::new(DataSource::Benchmark(name.into()));
    cfg.repetitions = reps;
    edit(&mut cfg);
    run(&cfg).expect("acceptance configs are valid")
}

fn r2s(out: &RunOutput) -> Vec<f64> {
    out.runs.iter().map(|r| r.r2()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// One-sided Welch test of mean(a) > mean(b).
fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (var(a) / na, var(b) / nb);
    let se = (va + vb).sqrt();
    if se == 0.0 {
        return if mean(a) > mean(b) { 0.0 } else { 1.0 };
    }
    let t = (mean(a) - mean(b)) / se;
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

fn recovery() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["Nguyen-1", "Nguyen-2", "Nguyen-8", "Livermore-7", "R-2*", "R-3*"] {
        let out = batch(name, 10, |_| {});
        let slowest = out.runs.iter().map(|r| r.report.wall_time_s).fold(0.0, f64::max);
        let pass = out.aggregate.best_r2 >= 0.999 && slowest <= 300.0;
        ok &= pass;
        parts.push(format!("{name} {:.5} ({slowest:.1}s)", out.aggregate.best_r2));
    }
    (ok, parts.join(", "))
}

fn keijzer() -> (bool, String) {
    let out = batch(KEIJZER, 10, |_| {});
    (out.aggregate.best_r2 >= 0.99, format!("best-of-10 R2 {:.5}", out.aggregate.best_r2))
}

fn diversity_effect() -> (bool, String) {
    let with = batch(KEIJZER, 30, |_| {});
    let without = batch(KEIJZER, 30, |c| c.regularizer.diversity_weight = 0.0);
    let (a, b) = (with.aggregate.r2.sd, without.aggregate.r2.sd);
    (a <= b, format!("SD with {a:.4}, without {b:.4}"))
}

fn fitting_effect() -> (bool, String) {
    let with = r2s(&batch(KEIJZER, 30, |_| {}));
    let without = r2s(&batch(KEIJZER, 30, |c| c.fit.max_calls = 0));
    let p = welch_p(&with, &without);
    (p < 0.05, format!("mean with {:.4}, without {:.4}, p = {p:.2e}", mean(&with), mean(&without)))
}

fn noise_robustness() -> (bool, String) {
    let out = batch(KEIJZER, 10, |c| c.noise_lambda = 0.001);
    (out.aggregate.best_r2 >= 0.99, format!("best-of-10 clean R2 {:.5}", out.aggregate.best_r2))
}

fn loss_ordering() -> (bool, String) {
    let chi2 = batch(KEIJZER, 10, |_| {});
    let mae = batch(KEIJZER, 10, |c| c.loss = LossKind::Mae);
    let (a, b) = (chi2.aggregate.r2.mean, mae.aggregate.r2.mean);
    (a >= b, format!("mean R2 chi2 {a:.4}, mae {b:.4}"))
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

fn property_suites() -> (bool, String) {
    let mut failed = Vec::new();
    let mut note = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failed.push(format!("{name}: {e}"));
        }
    };

    note(
        "canonicalization",
        check(10_000, (common::program(3), common::point(3)), |(p, x)| {
            let c = p.canonicalize();
            prop_assert_eq!(c.canonicalize(), c.clone());
            let v = p.eval_unchecked(&x);
            if v.is_finite() {
                prop_assert!(close(v, c.eval_unchecked(&x), 1e-9 * common::scale(&p, &x)));
            }
            Ok(())
        }),
    );

    note(
        "union homomorphisms",
        check(2_000, (common::leaf(2), common::leaf(2), common::point(2)), |(a, b, x)| {
            let (va, vb) = (a.eval_unchecked(&x), b.eval_unchecked(&x));
            let range = ExponentRange::unbounded();
            let s: f64 = merge_union(&a, &b, MergeMode::Additive, range).unwrap().iter().map(|n| n.eval_unchecked(&x)).sum();
            let m: f64 =
                merge_union(&a, &b, MergeMode::Multiplicative, range).unwrap().iter().map(|n| n.eval_unchecked(&x)).product();
            if (va + vb).is_finite() {
                prop_assert!(close(s, va + vb, 1e-12 * (1.0 + va.abs() + vb.abs())));
            }
            if (va * vb).is_finite() {
                prop_assert!(close(m, va * vb, 1e-12 * (va * vb).abs().max(1.0)));
            }
            Ok(())
        }),
    );

    note(
        "diversity",
        check(300, prop::collection::vec(common::program(2), 1..10), |gen| {
            prop_assert!(diversity_report(&gen).unwrap().d.iter().all(|&d| d >= 0.0));
            let same = vec![gen[0].clone(); gen.len()];
            prop_assert!(diversity_report(&same).unwrap().d.iter().all(|&d| d == 0.0));
            Ok(())
        }),
    );

    note(
        "length oracle",
        check(2_000, common::program(3), |p| {
            prop_assert_eq!(p.length(LengthMode::Flat), length_oracle(&p, false));
            prop_assert_eq!(p.length(LengthMode::ExponentWeighted), length_oracle(&p, true));
            Ok(())
        }),
    );

    note("grammar validity", grammar_validity());

    note(
        "lm_fit non-degradation",
        check(1_000, (common::program(1), common::program(1), any::<u64>()), |(p, target, seed)| {
            let x: Vec<Vec<f64>> = (0..15).map(|i| vec![-1.9 + 0.27 * i as f64]).collect();
            let y: Vec<f64> = x.iter().map(|v| target.eval_unchecked(v)).collect();
            if y.iter().any(|v| !v.is_finite()) {
                return Ok(());
            }
            let data = Dataset::new(x, y).unwrap();
            let cfg = FitConfig { fit_prob: 0.5, max_calls: 5, ..FitConfig::default() };
            let out = lm_fit(&p, &data, &cfg, &mut rng::seeded(seed));
            prop_assert!(ssr(&out.program, &data) <= ssr(&p, &data) * (1.0 + 1e-12));
            Ok(())
        }),
    );

    note("seed replay", seed_replay());

    note(
        "polynomial constructor",
        check(
            2_000,
            (prop::collection::vec((-9i32..=9, 0u32..=5, 0u32..=5, 0u32..=5), 1..6), prop::collection::vec(-3i32..=3, 3)),
            |(terms, x)| {
                let terms: Vec<Monomial> = terms
                    .into_iter()
                    .map(|(c, a, b, d)| {
                        let b = b.min(5 - a);
                        let d = d.min(5 - a - b);
                        Monomial { coeff: c as f64, powers: vec![a, b, d] }
                    })
                    .collect();
                let p = Program::polynomial(&terms, ExponentRange::new(-2, 2)).unwrap();
                let x: Vec<f64> = x.into_iter().map(f64::from).collect();
                let want: f64 = terms
                    .iter()
                    .map(|t| t.coeff * t.powers.iter().zip(&x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
                    .sum();
                prop_assert_eq!(p.eval_unchecked(&x), want);
                Ok(())
            },
        ),
    );

    if failed.is_empty() {
        (true, "8 suites".into())
    } else {
        (false, failed.join("; "))
    }
}

fn length_oracle(p: &Program, weighted: bool) -> u64 {
    p.nodes()
        .iter()
        .map(|n| {
            let inner = match &n.arg {
                Arg::Operands(o) => (o.vars().len() + o.consts().len()) as u64,
                Arg::Program(q) => length_oracle(q, weighted),
            };
            if weighted {
                1 + (0..n.exponent.unsigned_abs()).map(|_| 1 + inner).sum::<u64>()
            } else {
                3 + inner
            }
        })
        .sum()
}

fn ssr(p: &Program, data: &Dataset) -> f64 {
    data.x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| {
            let r = y - p.eval_unchecked(x);
            let r = if r.is_finite() { r } else { 1e10 };
            r * r
        })
        .sum()
}

fn grammar_validity() -> Result<(), String> {
    let cfg = EngineConfig::default();
    let fit = FitConfig::default();
    let prior = OperatorPrior::uniform();
    let var = Variation::new(&prior, &cfg, &fit, 3);
    let mut r = rng::seeded(1);
    let mut pop: Vec<Program> = (0..64).map(|_| var.generate(&mut r)).collect();
    for step in 0..100_000 {
        let kind = VariationKind::ALL[r.random_range(0..VariationKind::ALL.len())];
        let child = var.apply(kind, &pop[r.random_range(0..64)], &pop[r.random_range(0..64)], &mut r);
        let valid = child.validate(cfg.exponents).is_ok()
            && child.is_canonical_in(cfg.exponents)
            && child.depth() <= cfg.max_depth
            && child.arity() <= 3;
        if !valid {
            return Err(format!("step {step} produced {child}"));
        }
        pop[r.random_range(0..64)] = child;
    }
    Ok(())
}

fn seed_replay() -> Result<(), String> {
    let data = generate_dataset(&benchmark("Nguyen-6").unwrap(), 3);
    let once = |workers| {
        let cfg = EngineConfig { seed: 3, workers, generations: 10, loss_target: 0.0, ..EngineConfig::with_population(100) };
        let mut r = evolve(&data, &OperatorPrior::uniform(), &cfg, LossKind::Chi2, &RegularizerConfig::default(), &FitConfig::default())
            .unwrap();
        r.wall_time_s = 0.0;
        r
    };
    let a = once(1);
    if a != once(1) || a != once(2) {
        return Err("reports differ between replays".into());
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("exact recovery on six benchmarks", recovery),
        ("Keijzer-2* best-of-10 R2 >= 0.99", keijzer),
        ("diversity weight lowers R2 spread", diversity_effect),
        ("curve fitting raises mean R2", fitting_effect),
        ("noise 0.001 recovers clean Keijzer-2*", noise_robustness),
        ("property suites", property_suites),
        ("chi2 mean R2 >= MAE mean R2", loss_ordering),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (pass, detail) = f();
        if !pass {
            failures += 1;
        }
        println!("{} {name}: {detail} [{:.0}s]", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
