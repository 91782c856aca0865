mod common;

use faigp_core::bench::{benchmark, benchmarks, generate_dataset, score_recovery};
use faigp_core::dataset::{add_noise, sample_variance};
use faigp_core::diversity::{diversity_report, operator_counts, operator_frequencies, shannon_diversity};
use faigp_core::evolve::{Evolution, Variation, VariationKind};
use faigp_core::expr::Monomial;
use faigp_core::fit::{lm_fit, FitStatus};
use faigp_core::rng;
use faigp_core::*;
use proptest::prelude::*;
use rand::Rng;

const SENTINEL: f64 = 1e10;

fn ssr(p: &Program, data: &Dataset) -> f64 {
    data.x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| {
            let r = y - p.eval_unchecked(x);
            let r = if r.is_finite() { r } else { SENTINEL };
            r * r
        })
        .sum()
}

fn grid_data(f: impl Fn(f64) -> f64, n: usize) -> Dataset {
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![-2.0 + 4.0 * i as f64 / (n - 1) as f64]).collect();
    let y = x.iter().map(|p| f(p[0])).collect();
    Dataset::new(x, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn diversity_is_non_negative(gen in prop::collection::vec(common::program(2), 1..12)) {
        let r = diversity_report(&gen).unwrap();
        prop_assert!(r.d.iter().all(|&d| d >= 0.0 && d.is_finite()));
    }

    #[test]
    fn identical_generation_has_zero_diversity(p in common::program(2), n in 1usize..10) {
        let gen = vec![p; n];
        let r = diversity_report(&gen).unwrap();
        prop_assert!(r.d.iter().all(|&d| d == 0.0), "{:?}", r.d);
    }

    #[test]
    fn diversity_is_permutation_equivariant(
        gen in prop::collection::vec(common::program(2), 2..10),
        rot in 0usize..10,
    ) {
        let k = rot % gen.len();
        let mut shifted = gen.clone();
        shifted.rotate_left(k);
        let a = diversity_report(&gen).unwrap().d;
        let b = diversity_report(&shifted).unwrap().d;
        for (i, v) in b.iter().enumerate() {
            let j = (i + k) % gen.len();
            prop_assert!((v - a[j]).abs() <= 1e-12, "{} vs {}", v, a[j]);
        }
    }
}

#[test]
fn variation_keeps_programs_in_grammar() {
    let cfg = EngineConfig::default();
    let fit = FitConfig::default();
    let prior = OperatorPrior::uniform();
    let var = Variation::new(&prior, &cfg, &fit, 2);
    let mut r = rng::seeded(7);
    let mut pop: Vec<Program> = (0..64).map(|_| var.generate(&mut r)).collect();
    for step in 0..100_000 {
        let kind = VariationKind::ALL[r.random_range(0..VariationKind::ALL.len())];
        let a = r.random_range(0..pop.len());
        let b = r.random_range(0..pop.len());
        let child = var.apply(kind, &pop[a], &pop[b], &mut r);
        assert!(child.validate(cfg.exponents).is_ok(), "step {step}: {child}");
        assert!(child.is_canonical_in(cfg.exponents), "step {step}: {child}");
        assert!(child.depth() <= cfg.max_depth, "step {step}: depth {}", child.depth());
        assert!(child.arity() <= 2, "step {step}: {child}");
        let slot = r.random_range(0..pop.len());
        pop[slot] = child;
    }
}

#[test]
fn degenerate_prior_only_yields_its_operator() {
    let cfg = EngineConfig::default();
    let fit = FitConfig::default();
    let prior = OperatorPrior::degenerate(Op::Sin);
    let var = Variation::new(&prior, &cfg, &fit, 1);
    let mut r = rng::seeded(3);
    let mut pop: Vec<Program> = (0..32).map(|_| var.generate(&mut r)).collect();
    for _ in 0..20_000 {
        let kind = VariationKind::ALL[r.random_range(0..VariationKind::ALL.len())];
        let child = var.apply(kind, &pop[r.random_range(0..32)], &pop[r.random_range(0..32)], &mut r);
        let counts = operator_counts(&child);
        let sin = Op::Sin.library_index().unwrap();
        assert!(counts.iter().enumerate().all(|(i, &c)| i == sin || c == 0), "{child}");
        let slot = r.random_range(0..32);
        pop[slot] = child;
    }
}

#[test]
fn prior_sampling_matches_probabilities() {
    let prior = OperatorPrior::new([0.4, 0.25, 0.2, 0.1, 0.05]).unwrap();
    let n = 200_000;
    let mut r = rng::seeded(11);
    let mut counts = [0usize; 5];
    for _ in 0..n {
        counts[prior.sample(&mut r).library_index().unwrap()] += 1;
    }
    for (i, &c) in counts.iter().enumerate() {
        let p = prior.probs()[i];
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sd, "operator {i}: {c}");
    }
}

#[test]
fn uniform_generation_frequencies_are_balanced() {
    // ignoring inner scaled-argument nodes, every library op should be equally likely
    let cfg = EngineConfig { init_depth: 1, ..Default::default() };
    let fit = FitConfig::default();
    let prior = OperatorPrior::uniform();
    let var = Variation::new(&prior, &cfg, &fit, 1);
    let mut r = rng::seeded(5);
    let gen: Vec<Program> = (0..20_000).map(|_| var.generate(&mut r)).collect();
    let table = operator_frequencies(&gen).unwrap();
    let report = shannon_diversity(&table);
    assert!(report.h.iter().all(|h| h.is_finite()));
    let mut outer = [0usize; 5];
    let mut total = 0;
    for p in &gen {
        for n in p.nodes().iter().filter(|n| !n.is_constant()) {
            outer[n.op.library_index().unwrap()] += 1;
            total += 1;
        }
    }
    for &c in &outer {
        let sd = (total as f64 * 0.2 * 0.8).sqrt();
        // merging can fold repeated terms, so allow the 3-sigma band plus 2%
        assert!((c as f64 - 0.2 * total as f64).abs() <= 3.0 * sd + 0.02 * total as f64, "{outer:?}");
    }
}

#[test]
fn lm_fit_never_degrades() {
    let cfg = FitConfig { fit_prob: 0.5, max_calls: 5, ..Default::default() };
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(1_000));
    runner
        .run(&(common::program(1), common::program(1), any::<u64>()), |(p, target, seed)| {
            let x: Vec<Vec<f64>> = (0..15).map(|i| vec![-1.9 + 0.27 * i as f64]).collect();
            let y: Vec<f64> = x.iter().map(|v| target.eval_unchecked(v)).collect();
            if y.iter().any(|v| !v.is_finite()) {
                return Ok(());
            }
            let data = Dataset::new(x, y).unwrap();
            let out = lm_fit(&p, &data, &cfg, &mut rng::seeded(seed));
            prop_assert!(out.calls <= cfg.max_calls);
            if out.status == FitStatus::Degenerate || out.status == FitStatus::Skipped {
                prop_assert_eq!(&out.program, &p);
            }
            prop_assert!(ssr(&out.program, &data) <= ssr(&p, &data) * (1.0 + 1e-12), "{} -> {}", p, out.program);
            Ok(())
        })
        .unwrap();
}

#[test]
fn sine_frequency_matches_grid_oracle() {
    let data = grid_data(|x| (3.0 * x).sin(), 41);
    let start: Program = "1*sin(2.8*affine({x1})^1)^1".parse().unwrap();
    let cfg = FitConfig { fit_prob: 1.0, max_calls: 200, ..Default::default() };
    let out = lm_fit(&start, &data, &cfg, &mut rng::seeded(0));
    let inner = out.program.nodes()[0].arg.as_program().unwrap().nodes()[0].coeff;
    let (mut best_b, mut best) = (0.0, f64::INFINITY);
    for i in 0..=200_000 {
        let b = 2.5 + i as f64 * 5e-6;
        let s: f64 = data.x.iter().zip(&data.y).map(|(x, y)| (y - (b * x[0]).sin()).powi(2)).sum();
        if s < best {
            best = s;
            best_b = b;
        }
    }
    assert!((inner - best_b).abs() < 1e-4, "fitted {inner}, grid {best_b}");
    assert!((out.program.nodes()[0].coeff - 1.0).abs() < 1e-4);
}

fn small_run(seed: u64, workers: usize) -> RunReport {
    let data = generate_dataset(&benchmark("Nguyen-4").unwrap(), seed);
    let cfg = EngineConfig { seed, workers, generations: 12, loss_target: 0.0, ..EngineConfig::with_population(80) };
    evolve(&data, &OperatorPrior::uniform(), &cfg, LossKind::Chi2, &RegularizerConfig::default(), &FitConfig::default())
        .unwrap()
}

fn without_time(mut r: RunReport) -> RunReport {
    r.wall_time_s = 0.0;
    r
}

#[test]
fn runs_replay_from_seed() {
    let a = without_time(small_run(21, 1));
    let b = without_time(small_run(21, 1));
    assert_eq!(a, b);
    let c = without_time(small_run(22, 1));
    assert_ne!(a.best_serialized, c.best_serialized);
}

#[test]
fn worker_count_does_not_change_results() {
    assert_eq!(without_time(small_run(4, 1)), without_time(small_run(4, 3)));
}

#[test]
fn elitism_keeps_fitness_non_increasing() {
    for seed in 0..5 {
        let r = small_run(seed, 1);
        assert_eq!(r.fitness_trajectory.len(), r.generations_used);
        for w in r.fitness_trajectory.windows(2) {
            assert!(w[1] <= w[0], "seed {seed}: {:?}", r.fitness_trajectory);
        }
    }
}

#[test]
fn exact_seed_program_stops_at_first_generation() {
    let spec = benchmark("Nguyen-1").unwrap();
    let data = generate_dataset(&spec, 0);
    let cfg = EngineConfig::with_population(50);
    // x^3 exceeds the default interval, so build it as a product
    let terms: Vec<Monomial> = (1..=3).map(|k| Monomial { coeff: 1.0, powers: vec![k] }).collect();
    let truth = Program::polynomial(&terms, cfg.exponents).unwrap();
    let fit = FitConfig::default();
    let reg = RegularizerConfig::default();
    let prior = OperatorPrior::uniform();
    let report = Evolution::new(&data, &prior, &cfg, LossKind::Chi2, &reg, &fit).unwrap().run(vec![truth]).unwrap();
    assert_eq!(report.generations_used, 1);
    assert!(report.reached_target);
    assert!(score_recovery(&report.best_program, &spec, 0).exact);
}

#[test]
fn every_benchmark_scores_its_own_truth_perfectly() {
    for spec in benchmarks() {
        let data = generate_dataset(&spec, 1);
        assert_eq!(data.len(), spec.domain.size(), "{}", spec.name);
        assert!(data.y.iter().all(|v| v.is_finite()), "{}", spec.name);
        if let Some(p) = spec.ground_truth.as_program() {
            let rec = score_recovery(p, &spec, 1);
            assert_eq!(rec.r2, 1.0, "{}", spec.name);
            assert!(rec.exact, "{}", spec.name);
        }
    }
}

#[test]
fn noise_variance_matches_lambda() {
    let n = 200_000;
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
    let y: Vec<f64> = x.iter().map(|p| (7.0 * p[0]).sin() * 3.0).collect();
    let clean = Dataset::new(x, y).unwrap();
    let sigma_f_sq = sample_variance(&clean.y);
    for lambda in [0.001, 0.072, 0.5] {
        let noisy = add_noise(&clean, lambda, 9).unwrap();
        let diff: Vec<f64> = noisy.y.iter().zip(&clean.y).map(|(a, b)| a - b).collect();
        let v = sample_variance(&diff);
        let want = lambda * sigma_f_sq;
        assert!((v - want).abs() <= 0.02 * want, "lambda {lambda}: {v} vs {want}");
    }
}
