use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConfigError, EngineConfig, OperatorPrior, Variation, VariationKind};
use crate::dataset::Dataset;
use crate::diversity::{operator_frequencies, shannon_diversity};
use crate::expr::{ExprError, LengthMode, Program};
use crate::fit::{lm_fit, FitConfig, FitConfigError};
use crate::loss::{loss_unchecked, r_squared, spearman_rho, LossError, LossKind, RegularizerConfig};
use crate::rng;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fit(#[from] FitConfigError),
    #[error(transparent)]
    Regularizer(#[from] LossError),
    #[error("initial program {index} is invalid: {source}")]
    InitialProgram { index: usize, source: ExprError },
    #[error("program references x{needed} but the dataset has {got} input columns")]
    Arity { needed: usize, got: usize },
}

/// Outcome of one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub best_program: Program,
    pub best_serialized: String,
    /// Raw loss of the best program on the search data.
    pub loss: f64,
    pub r2: f64,
    pub spearman: f64,
    /// Exponent-weighted length of the best program.
    pub length: u64,
    /// Lowest raw loss in each evaluated generation.
    pub loss_trajectory: Vec<f64>,
    /// Lowest length-regularized fitness in each evaluated generation.
    pub fitness_trajectory: Vec<f64>,
    pub generations_used: usize,
    pub reached_target: bool,
    pub wall_time_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
struct Scored {
    program: Program,
    loss: f64,
    /// Loss plus length and threshold terms; the generation-dependent
    /// diversity term only enters selection.
    fitness: f64,
}

// stream kinds, combined with generation and candidate index into stream ids
const INIT: u64 = 0;
const EVAL: u64 = 1;
const SELECT: u64 = 2;
const VARY: u64 = 3;

/// Redraws of a crossover mate that equals the first parent.
const MATE_DRAWS: usize = 8;

fn stream_id(generation: usize, kind: u64, index: usize) -> u64 {
    ((generation as u64) << 32) | (kind << 28) | (index as u64 & 0x0fff_ffff)
}

/// A configured search over one dataset.
pub struct Evolution<'a> {
    data: &'a Dataset,
    prior: &'a OperatorPrior,
    cfg: &'a EngineConfig,
    loss: LossKind,
    reg: &'a RegularizerConfig,
    fit: &'a FitConfig,
}

/// Runs a full search with a randomly initialized population.
pub fn evolve(
    data: &Dataset,
    prior: &OperatorPrior,
    cfg: &EngineConfig,
    loss: LossKind,
    reg: &RegularizerConfig,
    fit: &FitConfig,
) -> Result<RunReport, EngineError> {
    Evolution::new(data, prior, cfg, loss, reg, fit)?.run(Vec::new())
}

impl<'a> Evolution<'a> {
    pub fn new(
        data: &'a Dataset,
        prior: &'a OperatorPrior,
        cfg: &'a EngineConfig,
        loss: LossKind,
        reg: &'a RegularizerConfig,
        fit: &'a FitConfig,
    ) -> Result<Self, EngineError> {
        cfg.validate()?;
        fit.validate()?;
        reg.validate()?;
        Ok(Evolution { data, prior, cfg, loss, reg, fit })
    }

    fn variation(&self) -> Variation<'_> {
        Variation::new(self.prior, self.cfg, self.fit, self.data.arity())
    }

    fn score(&self, program: Program, rng: &mut impl Rng) -> Scored {
        let program = if self.fit.max_calls > 0 { lm_fit(&program, self.data, self.fit, rng).program } else { program };
        let yhat: Vec<f64> = self.data.x.iter().map(|x| program.eval_unchecked(x)).collect();
        let loss = loss_unchecked(self.loss, &self.data.y, &yhat);
        let fitness = loss + self.reg.static_penalty(&program);
        Scored { program, loss, fitness }
    }

    fn map_indexed<T, F>(&self, pool: Option<&rayon::ThreadPool>, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).map(f).collect(),
        }
    }

    /// Runs the search. `initial` programs (canonicalized) take the first
    /// population slots; the rest are generated.
    pub fn run(&self, initial: Vec<Program>) -> Result<RunReport, EngineError> {
        let start = Instant::now();
        let cfg = self.cfg;
        let seed = cfg.seed;
        let range = cfg.exponents;
        let arity = self.data.arity();
        let mut seeds = Vec::with_capacity(initial.len());
        for (index, p) in initial.into_iter().take(cfg.population_size).enumerate() {
            p.validate(range).map_err(|source| EngineError::InitialProgram { index, source })?;
            if p.arity() > arity {
                return Err(EngineError::Arity { needed: p.arity(), got: arity });
            }
            seeds.push(p.canonicalize_in(range));
        }
        let pool = if cfg.workers > 1 {
            rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().ok()
        } else {
            None
        };
        let pool = pool.as_ref();
        let variation = self.variation();
        let n_seeds = seeds.len();
        let fresh = self.map_indexed(pool, cfg.population_size - n_seeds, |i| {
            variation.generate(&mut rng::stream(seed, stream_id(0, INIT, i)))
        });
        let mut pending: Vec<Program> = seeds.into_iter().chain(fresh).collect();
        let mut carried: Vec<Scored> = Vec::new();

        let mix = WeightedIndex::new(cfg.operator_mix.as_array()).expect("validated mix");
        let mut loss_trajectory = Vec::new();
        let mut fitness_trajectory = Vec::new();
        let mut best: Option<Scored> = None;
        let mut winner: Option<Scored> = None;
        let mut generation = 0;
        while generation < cfg.generations {
            let scored_new = self.map_indexed(pool, pending.len(), |i| {
                let mut r = rng::stream(seed, stream_id(generation, EVAL, i));
                self.score(pending[i].clone(), &mut r)
            });
            let mut population = std::mem::take(&mut carried);
            population.extend(scored_new);

            let gen_loss = population.iter().map(|s| s.loss).fold(f64::INFINITY, f64::min);
            let leader = (0..population.len())
                .min_by(|&a, &b| population[a].fitness.total_cmp(&population[b].fitness).then(a.cmp(&b)))
                .expect("non-empty population");
            loss_trajectory.push(gen_loss);
            fitness_trajectory.push(population[leader].fitness);
            if best.as_ref().is_none_or(|b| population[leader].fitness < b.fitness) {
                best = Some(population[leader].clone());
            }
            generation += 1;

            let reached = population
                .iter()
                .filter(|s| s.loss <= cfg.loss_target)
                .min_by(|a, b| a.fitness.total_cmp(&b.fitness));
            if let Some(s) = reached {
                winner = Some(s.clone());
                break;
            }
            if generation == cfg.generations {
                break;
            }

            let mut selection: Vec<f64> = population.iter().map(|s| s.fitness).collect();
            if self.reg.diversity_weight != 0.0 {
                let programs: Vec<Program> = population.iter().map(|s| s.program.clone()).collect();
                let report = shannon_diversity(&operator_frequencies(&programs).expect("non-empty"));
                for (f, d) in selection.iter_mut().zip(&report.d) {
                    *f -= self.reg.diversity_weight * d;
                }
            }

            let mut order: Vec<usize> = (0..population.len()).collect();
            order.sort_by(|&a, &b| population[a].fitness.total_cmp(&population[b].fitness).then(a.cmp(&b)));
            carried = order[..cfg.elitism].iter().map(|&i| population[i].clone()).collect();

            let mut select_rng = rng::stream(seed, stream_id(generation, SELECT, 0));
            let parents: Vec<usize> = (0..cfg.parents)
                .map(|_| {
                    (0..cfg.tournament_size)
                        .map(|_| select_rng.random_range(0..population.len()))
                        .min_by(|&a, &b| selection[a].total_cmp(&selection[b]).then(a.cmp(&b)))
                        .expect("tournament size ≥ 1")
                })
                .collect();

            pending = self.map_indexed(pool, cfg.population_size - cfg.elitism, |i| {
                let mut r = rng::stream(seed, stream_id(generation, VARY, i));
                let kind = VariationKind::ALL[mix.sample(&mut r)];
                let p = &population[*parents.choose(&mut r).expect("parents ≥ 1")].program;
                let mut mate = p;
                if kind == VariationKind::Crossover {
                    // crossing a program with itself only replicates it
                    for _ in 0..MATE_DRAWS {
                        mate = &population[*parents.choose(&mut r).expect("parents ≥ 1")].program;
                        if mate != p {
                            break;
                        }
                    }
                }
                variation.apply(kind, p, mate, &mut r)
            });
        }

        let reached_target = winner.is_some();
        let chosen = winner.or(best).expect("at least one generation evaluated");
        let yhat: Vec<f64> = self.data.x.iter().map(|x| chosen.program.eval_unchecked(x)).collect();
        let r2 = r_squared(&self.data.y, &yhat).unwrap_or(if chosen.loss == 0.0 { 1.0 } else { 0.0 });
        Ok(RunReport {
            best_serialized: chosen.program.to_string(),
            length: chosen.program.length(LengthMode::ExponentWeighted),
            spearman: spearman_rho(&self.data.y, &yhat),
            r2,
            loss: chosen.loss,
            best_program: chosen.program,
            loss_trajectory,
            fitness_trajectory,
            generations_used: generation,
            reached_target,
            wall_time_s: start.elapsed().as_secs_f64(),
            seed,
        })
    }
}
