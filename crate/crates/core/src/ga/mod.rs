//! Synchronous master-slave genetic algorithm over set partitions.
//!
//! The master owns the population and applies every genetic operator with a
//! single random stream, in a fixed individual order. Only fitness evaluation
//! is farmed out to the worker pool, behind a full barrier, so results are
//! identical for any number of workers.

mod config;
mod operators;
mod population;

pub use config::{default_workers, GaConfig};
pub use operators::{
    crossover_knowledge, mutate, mutate_with, scale_fitness_with, FitnessScaling, MutationScheme, mutate_labels, one_point_crossover, scale_fitness, select_sus,
    sus_indices, transplant_cluster,
};
pub use population::{
    draw_labels, evaluate_fitness, initialize_population, FitnessPool, GenerationStats, Population,
};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::likelihood::dissolve_flat_clusters;
use crate::partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// Ran the configured number of generations.
    MaxGenerations,
    /// Best fitness improved by less than the tolerance for the stall window.
    Stalled,
    /// Every individual in the population is the same partition.
    Converged,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::MaxGenerations => "max_generations",
            TerminationReason::Stalled => "stalled",
            TerminationReason::Converged => "converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_partition: Partition,
    pub best_fitness: f64,
    pub generations_run: usize,
    pub termination_reason: TerminationReason,
    pub fitness_history: Vec<GenerationStats>,
}

/// Runs the genetic algorithm to maximize the log-likelihood of `c`.
///
/// Each generation: evaluate (parallel barrier), record statistics, test the
/// termination criteria, copy the elite unchanged, select parents by SUS,
/// recombine with probability `p_crossover`, mutate, and replace the non-elite
/// slots with the offspring.
pub fn evolve(c: &CorrelationMatrix, cfg: &GaConfig) -> Result<GaResult> {
    cfg.validate()?;
    let pool = FitnessPool::new(cfg.workers)?;
    evolve_with_pool(c, cfg, &pool)
}

/// [`evolve`] with a caller-provided worker pool, which is reused across runs.
pub fn evolve_with_pool(c: &CorrelationMatrix, cfg: &GaConfig, pool: &FitnessPool) -> Result<GaResult> {
    cfg.validate()?;
    let n = c.n();
    if n < 2 {
        return Err(Error::invalid(format!(
            "clustering needs at least 2 assets, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop = population::initialize_with_rng(cfg, n, &mut rng)?;
    let mut history = Vec::new();
    let mut previous_best: Option<f64> = None;

    let reason = loop {
        let stats = evaluate_fitness(&mut pop, c, pool)?;
        history.push(stats);

        let best = pop.best.as_ref().map(|(_, f)| *f).unwrap_or(0.0);
        if let Some(prev) = previous_best {
            if best - prev >= cfg.error_tolerance {
                pop.stall_counter = 0;
            } else {
                pop.stall_counter += 1;
            }
        }
        previous_best = Some(best);

        if pop.individuals.windows(2).all(|w| w[0] == w[1]) {
            break TerminationReason::Converged;
        }
        if pop.stall_counter >= cfg.stall_generations {
            break TerminationReason::Stalled;
        }
        if pop.generation + 1 >= cfg.max_generations {
            break TerminationReason::MaxGenerations;
        }

        next_generation(&mut pop, cfg, &mut rng);
    };

    let (best, best_fitness) = pop.best.expect("population evaluated at least once");
    // Clusters with no net internal correlation are reported as singletons.
    let best_partition = dissolve_flat_clusters(&best, c)?;
    Ok(GaResult {
        best_partition,
        best_fitness,
        generations_run: pop.generation + 1,
        termination_reason: reason,
        fitness_history: history,
    })
}

/// Indices of the `k` fittest individuals, ties broken by position.
fn elite_indices(fitnesses: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

fn next_generation<R: Rng + ?Sized>(pop: &mut Population, cfg: &GaConfig, rng: &mut R) {
    let size = pop.individuals.len();
    let elite = elite_indices(&pop.fitnesses, cfg.elite_size);
    let offspring_needed = size - elite.len();

    let weights = scale_fitness_with(&pop.fitnesses, cfg.scaling);
    let mut parents = sus_indices(&weights, offspring_needed + offspring_needed % 2, rng);
    // SUS returns parents grouped by position; shuffle so pairs are mixed.
    parents.shuffle(rng);

    let mut next: Vec<Partition> = elite.iter().map(|&i| pop.individuals[i].clone()).collect();
    for pair in parents.chunks(2) {
        let (ia, ib) = (pair[0], pair[1]);
        let (a, b) = (&pop.individuals[ia], &pop.individuals[ib]);
        let (x, y) = if rng.random::<f64>() < cfg.p_crossover {
            operators::crossover_with_rankings(
                a,
                b,
                &pop.rankings[ia],
                &pop.rankings[ib],
                cfg.p_knowledge_crossover,
                rng,
            )
        } else {
            (a.clone(), b.clone())
        };
        for child in [x, y] {
            if next.len() < size {
                next.push(mutate_with(&child, cfg.p_mutation, cfg.mutation, rng));
            }
        }
    }
    debug_assert_eq!(next.len(), size);

    pop.individuals = next;
    pop.generation += 1;
    pop.evaluated = false;
}
