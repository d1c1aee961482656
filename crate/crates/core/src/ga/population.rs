//! Population state and the synchronous parallel fitness evaluation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::GaConfig;
use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::likelihood::fitness_and_ranking;
use crate::partition::Partition;

/// Best/mean/standard deviation of fitness for one evaluated generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub(crate) individuals: Vec<Partition>,
    pub(crate) fitnesses: Vec<f64>,
    /// Cluster labels of each individual by decreasing contribution, cached at evaluation.
    pub(crate) rankings: Vec<Vec<u32>>,
    pub(crate) generation: usize,
    pub(crate) best: Option<(Partition, f64)>,
    pub(crate) stall_counter: usize,
    pub(crate) evaluated: bool,
}

impl Population {
    /// Wraps existing individuals; fitness must be evaluated before selection.
    pub fn from_individuals(individuals: Vec<Partition>) -> Result<Self> {
        let n = individuals.first().map(Partition::len).unwrap_or(0);
        if individuals.is_empty() {
            return Err(Error::invalid("population must not be empty"));
        }
        if let Some(p) = individuals.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.len(),
            });
        }
        let size = individuals.len();
        Ok(Self {
            individuals,
            fitnesses: vec![0.0; size],
            rankings: vec![Vec::new(); size],
            generation: 0,
            best: None,
            stall_counter: 0,
            evaluated: false,
        })
    }

    pub fn individuals(&self) -> &[Partition] {
        &self.individuals
    }

    pub fn fitnesses(&self) -> &[f64] {
        &self.fitnesses
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn best(&self) -> Option<(&Partition, f64)> {
        self.best.as_ref().map(|(p, f)| (p, *f))
    }

    pub fn stall_counter(&self) -> usize {
        self.stall_counter
    }

    /// Number of assets each individual covers.
    pub fn n_assets(&self) -> usize {
        self.individuals[0].len()
    }
}

/// Uniform labels in `1..=n`, before canonicalization.
pub fn draw_labels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(1..=n as u32)).collect()
}

/// Creates `cfg.population_size` random canonical partitions of `n` assets.
pub fn initialize_population(cfg: &GaConfig, n: usize, seed: u64) -> Result<Population> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    initialize_with_rng(cfg, n, &mut rng)
}

pub(crate) fn initialize_with_rng<R: Rng + ?Sized>(
    cfg: &GaConfig,
    n: usize,
    rng: &mut R,
) -> Result<Population> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "clustering needs at least 2 assets, got {n}"
        )));
    }
    if cfg.population_size == 0 {
        return Err(Error::invalid("population size must be positive"));
    }
    let individuals = (0..cfg.population_size)
        .map(|_| Partition::canonical(draw_labels(n, rng)))
        .collect();
    Population::from_individuals(individuals)
}

/// The slave side of the master-slave scheme: a fixed pool of workers that
/// evaluates fitness of a whole population and returns only once every
/// individual is done.
pub struct FitnessPool {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl FitnessPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("mlclust-fitness-{i}"))
                    .build()
                    .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { workers, pool })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn evaluate_all(&self, individuals: &[Partition], c: &CorrelationMatrix) -> Vec<(f64, Vec<u32>)> {
        match &self.pool {
            None => individuals
                .iter()
                .map(|p| fitness_and_ranking(p.labels(), c))
                .collect(),
            Some(pool) => pool.install(|| {
                individuals
                    .par_iter()
                    .with_min_len(8)
                    .map(|p| fitness_and_ranking(p.labels(), c))
                    .collect()
            }),
        }
    }

    /// Fitness of each partition, in input order.
    pub fn fitness_of(&self, individuals: &[Partition], c: &CorrelationMatrix) -> Vec<f64> {
        self.evaluate_all(individuals, c).into_iter().map(|(f, _)| f).collect()
    }
}

/// Evaluates every individual (in parallel when the pool has several workers),
/// then updates the generation statistics and the best-so-far individual.
///
/// Each fitness is a pure function of its individual, so the result does not
/// depend on the number of workers.
pub fn evaluate_fitness(
    pop: &mut Population,
    c: &CorrelationMatrix,
    pool: &FitnessPool,
) -> Result<GenerationStats> {
    if pop.n_assets() != c.n() {
        return Err(Error::DimensionMismatch {
            expected: c.n(),
            actual: pop.n_assets(),
        });
    }
    let results = pool.evaluate_all(&pop.individuals, c);
    for (i, (f, ranking)) in results.into_iter().enumerate() {
        pop.fitnesses[i] = f;
        pop.rankings[i] = ranking;
    }
    pop.evaluated = true;

    let (best_idx, best) = pop
        .fitnesses
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, f)| if f > acc.1 { (i, f) } else { acc });
    let len = pop.fitnesses.len() as f64;
    let mean = pop.fitnesses.iter().sum::<f64>() / len;
    let var = pop.fitnesses.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / len;

    match &pop.best {
        Some((_, f)) if *f >= best => {}
        _ => pop.best = Some((pop.individuals[best_idx].clone(), best)),
    }
    Ok(GenerationStats {
        generation: pop.generation,
        best,
        mean,
        std: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initialization_is_canonical_and_reproducible() {
        let cfg = GaConfig::default().with_population_size(4);
        let a = initialize_population(&cfg, 3, 11).unwrap();
        let b = initialize_population(&cfg, 3, 11).unwrap();
        assert_eq!(a.individuals(), b.individuals());
        assert_eq!(a.len(), 4);
        for p in a.individuals() {
            assert_eq!(p.len(), 3);
            assert_eq!(p, &Partition::from_labels(p.labels().to_vec()).unwrap());
        }
    }

    #[test]
    fn single_asset_is_rejected() {
        let cfg = GaConfig::default();
        assert!(matches!(
            initialize_population(&cfg, 1, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn drawn_labels_are_uniform() {
        // Chi-squared-style check: every label count within 3 sigma of the
        // binomial mean over 10^5 draws.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10;
        let draws = 100_000 / n;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            for l in draw_labels(n, &mut rng) {
                counts[l as usize - 1] += 1;
            }
        }
        let total = (draws * n) as f64;
        let p = 1.0 / n as f64;
        let mean = total * p;
        let sigma = (total * p * (1.0 - p)).sqrt();
        for (l, &k) in counts.iter().enumerate() {
            assert!(
                (k as f64 - mean).abs() < 3.0 * sigma,
                "label {} drawn {k} times, expected {mean} ± {}",
                l + 1,
                3.0 * sigma
            );
        }
        let chi2: f64 = counts.iter().map(|&k| (k as f64 - mean).powi(2) / mean).sum();
        // 99.9% quantile of chi-squared with 9 degrees of freedom.
        assert!(chi2 < 27.877, "chi2 = {chi2}");
    }

    #[test]
    fn singleton_population_has_zero_fitness() {
        let c = CorrelationMatrix::identity(5);
        let mut pop = Population::from_individuals(vec![Partition::singletons(5); 6]).unwrap();
        let stats = evaluate_fitness(&mut pop, &c, &FitnessPool::new(1).unwrap()).unwrap();
        assert!(pop.fitnesses().iter().all(|&f| f == 0.0));
        assert_eq!(stats.best, 0.0);
        assert_eq!(stats.mean, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = CorrelationMatrix::identity(4);
        let mut pop = Population::from_individuals(vec![Partition::singletons(5)]).unwrap();
        assert!(evaluate_fitness(&mut pop, &c, &FitnessPool::new(1).unwrap()).is_err());
    }
}
