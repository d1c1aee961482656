//! Reference solvers: exhaustive enumeration and simulated annealing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::likelihood::{cluster_contribution, log_likelihood_labels};
use crate::partition::Partition;

/// Largest problem [`brute_force_max`] accepts; Bell(12) is about 4.2 million.
pub const MAX_BRUTE_FORCE_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best_partition: Partition,
    pub best_fitness: f64,
    /// Partitions scored; Bell(n) for the exhaustive search.
    pub partitions_examined: u64,
}

/// Bell number B(n), the number of set partitions of `n` items.
pub fn bell(n: usize) -> u64 {
    // Bell triangle: each row starts with the last entry of the previous one.
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// True if `(fa, a)` should replace `(fb, b)` as the incumbent.
///
/// Higher fitness wins; exact ties prefer more clusters, then the
/// lexicographically smaller label vector. Preferring more clusters makes
/// fully uncorrelated inputs return the all-singleton partition.
fn beats(fa: f64, a: &[u32], fb: f64, b: &[u32]) -> bool {
    if fa != fb {
        return fa > fb;
    }
    let (ka, kb) = (a.iter().max(), b.iter().max());
    if ka != kb {
        return ka > kb;
    }
    a < b
}

struct Enumerator<'a> {
    c: &'a CorrelationMatrix,
    labels: Vec<u32>,
    sizes: Vec<usize>,
    internal: Vec<f64>,
    best: Vec<u32>,
    best_fitness: f64,
    examined: u64,
}

impl<'a> Enumerator<'a> {
    fn new(c: &'a CorrelationMatrix) -> Self {
        let n = c.n();
        Self {
            c,
            labels: Vec::with_capacity(n),
            sizes: vec![0; n + 1],
            internal: vec![0.0; n + 1],
            best: Vec::new(),
            best_fitness: f64::NEG_INFINITY,
            examined: 0,
        }
    }

    fn push(&mut self, label: u32) {
        let i = self.labels.len();
        let row = self.c.row(i);
        let link: f64 = self
            .labels
            .iter()
            .zip(row)
            .filter(|(&l, _)| l == label)
            .map(|(_, &v)| v)
            .sum();
        self.labels.push(label);
        self.sizes[label as usize] += 1;
        self.internal[label as usize] += 1.0 + 2.0 * link;
    }

    fn pop(&mut self, saved_internal: f64) {
        let label = self.labels.pop().unwrap();
        self.sizes[label as usize] -= 1;
        self.internal[label as usize] = saved_internal;
    }

    /// Extends the current prefix (whose largest label is `max`) in all ways.
    fn descend(&mut self, max: u32) {
        let n = self.c.n();
        if self.labels.len() == n {
            self.examined += 1;
            let fitness: f64 = (1..=max as usize)
                .map(|s| cluster_contribution(self.sizes[s], self.internal[s]))
                .sum();
            if self.best.is_empty() || beats(fitness, &self.labels, self.best_fitness, &self.best) {
                self.best_fitness = fitness;
                self.best.clone_from(&self.labels);
            }
            return;
        }
        for label in 1..=max + 1 {
            let saved = self.internal[label as usize];
            self.push(label);
            self.descend(max.max(label));
            self.pop(saved);
        }
    }
}

/// All restricted-growth prefixes of length `len`.
fn prefixes(len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                let max = p.iter().copied().max().unwrap_or(0);
                (1..=max + 1).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

/// Exhaustive maximum over every set partition.
///
/// Partitions are visited as restricted-growth strings, so each set
/// partition is scored once, in canonical form.
pub fn brute_force_max(c: &CorrelationMatrix) -> Result<OracleResult> {
    brute_force_max_with(c, 1)
}

/// As [`brute_force_max`], sharding the enumeration by label prefix across
/// `workers` threads. The result does not depend on `workers`.
pub fn brute_force_max_with(c: &CorrelationMatrix, workers: usize) -> Result<OracleResult> {
    let n = c.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::TooLarge {
            n,
            limit: MAX_BRUTE_FORCE_N,
        });
    }
    if n == 0 {
        return Err(Error::invalid("empty correlation matrix"));
    }
    let shard = |prefix: &Vec<u32>| {
        let mut e = Enumerator::new(c);
        for &l in prefix {
            e.push(l);
        }
        e.descend(prefix.iter().copied().max().unwrap_or(0));
        (e.best, e.best_fitness, e.examined)
    };
    let prefix_len = if workers > 1 { n.min(4) } else { 0 };
    let shards = prefixes(prefix_len);
    let results: Vec<_> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| shards.par_iter().map(shard).collect())
    } else {
        shards.iter().map(shard).collect()
    };

    let mut examined = 0;
    let mut best: Option<(Vec<u32>, f64)> = None;
    for (labels, fitness, count) in results {
        examined += count;
        let replace = match &best {
            None => true,
            Some((b, fb)) => beats(fitness, &labels, *fb, b),
        };
        if replace {
            best = Some((labels, fitness));
        }
    }
    let (labels, _) = best.expect("at least one partition");
    let best_fitness = log_likelihood_labels(&labels, c);
    Ok(OracleResult {
        best_partition: Partition::canonical(labels),
        best_fitness,
        partitions_examined: examined,
    })
}

/// Geometric cooling schedule for [`simulated_annealing`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub initial_temperature: f64,
    pub cooling: f64,
    pub steps: usize,
    /// Moves attempted at each temperature before cooling.
    pub steps_per_temperature: usize,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            cooling: 0.995,
            steps: 100_000,
            steps_per_temperature: 100,
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_temperature > 0.0) || !self.initial_temperature.is_finite() {
            return Err(Error::invalid("initial temperature must be positive"));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::invalid("cooling factor must lie in (0, 1)"));
        }
        if self.steps_per_temperature == 0 {
            return Err(Error::invalid("steps per temperature must be positive"));
        }
        Ok(())
    }
}

/// Metropolis search with single-asset relabel moves, maximizing the
/// log-likelihood (energy `-L`). Returns the best partition seen.
pub fn simulated_annealing(c: &CorrelationMatrix, schedule: &AnnealingSchedule, seed: u64) -> Result<OracleResult> {
    simulated_annealing_traced(c, schedule, seed).map(|(r, _)| r)
}

/// As [`simulated_annealing`], also returning the best fitness seen at the
/// end of every temperature level.
pub fn simulated_annealing_traced(
    c: &CorrelationMatrix,
    schedule: &AnnealingSchedule,
    seed: u64,
) -> Result<(OracleResult, Vec<f64>)> {
    schedule.validate()?;
    let n = c.n();
    if n == 0 {
        return Err(Error::invalid("empty correlation matrix"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u32> = (1..=n as u32).collect();
    let mut sizes = vec![1usize; n + 1];
    sizes[0] = 0;
    let mut internal = vec![1.0; n + 1];
    let mut current = 0.0;
    let mut best = labels.clone();
    let mut best_fitness = 0.0;
    let mut trace = Vec::with_capacity(schedule.steps / schedule.steps_per_temperature + 1);
    let mut temperature = schedule.initial_temperature;
    let mut occupied = Vec::with_capacity(n);

    for step in 0..schedule.steps {
        let asset = rng.random_range(0..n);
        let old = labels[asset];
        // Candidate labels: every other occupied cluster plus one empty label.
        occupied.clear();
        occupied.extend((1..=n as u32).filter(|&l| sizes[l as usize] > 0 && l != old));
        let empty = (1..=n as u32).find(|&l| sizes[l as usize] == 0);
        if let Some(e) = empty.filter(|_| sizes[old as usize] > 1) {
            occupied.push(e);
        }
        if !occupied.is_empty() {
            let new = occupied[rng.random_range(0..occupied.len())];
            let row = c.row(asset);
            let (mut old_link, mut new_link) = (0.0, 0.0);
            for (i, &l) in labels.iter().enumerate() {
                if i == asset {
                    continue;
                }
                if l == old {
                    old_link += row[i];
                } else if l == new {
                    new_link += row[i];
                }
            }
            let (o, w) = (old as usize, new as usize);
            let old_after = internal[o] - 1.0 - 2.0 * old_link;
            let new_after = internal[w] + 1.0 + 2.0 * new_link;
            let delta = cluster_contribution(sizes[o] - 1, old_after) + cluster_contribution(sizes[w] + 1, new_after)
                - cluster_contribution(sizes[o], internal[o])
                - cluster_contribution(sizes[w], internal[w]);
            let accept = delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp();
            if accept {
                labels[asset] = new;
                sizes[o] -= 1;
                sizes[w] += 1;
                internal[o] = if sizes[o] == 0 { 0.0 } else { old_after };
                internal[w] = new_after;
                current += delta;
                if current > best_fitness {
                    best_fitness = current;
                    best.clone_from(&labels);
                }
            }
        }
        if (step + 1) % schedule.steps_per_temperature == 0 {
            temperature *= schedule.cooling;
            trace.push(best_fitness);
        }
    }

    let best_partition = Partition::canonical(best);
    let best_fitness = log_likelihood_labels(best_partition.labels(), c);
    Ok((
        OracleResult {
            best_partition,
            best_fitness,
            partitions_examined: schedule.steps as u64,
        },
        trace,
    ))
}
