//! Genetic operators: scaling, stochastic universal sampling, crossover and
//! mutation. All randomness comes from the caller's generator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::population::Population;
use crate::correlation::CorrelationMatrix;
use crate::likelihood::fitness_and_ranking;
use crate::partition::Partition;

/// Fitness scaling applied before selection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitnessScaling {
    /// Raw fitness, shifted to be non-negative if needed.
    #[default]
    Identity,
    /// Linear map `a f + b` that keeps the mean and gives the best individual
    /// `multiple` times the mean (clipped so the worst maps to 0).
    Linear { multiple: f64 },
    /// Weight `1 / sqrt(rank)`, rank 1 being the fittest.
    Rank,
}

/// Maps raw fitness to non-negative selection weights.
pub fn scale_fitness_with(fitnesses: &[f64], scaling: FitnessScaling) -> Vec<f64> {
    let shifted = scale_fitness(fitnesses);
    match scaling {
        FitnessScaling::Identity => shifted,
        FitnessScaling::Linear { multiple } => {
            let len = shifted.len() as f64;
            let mean = shifted.iter().sum::<f64>() / len;
            let max = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = shifted.iter().copied().fold(f64::INFINITY, f64::min);
            if !(max > mean) {
                return vec![1.0; shifted.len()];
            }
            let (a, b) = if min > (multiple * mean - max) / (multiple - 1.0) {
                let a = (multiple - 1.0) * mean / (max - mean);
                (a, mean * (1.0 - a))
            } else {
                let a = mean / (mean - min);
                (a, -min * a)
            };
            shifted.iter().map(|f| (a * f + b).max(0.0)).collect()
        }
        FitnessScaling::Rank => {
            let mut order: Vec<usize> = (0..shifted.len()).collect();
            order.sort_by(|&x, &y| shifted[y].total_cmp(&shifted[x]).then(x.cmp(&y)));
            let mut out = vec![0.0; shifted.len()];
            for (rank, &i) in order.iter().enumerate() {
                out[i] = 1.0 / ((rank + 1) as f64).sqrt();
            }
            out
        }
    }
}

/// Shifts fitness so the minimum is zero when any value is negative; clamped
/// log-likelihoods are never negative, so in practice this is the identity.
pub fn scale_fitness(fitnesses: &[f64]) -> Vec<f64> {
    let min = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        fitnesses.iter().map(|f| f - min).collect()
    } else {
        fitnesses.to_vec()
    }
}

/// Stochastic universal sampling over non-negative weights.
///
/// Lays the individuals on a line in proportion to their weight and reads it
/// with `count` equally spaced pointers after a single random offset. Falls
/// back to uniform sampling when the total weight is zero.
pub fn sus_indices<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    assert!(!weights.is_empty(), "cannot select from an empty population");
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return (0..count).map(|_| rng.random_range(0..weights.len())).collect();
    }
    let step = total / count as f64;
    let start = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(count);
    let mut idx = 0;
    let mut cumulative = weights[0];
    for k in 0..count {
        let pointer = start + k as f64 * step;
        while pointer >= cumulative && idx + 1 < weights.len() {
            idx += 1;
            cumulative += weights[idx];
        }
        out.push(idx);
    }
    out
}

/// Selects `count` parents by SUS on the scaled fitness of an evaluated population.
pub fn select_sus<R: Rng + ?Sized>(pop: &Population, count: usize, rng: &mut R) -> Vec<Partition> {
    sus_indices(&scale_fitness(pop.fitnesses()), count, rng)
        .into_iter()
        .map(|i| pop.individuals()[i].clone())
        .collect()
}

/// Classic one-point recombination: genes before `cut` come from the first
/// parent, the rest from the second. Offspring are canonicalized.
pub fn one_point_crossover(a: &Partition, b: &Partition, cut: usize) -> (Partition, Partition) {
    assert_eq!(a.len(), b.len(), "parents must have equal length");
    let cut = cut.min(a.len());
    let mut x = a.labels()[..cut].to_vec();
    x.extend_from_slice(&b.labels()[cut..]);
    let mut y = b.labels()[..cut].to_vec();
    y.extend_from_slice(&a.labels()[cut..]);
    (Partition::canonical(x), Partition::canonical(y))
}

/// Copies `receiver` and moves every member of `donor`'s cluster `label` into
/// one fresh cluster, overwriting their previous membership.
pub fn transplant_cluster(receiver: &Partition, donor: &Partition, label: u32) -> Partition {
    let fresh = receiver.len() as u32 + 1;
    let mut labels = receiver.labels().to_vec();
    for (l, &d) in labels.iter_mut().zip(donor.labels()) {
        if d == label {
            *l = fresh;
        }
    }
    Partition::canonical(labels)
}

/// Whether `members` (ascending asset indices) already form one whole cluster of `p`.
fn is_cluster_of(p: &Partition, members: &[usize]) -> bool {
    let label = p.label(members[0]);
    members.iter().all(|&i| p.label(i) == label)
        && p.labels().iter().filter(|&&l| l == label).count() == members.len()
}

/// Transplants the donor's best-ranked cluster that the receiver does not
/// already contain. Returns a copy of the receiver when every donor cluster
/// is already present.
pub(crate) fn transplant_best(receiver: &Partition, donor: &Partition, donor_ranking: &[u32]) -> Partition {
    let clusters = donor.clusters();
    for &label in donor_ranking {
        let members = &clusters[label as usize - 1];
        if !is_cluster_of(receiver, members) {
            return transplant_cluster(receiver, donor, label);
        }
    }
    receiver.clone()
}

/// Knowledge-based crossover.
///
/// With probability `p_knowledge`, each offspring is a copy of its own parent
/// into which the other parent's highest-likelihood cluster is transplanted.
/// Clusters are ranked by their log-likelihood contribution; a cluster the
/// receiving parent already has is skipped in favour of the next one.
/// Otherwise one-point crossover at a uniform cut in `1..n`.
pub fn crossover_knowledge<R: Rng + ?Sized>(
    a: &Partition,
    b: &Partition,
    c: &CorrelationMatrix,
    p_knowledge: f64,
    rng: &mut R,
) -> (Partition, Partition) {
    let rank_a = fitness_and_ranking(a.labels(), c).1;
    let rank_b = fitness_and_ranking(b.labels(), c).1;
    crossover_with_rankings(a, b, &rank_a, &rank_b, p_knowledge, rng)
}

pub(crate) fn crossover_with_rankings<R: Rng + ?Sized>(
    a: &Partition,
    b: &Partition,
    rank_a: &[u32],
    rank_b: &[u32],
    p_knowledge: f64,
    rng: &mut R,
) -> (Partition, Partition) {
    assert_eq!(a.len(), b.len(), "parents must have equal length");
    if rng.random::<f64>() < p_knowledge {
        (transplant_best(a, b, rank_b), transplant_best(b, a, rank_a))
    } else if a.len() < 2 {
        (a.clone(), b.clone())
    } else {
        let cut = rng.random_range(1..a.len());
        one_point_crossover(a, b, cut)
    }
}

/// Random-replacement mutation on raw labels: each gene is redrawn uniformly
/// from `1..=n` with probability `p_mutation`. Returns the number of redraws.
pub fn mutate_labels<R: Rng + ?Sized>(labels: &mut [u32], p_mutation: f64, rng: &mut R) -> usize {
    let n = labels.len() as u32;
    let mut redrawn = 0;
    for l in labels.iter_mut() {
        if rng.random::<f64>() < p_mutation {
            *l = rng.random_range(1..=n);
            redrawn += 1;
        }
    }
    redrawn
}

/// How the mutation probability is applied to an offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationScheme {
    /// With probability `p_mutation` the offspring is mutated: one gene,
    /// chosen uniformly, moves to a uniformly chosen existing cluster or to a
    /// new singleton (labels `1..=k+1` for a `k`-cluster partition).
    #[default]
    PerIndividual,
    /// Every gene is redrawn independently with probability `p_mutation`.
    PerGene,
}

/// Applies `scheme` and canonicalizes; unchanged offspring are returned as is.
pub fn mutate_with<R: Rng + ?Sized>(
    p: &Partition,
    p_mutation: f64,
    scheme: MutationScheme,
    rng: &mut R,
) -> Partition {
    match scheme {
        MutationScheme::PerGene => mutate(p, p_mutation, rng),
        MutationScheme::PerIndividual => {
            if p.is_empty() || rng.random::<f64>() >= p_mutation {
                return p.clone();
            }
            let n = p.len();
            let mut labels = p.labels().to_vec();
            let gene = rng.random_range(0..n);
            let k = p.num_clusters() as u32;
            labels[gene] = rng.random_range(1..=(k + 1).min(n as u32));
            Partition::canonical(labels)
        }
    }
}

/// Per-gene random-replacement mutation followed by canonicalization.
pub fn mutate<R: Rng + ?Sized>(p: &Partition, p_mutation: f64, rng: &mut R) -> Partition {
    let mut labels = p.labels().to_vec();
    if mutate_labels(&mut labels, p_mutation, rng) == 0 {
        return p.clone();
    }
    Partition::canonical(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn counts(indices: &[usize], len: usize) -> Vec<usize> {
        let mut c = vec![0; len];
        for &i in indices {
            c[i] += 1;
        }
        c
    }

    #[test]
    fn sus_with_single_mass_picks_only_that_individual() {
        for seed in 0..20 {
            let picks = sus_indices(&[0.0, 2.5, 0.0, 0.0], 7, &mut rng(seed));
            assert!(picks.iter().all(|&i| i == 1));
        }
    }

    #[test]
    fn sus_equal_weights_pick_each_once() {
        for seed in 0..50 {
            let picks = sus_indices(&[1.0, 1.0, 1.0, 1.0], 4, &mut rng(seed));
            assert_eq!(counts(&picks, 4), vec![1, 1, 1, 1]);
        }
    }

    #[test]
    fn sus_three_to_one() {
        // pointers at r, r+1, r+2, r+3 with r in [0, 1): three land in [0, 3).
        for seed in 0..50 {
            let picks = sus_indices(&[3.0, 1.0], 4, &mut rng(seed));
            assert_eq!(counts(&picks, 2), vec![3, 1]);
        }
    }

    #[test]
    fn sus_expected_copies_match_fitness_share() {
        let w = [0.5, 2.0, 1.0, 0.25, 1.25];
        let total: f64 = w.iter().sum();
        let count = 7;
        for seed in 0..200 {
            let c = counts(&sus_indices(&w, count, &mut rng(seed)), w.len());
            for (i, &k) in c.iter().enumerate() {
                let expected = count as f64 * w[i] / total;
                // minimal spread: within one copy of the expectation
                assert!((k as f64 - expected).abs() < 1.0 + 1e-12, "{i}: {k} vs {expected}");
            }
        }
    }

    #[test]
    fn sus_zero_total_falls_back_to_uniform() {
        let picks = sus_indices(&[0.0; 5], 5000, &mut rng(3));
        for k in counts(&picks, 5) {
            assert!((800..1200).contains(&k));
        }
    }

    #[test]
    fn scaling_is_identity_for_non_negative_values() {
        assert_eq!(scale_fitness(&[0.0, 1.5, 2.0]), vec![0.0, 1.5, 2.0]);
        assert_eq!(scale_fitness(&[-1.0, 1.0]), vec![0.0, 2.0]);
    }

    #[test]
    fn identical_parents_reproduce_themselves() {
        let c = CorrelationMatrix::identity(6);
        let p = Partition::from_labels(vec![1, 2, 1, 3, 3, 2]).unwrap();
        for pk in [0.0, 1.0] {
            for seed in 0..10 {
                let (x, y) = crossover_knowledge(&p, &p, &c, pk, &mut rng(seed));
                assert_eq!(x, p);
                assert_eq!(y, p);
            }
        }
    }

    #[test]
    fn one_point_matches_string_recombination() {
        let a = Partition::from_labels(vec![1, 1, 2, 2, 3, 3]).unwrap();
        let b = Partition::from_labels(vec![1, 2, 3, 4, 5, 6]).unwrap();
        let (x, y) = one_point_crossover(&a, &b, 3);
        assert_eq!(x, Partition::from_labels(vec![1, 1, 2, 4, 5, 6]).unwrap());
        assert_eq!(y, Partition::from_labels(vec![1, 2, 3, 2, 3, 3]).unwrap());
    }

    #[test]
    fn transplant_moves_whole_cluster() {
        let receiver = Partition::from_labels(vec![1, 1, 1, 1, 2, 2]).unwrap();
        let donor = Partition::from_labels(vec![1, 2, 2, 1, 1, 2]).unwrap();
        let child = transplant_cluster(&receiver, &donor, 2);
        assert_eq!(child.labels(), &[1, 2, 2, 1, 3, 2]);
    }

    #[test]
    fn mutation_without_probability_is_identity() {
        let p = Partition::from_labels(vec![1, 2, 2, 3, 1]).unwrap();
        for seed in 0..10 {
            assert_eq!(mutate(&p, 0.0, &mut rng(seed)), p);
        }
    }

    #[test]
    fn full_mutation_changes_expected_fraction() {
        let n = 10;
        let trials = 10_000;
        let mut r = rng(9);
        let mut changed = 0usize;
        for _ in 0..trials {
            let mut labels = vec![1u32; n];
            mutate_labels(&mut labels, 1.0, &mut r);
            changed += labels.iter().filter(|&&l| l != 1).count();
        }
        let frac = changed as f64 / (n * trials) as f64;
        let expected = (n - 1) as f64 / n as f64;
        assert!((frac - expected).abs() < 0.01, "{frac} vs {expected}");
    }

    #[test]
    fn mutation_count_is_binomial() {
        let mut r = rng(10);
        let trials = 10_000;
        let total: usize = (0..trials)
            .map(|_| {
                let mut labels = vec![1u32; 18];
                mutate_labels(&mut labels, 0.1, &mut r)
            })
            .sum();
        let mean = total as f64 / trials as f64;
        // sd of the mean: sqrt(18 * 0.1 * 0.9 / 10^4) ≈ 0.0127
        assert!((mean - 1.8).abs() < 0.05, "mean {mean}");
    }
}
