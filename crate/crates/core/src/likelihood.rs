//! Log-likelihood of a cluster configuration under the one-factor-per-cluster
//! model. This is the fitness maximized by the genetic algorithm and by the
//! oracle solvers.
//!
//! For a cluster `s` with `n_s` members and internal correlation
//! `c_s = sum_{i,j in s} C_ij` (diagonal included), the per-feature
//! log-likelihood is
//!
//! ```text
//! L = 1/2 * sum_{s : n_s > 1} [ ln(n_s / c_s) + (n_s - 1) ln((n_s^2 - n_s) / (n_s^2 - c_s)) ]
//! ```
//!
//! Two clamps keep `L` finite and non-negative:
//!
//! * a cluster with `c_s <= n_s` (no net positive internal correlation)
//!   contributes exactly 0 and has optimal coupling 0;
//! * `c_s` is capped at `n_s^2 - PERFECT_CORRELATION_EPS` before the second
//!   logarithm, which otherwise diverges for perfectly correlated members.

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;

pub const PERFECT_CORRELATION_EPS: f64 = 1e-9;

/// Summary of one cluster of a partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub label: u32,
    pub size: usize,
    /// Sum of all pairwise correlations among members, diagonal included.
    pub internal_correlation: f64,
    /// Likelihood-maximizing loading of the cluster factor, in `[0, 1]`.
    pub coupling: f64,
}

/// Maximum-likelihood coupling for a cluster of `size` members.
pub fn optimal_coupling(size: usize, internal_correlation: f64) -> f64 {
    if size <= 1 || internal_correlation <= size as f64 {
        return 0.0;
    }
    let n = size as f64;
    ((internal_correlation - n) / (n * n - n)).sqrt().min(1.0)
}

/// One cluster's contribution to the log-likelihood, the 1/2 factor included.
pub fn cluster_contribution(size: usize, internal_correlation: f64) -> f64 {
    let n = size as f64;
    if size <= 1 || internal_correlation <= n {
        return 0.0;
    }
    let n2 = n * n;
    let c = internal_correlation.min(n2 - PERFECT_CORRELATION_EPS);
    0.5 * ((n / c).ln() + (n - 1.0) * ((n2 - n) / (n2 - c)).ln())
}

fn check_dims(p: &Partition, c: &CorrelationMatrix) -> Result<()> {
    if p.len() != c.n() {
        return Err(Error::DimensionMismatch {
            expected: c.n(),
            actual: p.len(),
        });
    }
    Ok(())
}

/// Size and internal correlation of every cluster, indexed by `label - 1`.
///
/// Works on any labels in `1..=max`; unused labels get size 0.
fn size_and_internal(labels: &[u32], c: &CorrelationMatrix) -> (Vec<usize>, Vec<f64>) {
    let k = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l as usize - 1] += 1;
    }
    // Bucket members by label so each cluster's sum only touches its own pairs.
    let mut offsets = vec![0usize; k + 1];
    for s in 0..k {
        offsets[s + 1] = offsets[s] + sizes[s];
    }
    let mut fill = offsets.clone();
    let mut members = vec![0usize; labels.len()];
    for (i, &l) in labels.iter().enumerate() {
        let s = l as usize - 1;
        members[fill[s]] = i;
        fill[s] += 1;
    }
    let mut internal = vec![0.0; k];
    for s in 0..k {
        let group = &members[offsets[s]..offsets[s + 1]];
        let mut off = 0.0;
        for (a, &i) in group.iter().enumerate() {
            let row = c.row(i);
            for &j in &group[a + 1..] {
                off += row[j];
            }
        }
        internal[s] = group.len() as f64 + 2.0 * off;
    }
    (sizes, internal)
}

/// Per-cluster statistics, one entry per distinct label in ascending label order.
pub fn cluster_stats(p: &Partition, c: &CorrelationMatrix) -> Result<Vec<ClusterStats>> {
    check_dims(p, c)?;
    let (sizes, internal) = size_and_internal(p.labels(), c);
    Ok(sizes
        .into_iter()
        .zip(internal)
        .enumerate()
        .map(|(s, (size, cs))| ClusterStats {
            label: s as u32 + 1,
            size,
            internal_correlation: cs,
            coupling: optimal_coupling(size, cs),
        })
        .collect())
}

/// Per-cluster likelihood contributions indexed by `label - 1`.
pub fn cluster_contributions(p: &Partition, c: &CorrelationMatrix) -> Result<Vec<f64>> {
    check_dims(p, c)?;
    let (sizes, internal) = size_and_internal(p.labels(), c);
    Ok(sizes
        .into_iter()
        .zip(internal)
        .map(|(n, cs)| cluster_contribution(n, cs))
        .collect())
}

/// Splits every multi-member cluster whose contribution is exactly zero into
/// singletons. Such a cluster shows no net internal correlation, and the
/// likelihood of the result is unchanged.
pub fn dissolve_flat_clusters(p: &Partition, c: &CorrelationMatrix) -> Result<Partition> {
    check_dims(p, c)?;
    let (sizes, internal) = size_and_internal(p.labels(), c);
    let flat: Vec<bool> = sizes
        .iter()
        .zip(&internal)
        .map(|(&n, &cs)| n > 1 && cluster_contribution(n, cs) == 0.0)
        .collect();
    if !flat.contains(&true) {
        return Ok(p.clone());
    }
    let mut next = p.num_clusters() as u32;
    let labels: Vec<u32> = p
        .labels()
        .iter()
        .map(|&l| {
            if flat[l as usize - 1] {
                next += 1;
                next
            } else {
                l
            }
        })
        .collect();
    // Labels may exceed n here; canonical renumbering brings them back.
    Ok(Partition::canonical(labels))
}

/// Per-feature log-likelihood of `p` given `c`. Always finite and `>= 0`.
pub fn log_likelihood(p: &Partition, c: &CorrelationMatrix) -> Result<f64> {
    check_dims(p, c)?;
    Ok(log_likelihood_labels(p.labels(), c))
}

/// Unchecked evaluation on raw positive labels of matching length.
pub(crate) fn log_likelihood_labels(labels: &[u32], c: &CorrelationMatrix) -> f64 {
    fitness_labels(labels, c)
}

/// Log-likelihood plus the cluster labels ordered by decreasing contribution
/// (ties by ascending label). The fitness is bit-identical to [`log_likelihood`].
pub(crate) fn fitness_and_ranking(labels: &[u32], c: &CorrelationMatrix) -> (f64, Vec<u32>) {
    let (sizes, internal) = size_and_internal(labels, c);
    let mut total = 0.0;
    let mut ranked: Vec<(f64, u32)> = Vec::with_capacity(sizes.len());
    for (s, (n, cs)) in sizes.into_iter().zip(internal).enumerate() {
        let v = cluster_contribution(n, cs);
        total += v;
        if n > 0 {
            ranked.push((v, s as u32 + 1));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    (total, ranked.into_iter().map(|(_, l)| l).collect())
}

pub(crate) fn fitness_labels(labels: &[u32], c: &CorrelationMatrix) -> f64 {
    let (sizes, internal) = size_and_internal(labels, c);
    let mut total = 0.0;
    for (n, cs) in sizes.into_iter().zip(internal) {
        total += cluster_contribution(n, cs);
    }
    total
}

/// Change in log-likelihood when `asset` is moved to cluster `new_label`.
///
/// `new_label` may name an unused label, in which case the asset becomes a
/// singleton. The result matches a full recomputation up to rounding.
pub fn delta_log_likelihood(
    p: &Partition,
    c: &CorrelationMatrix,
    asset: usize,
    new_label: u32,
) -> Result<f64> {
    check_dims(p, c)?;
    let n = p.len();
    if asset >= n {
        return Err(Error::invalid(format!("asset {asset} out of range 0..{n}")));
    }
    if new_label == 0 || new_label as usize > n {
        return Err(Error::invalid(format!(
            "label {new_label} is outside [1, {n}]"
        )));
    }
    Ok(delta_labels(p.labels(), c, asset, new_label))
}

pub(crate) fn delta_labels(labels: &[u32], c: &CorrelationMatrix, asset: usize, new_label: u32) -> f64 {
    let old_label = labels[asset];
    if old_label == new_label {
        return 0.0;
    }
    let row = c.row(asset);
    let (mut old_size, mut old_internal, mut old_link) = (0usize, 0.0, 0.0);
    let (mut new_size, mut new_internal, mut new_link) = (0usize, 0.0, 0.0);
    for (i, &l) in labels.iter().enumerate() {
        if l == old_label {
            old_size += 1;
            if i != asset {
                old_link += row[i];
            }
        } else if l == new_label {
            new_size += 1;
            new_link += row[i];
        }
    }
    // Internal sums of the two affected clusters before the move.
    for (i, &li) in labels.iter().enumerate() {
        if li != old_label && li != new_label {
            continue;
        }
        let ri = c.row(i);
        for (j, &lj) in labels.iter().enumerate().skip(i) {
            if lj != li {
                continue;
            }
            let w = if i == j { 1.0 } else { 2.0 * ri[j] };
            if li == old_label {
                old_internal += w;
            } else {
                new_internal += w;
            }
        }
    }
    let before = cluster_contribution(old_size, old_internal) + cluster_contribution(new_size, new_internal);
    let after = cluster_contribution(old_size - 1, old_internal - 1.0 - 2.0 * old_link)
        + cluster_contribution(new_size + 1, new_internal + 1.0 + 2.0 * new_link);
    after - before
}
