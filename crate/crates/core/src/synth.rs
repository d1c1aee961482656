//! Synthetic return panels with planted clusters.
//!
//! Each asset `i` in cluster `s` follows `x_i = g_s * eta_s + sqrt(1 - g_s^2) * eps_i`
//! with independent standard normal cluster factors `eta` and idiosyncratic
//! noise `eps`, so members of a cluster have population correlation `g_s^2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::ReturnPanel;
use crate::partition::Partition;

/// Seed of the built-in 40-asset training set.
pub const TRAINING_SET_SEED: u64 = 20_121_010;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedCluster {
    pub size: usize,
    pub coupling: f64,
}

/// Cluster layout of a synthetic panel. Assets are assigned to clusters in
/// order: the first `clusters[0].size` assets form cluster 1, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n: usize,
    pub d: usize,
    pub clusters: Vec<PlantedCluster>,
    pub seed: u64,
}

impl PlantedSpec {
    /// `count` equally sized clusters sharing one coupling.
    pub fn uniform(count: usize, size: usize, coupling: f64, d: usize, seed: u64) -> Self {
        Self {
            n: count * size,
            d,
            clusters: vec![PlantedCluster { size, coupling }; count],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total: usize = self.clusters.iter().map(|c| c.size).sum();
        if total != self.n {
            return Err(Error::invalid(format!(
                "cluster sizes sum to {total}, expected {}",
                self.n
            )));
        }
        if self.n == 0 {
            return Err(Error::invalid("panel needs at least one asset"));
        }
        if self.d < 2 {
            return Err(Error::invalid("panel needs at least 2 observations"));
        }
        if let Some(c) = self.clusters.iter().find(|c| c.size == 0) {
            return Err(Error::invalid(format!("empty cluster in {:?}", c)));
        }
        if let Some(c) = self.clusters.iter().find(|c| !(0.0..=1.0).contains(&c.coupling)) {
            return Err(Error::invalid(format!(
                "coupling {} is outside [0, 1]",
                c.coupling
            )));
        }
        Ok(())
    }

    /// Ground-truth partition in canonical form.
    pub fn truth(&self) -> Partition {
        let labels = self
            .clusters
            .iter()
            .enumerate()
            .flat_map(|(s, c)| std::iter::repeat_n(s as u32 + 1, c.size))
            .collect();
        Partition::canonical(labels)
    }
}

/// Draws a row-normalized panel and returns it with the planted partition.
pub fn generate_noh(spec: &PlantedSpec) -> Result<(ReturnPanel, Partition)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = vec![Vec::with_capacity(spec.d); spec.n];
    let mut factors = vec![0.0; spec.clusters.len()];
    for _ in 0..spec.d {
        for f in factors.iter_mut() {
            *f = StandardNormal.sample(&mut rng);
        }
        let mut i = 0;
        for (s, cluster) in spec.clusters.iter().enumerate() {
            let g = cluster.coupling;
            let idio = (1.0 - g * g).sqrt();
            for _ in 0..cluster.size {
                let eps: f64 = StandardNormal.sample(&mut rng);
                rows[i].push(g * factors[s] + idio * eps);
                i += 1;
            }
        }
    }
    let panel = ReturnPanel::normalized(rows)?;
    Ok((panel, spec.truth()))
}

/// The built-in training set: 40 assets in 4 clusters of 10, coupling 0.8,
/// 500 observations, fixed seed [`TRAINING_SET_SEED`].
pub fn training_set_40() -> (ReturnPanel, Partition) {
    generate_noh(&training_spec())
        .expect("training spec is valid")
}

pub fn training_spec() -> PlantedSpec {
    PlantedSpec::uniform(4, 10, 0.8, 500, TRAINING_SET_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_corr(panel: &ReturnPanel, truth: &Partition, within: bool) -> f64 {
        let c = panel.correlation();
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..c.n() {
            for j in (i + 1)..c.n() {
                if (truth.label(i) == truth.label(j)) == within {
                    sum += c.get(i, j);
                    count += 1;
                }
            }
        }
        sum / count as f64
    }

    #[test]
    fn zero_coupling_gives_uncorrelated_assets() {
        let spec = PlantedSpec::uniform(2, 4, 0.0, 2000, 1);
        let (panel, _) = generate_noh(&spec).unwrap();
        let c = panel.correlation();
        let bound = 4.0 / (2000f64).sqrt();
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert!(c.get(i, j).abs() < bound, "C[{i}][{j}] = {}", c.get(i, j));
            }
        }
    }

    #[test]
    fn unit_coupling_gives_identical_members() {
        let spec = PlantedSpec::uniform(2, 3, 1.0, 200, 2);
        let (panel, truth) = generate_noh(&spec).unwrap();
        assert!((mean_corr(&panel, &truth, true) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn within_cluster_correlation_is_coupling_squared() {
        let spec = PlantedSpec::uniform(2, 5, 0.8, 10_000, 3);
        let (panel, truth) = generate_noh(&spec).unwrap();
        let within = mean_corr(&panel, &truth, true);
        assert!((within - 0.64).abs() < 0.02, "within {within}");
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = PlantedSpec::uniform(3, 2, 0.5, 50, 9);
        assert_eq!(generate_noh(&spec).unwrap(), generate_noh(&spec).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = PlantedSpec::uniform(4, 9, 0.8, 500, 0);
        spec.n = 40;
        assert!(generate_noh(&spec).is_err());
        assert!(generate_noh(&PlantedSpec::uniform(2, 2, 1.2, 10, 0)).is_err());
    }

    #[test]
    fn training_set_layout() {
        let (panel, truth) = training_set_40();
        assert_eq!(panel.n(), 40);
        assert_eq!(panel.d(), 500);
        assert_eq!(truth.num_clusters(), 4);
        assert!(truth.clusters().iter().all(|c| c.len() == 10));
        assert!(mean_corr(&panel, &truth, false).abs() < 0.05);
    }
}
