use serde::{Deserialize, Serialize};

use super::operators::{FitnessScaling, MutationScheme};
use crate::error::{Error, Result};

/// Adjoint parameters of the genetic algorithm.
///
/// Defaults are the tuned settings found on the 40-asset training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    /// Minimum improvement of the best fitness that resets the stall counter.
    pub error_tolerance: f64,
    pub stall_generations: usize,
    pub elite_size: usize,
    /// Probability that a crossover uses cluster transplant instead of one-point.
    pub p_knowledge_crossover: f64,
    pub mutation: MutationScheme,
    pub scaling: FitnessScaling,
    pub seed: u64,
    pub workers: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 1000,
            max_generations: 400,
            p_crossover: 0.9,
            p_mutation: 0.1,
            error_tolerance: 1e-5,
            stall_generations: 50,
            elite_size: 10,
            p_knowledge_crossover: 0.9,
            mutation: MutationScheme::default(),
            scaling: FitnessScaling::default(),
            seed: 0,
            workers: default_workers(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl GaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_population_size(mut self, population_size: usize) -> Self {
        self.population_size = population_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::invalid("population size must be at least 2"));
        }
        if self.elite_size >= self.population_size {
            return Err(Error::invalid(format!(
                "elite size {} must be smaller than population size {}",
                self.elite_size, self.population_size
            )));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        if self.max_generations == 0 {
            return Err(Error::invalid("max generations must be at least 1"));
        }
        for (name, p) in [
            ("crossover probability", self.p_crossover),
            ("mutation probability", self.p_mutation),
            ("knowledge-based crossover probability", self.p_knowledge_crossover),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} {p} is outside [0, 1]")));
            }
        }
        if !(self.error_tolerance >= 0.0) {
            return Err(Error::invalid("error tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_tuned_values() {
        let cfg = GaConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.population_size, 1000);
        assert_eq!(cfg.max_generations, 400);
        assert_eq!(cfg.p_crossover, 0.9);
        assert_eq!(cfg.p_mutation, 0.1);
        assert_eq!(cfg.error_tolerance, 1e-5);
        assert_eq!(cfg.stall_generations, 50);
        assert_eq!(cfg.elite_size, 10);
        assert_eq!(cfg.p_knowledge_crossover, 0.9);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = GaConfig::default();
        assert!(GaConfig { elite_size: 1000, ..base.clone() }.validate().is_err());
        assert!(GaConfig { population_size: 1, elite_size: 0, ..base.clone() }.validate().is_err());
        assert!(GaConfig { p_mutation: 1.5, ..base.clone() }.validate().is_err());
        assert!(GaConfig { workers: 0, ..base.clone() }.validate().is_err());
        assert!(GaConfig { error_tolerance: f64::NAN, ..base }.validate().is_err());
    }
}
