//! Maximum-likelihood clustering of asset-return correlation matrices.
//!
//! The crate covers the full chain from raw prices to cluster visualizations:
//!
//! * [`preprocess`]: bar aggregation, zero-order hold, normalized log-returns,
//!   market-mode removal, EWMA covariance and random-matrix cleaning;
//! * [`likelihood`]: the per-feature log-likelihood of a cluster configuration;
//! * [`ga`]: a synchronous master-slave parallel genetic algorithm maximizing it;
//! * [`oracle`]: exhaustive enumeration and simulated annealing baselines;
//! * [`mst`]: per-cluster minimum spanning trees and DOT export;
//! * [`synth`]: planted-cluster synthetic data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlation;
pub mod error;
pub mod ga;
pub mod io;
pub mod likelihood;
pub mod mst;
pub mod oracle;
pub mod panel;
pub mod partition;
pub mod preprocess;
pub mod synth;

pub use correlation::CorrelationMatrix;
pub use error::{Error, Result};
pub use ga::{evolve, GaConfig, GaResult, TerminationReason};
pub use likelihood::{cluster_stats, delta_log_likelihood, dissolve_flat_clusters, log_likelihood, ClusterStats};
pub use panel::ReturnPanel;
pub use partition::Partition;
