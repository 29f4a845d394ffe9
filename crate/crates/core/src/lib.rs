//! Analysis, optimization and Monte Carlo validation of block/slot Aloha
//! channel access for wireless networked control.
//!
//! Controllers are scattered as a Poisson point process and share one
//! channel. Each block of `T` slots starts with a fresh state measurement;
//! a controller needs `v` consecutive delivered inputs to steer its plant
//! estimate to target. Three access probabilities per block (block access,
//! pre-controllability slot access, post-controllability slot access) shape
//! interference and therefore controllability, latency and age.
//!
//! | module | contents |
//! |---|---|
//! | [`runlength`] | probability of a success run of length `v` in a block |
//! | [`spatial`] | density thinning, slot success probability, PPP sampler |
//! | [`controllability`] | first-time, cumulative and per-block controllability |
//! | [`latency`] | peak latency, peak AoI, peak control latency, cost CDF terms |
//! | [`optimizer`] | per-block grid search and horizon driver |
//! | [`montecarlo`] | Bernoulli-, regime-, renewal- and spatial-tier simulators |
//! | [`plant`] | LTI plant, state estimation and the in-block input protocol |
//! | [`config`], [`cli`] | run configuration, command implementations, emitters |

pub mod cli;
pub mod config;
pub mod controllability;
pub mod error;
pub mod latency;
pub mod montecarlo;
pub mod optimizer;
pub mod plant;
mod quadrature;
pub mod runlength;
pub mod spatial;

pub use controllability::{
    advance_state, first_time_controllability, instantaneous_controllability, ControllabilityState,
};
pub use error::{Error, Result};
pub use latency::{
    cdf_terms, current_block_latency, expected_paoi, expected_pcl, expected_peak_latency, pcl_pmf,
    BlockHistory, CdfTerms, PclProfile, RegimeMixture, VirtualBlock,
};
pub use optimizer::{
    evaluate_candidate, optimize_block, run_horizon, BlockContext, CdfMode, HistoryScalar,
    MetricsRecord, OptimizerConfig, PolicyTrace,
};
pub use runlength::{has_run, truncated_geometric_mean, BlockShape};
pub use spatial::{
    effective_densities, slot_success_prob, AccessPolicy, IntegralBackend, LinkModel,
    NetworkParams, RegimeDensities,
};
