//! Monte Carlo engines used to validate the analytic layer.
//!
//! * [`simulate_bernoulli`]: slot outcomes drawn from given per-block
//!   success probabilities; run, latency and age statistics.
//! * [`simulate_regimes`]: a single controller moving through the
//!   block/slot/post access regimes; controllability frequencies.
//! * [`simulate_renewal_pcl`]: the controllability indicator chain;
//!   distribution of the peak control latency.
//! * [`simulate_spatial`]: PPP interferers, Rayleigh fading and SINR
//!   decisions for the typical link.
//!
//! Every episode owns a ChaCha stream selected by `(seed, episode index)`.
//! Episodes are grouped in fixed chunks and the per-chunk statistics are
//! merged in chunk order, so results do not depend on the thread count.

mod bernoulli;
mod regimes;
mod renewal;
mod spatial;
mod stats;

pub use bernoulli::{simulate_bernoulli, BernoulliReport, BlockStats};
pub use regimes::{simulate_regimes, RegimeBlockStats, RegimeReport};
pub use renewal::{renewal_first_time, simulate_renewal_pcl, PclReport};
pub use spatial::{
    simulate_spatial, SpatialBlockStats, SpatialGeometry, SpatialOptions, SpatialReport,
};
pub use stats::{episode_rng, Estimate, RunningStats, CHUNK_EPISODES};
