//! Block-controllability recursions.
//!
//! `pi_k` is the probability that a controller which has never been
//! controllable becomes controllable in block `k`; `P_O_k` is the absorbing
//! cumulative probability and `P_Otilde_k` the probability that block `k`
//! itself is controllable, mixing the pre- and post-controllability
//! populations.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Result};
use crate::runlength::BlockShape;
use crate::spatial::AccessPolicy;

/// Controllability probabilities after block `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllabilityState {
    pub k: usize,
    /// Cumulative probability of at least one controllable block in `1..=k`.
    pub cumulative: f64,
    /// Probability that block `k` is controllable.
    pub instantaneous: f64,
    /// First-time controllability probability in block `k`.
    pub first_time: f64,
}

impl ControllabilityState {
    /// Applies one block with access policy `policy` and slot-success
    /// probability `rho`. `prev = None` starts at block 1.
    pub fn step(
        prev: Option<&ControllabilityState>,
        shape: &BlockShape,
        policy: &AccessPolicy,
        rho: f64,
    ) -> Result<Self> {
        let pi = first_time_controllability(shape, policy, rho)?;
        let po_prev = prev.map_or(0.0, |s| s.cumulative);
        let instantaneous =
            instantaneous_controllability(po_prev, pi, shape, policy.delta_c, rho)?;
        Ok(Self {
            k: prev.map_or(1, |s| s.k + 1),
            cumulative: advance_state(prev.map(|s| s.cumulative), pi)?,
            instantaneous,
            first_time: pi,
        })
    }
}

/// `pi_k = delta_B chi(rho) + (1 - delta_B) chi(delta_S rho)`.
pub fn first_time_controllability(
    shape: &BlockShape,
    policy: &AccessPolicy,
    rho: f64,
) -> Result<f64> {
    policy.validate()?;
    check_probability("rho", rho)?;
    Ok(first_time_unchecked(shape, policy, rho))
}

pub(crate) fn first_time_unchecked(shape: &BlockShape, policy: &AccessPolicy, rho: f64) -> f64 {
    let block = shape.chi_unchecked(rho);
    let slot = shape.chi_unchecked(policy.delta_s * rho);
    policy.delta_b * block + (1.0 - policy.delta_b) * slot
}

/// `P_O_k = P_O_{k-1} + (1 - P_O_{k-1}) pi_k`, with `P_O_1 = pi_1`.
pub fn advance_state(po_prev: Option<f64>, pi: f64) -> Result<f64> {
    check_probability("pi", pi)?;
    match po_prev {
        None => Ok(pi),
        Some(po) => {
            check_probability("po_prev", po)?;
            Ok(advance_unchecked(po, pi))
        }
    }
}

pub(crate) fn advance_unchecked(po_prev: f64, pi: f64) -> f64 {
    (po_prev + (1.0 - po_prev) * pi).min(1.0)
}

/// `P_Otilde_k = (1 - P_O_{k-1}) pi_k + P_O_{k-1} chi(delta_C rho)`.
pub fn instantaneous_controllability(
    po_prev: f64,
    pi: f64,
    shape: &BlockShape,
    delta_c: f64,
    rho: f64,
) -> Result<f64> {
    check_probability("po_prev", po_prev)?;
    check_probability("pi", pi)?;
    check_probability("delta_c", delta_c)?;
    check_probability("rho", rho)?;
    Ok(instantaneous_unchecked(
        po_prev,
        pi,
        shape.chi_unchecked(delta_c * rho),
    ))
}

pub(crate) fn instantaneous_unchecked(po_prev: f64, pi: f64, post_chi: f64) -> f64 {
    (1.0 - po_prev) * pi + po_prev * post_chi
}
