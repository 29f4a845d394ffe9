use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{run_chunked, Estimate, Merge, RunningStats};
use crate::error::{check_probability, Error, Result};
use crate::runlength::{has_run, BlockShape};
use crate::spatial::AccessPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBlockStats {
    pub k: usize,
    /// Controllable in block `k`, given never controllable before.
    pub first_time: Estimate,
    /// Controllable in at least one block of `1..=k`.
    pub cumulative: Estimate,
    /// Controllable in block `k`.
    pub instantaneous: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub episodes: u64,
    pub blocks: Vec<RegimeBlockStats>,
}

#[derive(Clone, Default)]
struct Acc {
    first: RunningStats,
    cumulative: RunningStats,
    inst: RunningStats,
}

impl Merge for Acc {
    fn merge_from(&mut self, o: Self) {
        self.first.merge(&o.first);
        self.cumulative.merge(&o.cumulative);
        self.inst.merge(&o.inst);
    }
}

/// Follows one controller through `schedule`, a list of per-block
/// `(policy, rho)` pairs. Before its first controllable block it takes
/// block access with probability `delta_B` (every slot transmitted) and
/// slot access otherwise (each slot with probability `delta_S`); afterwards
/// each slot is transmitted with probability `delta_C`. A transmitted slot
/// succeeds with probability `rho`.
pub fn simulate_regimes(
    schedule: &[(AccessPolicy, f64)],
    shape: &BlockShape,
    episodes: u64,
    seed: u64,
) -> Result<RegimeReport> {
    if schedule.is_empty() {
        return Err(Error::Shape("empty policy schedule".into()));
    }
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    for (policy, rho) in schedule {
        policy.validate()?;
        check_probability("rho", *rho)?;
    }
    let slots = shape.slots();
    let accs = run_chunked(
        episodes,
        seed,
        || vec![Acc::default(); schedule.len()],
        |accs, _, rng| {
            let mut bits = vec![false; slots];
            let mut controllable = false;
            for ((policy, rho), acc) in schedule.iter().zip(accs.iter_mut()) {
                let access = if controllable {
                    policy.delta_c
                } else if rng.random::<f64>() < policy.delta_b {
                    1.0
                } else {
                    policy.delta_s
                };
                let p = access * rho;
                for b in bits.iter_mut() {
                    *b = rng.random::<f64>() < p;
                }
                let run = has_run(&bits, shape.run());
                if !controllable {
                    acc.first.push_flag(run);
                }
                controllable |= run;
                acc.cumulative.push_flag(controllable);
                acc.inst.push_flag(run);
            }
        },
    );
    let blocks = accs
        .iter()
        .enumerate()
        .map(|(i, a)| RegimeBlockStats {
            k: i + 1,
            first_time: a.first.estimate(),
            cumulative: a.cumulative.estimate(),
            instantaneous: a.inst.estimate(),
        })
        .collect();
    Ok(RegimeReport { episodes, blocks })
}
