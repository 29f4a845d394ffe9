use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{run_chunked, Estimate, Merge, RunningStats};
use crate::error::{check_probability, Error, Result};

/// Empirical peak control latency at the last block `k` of the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PclReport {
    pub episodes: u64,
    pub k: usize,
    /// `pmf[tau - 1]`: share of episodes controllable in block `k` whose
    /// previous controllable block is `k - tau` (block 0 counts as one).
    pub pmf: Vec<Estimate>,
    /// Mean of `tau` over the same episodes (blocks).
    pub mean: Estimate,
}

#[derive(Clone)]
struct Acc {
    counts: Vec<u64>,
    tau: RunningStats,
}

impl Merge for Acc {
    fn merge_from(&mut self, o: Self) {
        for (a, b) in self.counts.iter_mut().zip(o.counts) {
            *a += b;
        }
        self.tau.merge(&o.tau);
    }
}

/// First-time probabilities `pi_i` implied by the instantaneous series
/// `P_Otilde_i` and `chi_C_i = chi(delta_C_i rho_i)`:
/// `P_Otilde_i = (1 - P_O_{i-1}) pi_i + P_O_{i-1} chi_C_i`.
pub fn renewal_first_time(p_otilde: &[f64], chi_c: &[f64]) -> Result<Vec<f64>> {
    if p_otilde.len() != chi_c.len() {
        return Err(Error::Dimension(format!(
            "P_Otilde has {} blocks, chi_C has {}",
            p_otilde.len(),
            chi_c.len()
        )));
    }
    let mut po = 0.0;
    let mut out = Vec::with_capacity(p_otilde.len());
    for (&inst, &c) in p_otilde.iter().zip(chi_c) {
        check_probability("instantaneous", inst)?;
        check_probability("post_chi", c)?;
        let pi = if 1.0 - po > 1e-15 {
            ((inst - po * c) / (1.0 - po)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        po = (po + (1.0 - po) * pi).min(1.0);
        out.push(pi);
    }
    Ok(out)
}

/// Simulates the controllability indicator chain: a controller that has
/// never been controllable becomes so in block `i` with probability
/// `pi_i` (see [`renewal_first_time`]); afterwards each block is
/// controllable with probability `chi_C_i`. Block 0 is controllable.
/// Reports the gap `tau` from the last block `k` back to the previous
/// controllable block, over episodes in which block `k` is controllable.
pub fn simulate_renewal_pcl(
    p_otilde: &[f64],
    chi_c: &[f64],
    episodes: u64,
    seed: u64,
) -> Result<PclReport> {
    let pi = renewal_first_time(p_otilde, chi_c)?;
    if pi.is_empty() {
        return Err(Error::Shape("empty controllability history".into()));
    }
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    let k = pi.len();
    let acc = run_chunked(
        episodes,
        seed,
        || Acc {
            counts: vec![0; k],
            tau: RunningStats::default(),
        },
        |acc, _, rng| {
            let mut controllable = false;
            let mut last = 0usize;
            for i in 1..=k {
                let p = if controllable { chi_c[i - 1] } else { pi[i - 1] };
                let hit = rng.random::<f64>() < p;
                if i == k {
                    if hit {
                        let tau = k - last;
                        acc.counts[tau - 1] += 1;
                        acc.tau.push(tau as f64);
                    }
                } else if hit {
                    controllable = true;
                    last = i;
                }
            }
        },
    );
    let n = acc.tau.count;
    let pmf = acc
        .counts
        .iter()
        .map(|&c| {
            RunningStats {
                count: n,
                sum: c as f64,
                sum_sq: c as f64,
            }
            .estimate()
        })
        .collect();
    Ok(PclReport {
        episodes,
        k,
        pmf,
        mean: acc.tau.estimate(),
    })
}
