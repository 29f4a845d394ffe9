use serde::{Deserialize, Serialize};

use super::stats::{run_chunked, Estimate, Merge, RunningStats};
use crate::error::{check_positive, Error, Result};
use crate::runlength::{has_run, BlockShape};
use crate::spatial::{default_disk_radius, NetworkParams, SinrSampler};

/// When interferer positions are redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialGeometry {
    /// Fresh PPP every slot: slots are independent given the density.
    #[default]
    PerSlot,
    /// One PPP per block of each episode; only fading changes across its
    /// slots, so successes within a block are correlated.
    PerEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SpatialOptions {
    pub geometry: SpatialGeometry,
    /// Simulation disk radius (m); `None` picks one per block with
    /// [`default_disk_radius`].
    pub disk_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialBlockStats {
    pub k: usize,
    pub lambda_eff: f64,
    pub disk_radius: f64,
    /// Slot success frequency of the typical link (per-episode block
    /// fraction as sample).
    pub slot_rate: Estimate,
    /// Frequency of a run of at least `v` successes.
    pub run_rate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialReport {
    pub episodes: u64,
    pub geometry: SpatialGeometry,
    pub blocks: Vec<SpatialBlockStats>,
}

#[derive(Clone, Default)]
struct Acc {
    slot: RunningStats,
    run: RunningStats,
}

impl Merge for Acc {
    fn merge_from(&mut self, o: Self) {
        self.slot.merge(&o.slot);
        self.run.merge(&o.run);
    }
}

/// Simulates the typical link transmitting in every slot of every block,
/// against a PPP of interferers with density `densities[k - 1]` in block
/// `k`, Rayleigh fading on all links and the SINR threshold of `params`.
pub fn simulate_spatial(
    params: &NetworkParams,
    densities: &[f64],
    shape: &BlockShape,
    episodes: u64,
    seed: u64,
    options: SpatialOptions,
) -> Result<SpatialReport> {
    params.validate()?;
    if densities.is_empty() {
        return Err(Error::Shape("empty density schedule".into()));
    }
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    for &d in densities {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::Domain {
                name: "lambda_eff",
                value: d,
                range: "[0, inf)",
            });
        }
    }
    if let Some(r) = options.disk_radius {
        check_positive("disk_radius", r)?;
    }
    let radii: Vec<f64> = densities
        .iter()
        .map(|&d| options.disk_radius.unwrap_or_else(|| default_disk_radius(params, d)))
        .collect();
    let samplers: Vec<SinrSampler> = radii.iter().map(|&r| SinrSampler::new(params, r)).collect();
    let slots = shape.slots();
    let accs = run_chunked(
        episodes,
        seed,
        || vec![Acc::default(); densities.len()],
        |accs, _, rng| {
            let mut gains = Vec::new();
            let mut bits = vec![false; slots];
            for ((&density, sampler), acc) in densities.iter().zip(&samplers).zip(accs.iter_mut())
            {
                if options.geometry == SpatialGeometry::PerEpisode {
                    sampler.draw_gains(density, rng, &mut gains);
                }
                for b in bits.iter_mut() {
                    if options.geometry == SpatialGeometry::PerSlot {
                        sampler.draw_gains(density, rng, &mut gains);
                    }
                    let interference = sampler.faded_sum(&gains, rng);
                    *b = sampler.decide(interference, rng);
                }
                let hits = bits.iter().filter(|&&b| b).count();
                acc.slot.push(hits as f64 / slots as f64);
                acc.run.push_flag(has_run(&bits, shape.run()));
            }
        },
    );
    let blocks = accs
        .iter()
        .enumerate()
        .map(|(i, a)| SpatialBlockStats {
            k: i + 1,
            lambda_eff: densities[i],
            disk_radius: radii[i],
            slot_rate: a.slot.estimate(),
            run_rate: a.run.estimate(),
        })
        .collect();
    Ok(SpatialReport {
        episodes,
        geometry: options.geometry,
        blocks,
    })
}
