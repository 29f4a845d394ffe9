use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{run_chunked, Estimate, Merge, RunningStats};
use crate::error::{check_probability, Error, Result};
use crate::latency::VirtualBlock;
use crate::runlength::{has_run, BlockShape};

/// Empirical statistics of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub k: usize,
    /// Per-slot success frequency (per-episode block fraction as sample).
    pub slot_rate: Estimate,
    /// Frequency of a run of at least `v` successes.
    pub run_rate: Estimate,
    /// Frequency of at least one success.
    pub success_rate: Estimate,
    /// Peak latency of the block's first success, given one exists (slots).
    pub latency: Estimate,
    /// Peak AoI of the block's first success, given one exists (slots).
    pub paoi: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliReport {
    pub episodes: u64,
    pub virtual_block: VirtualBlock,
    pub blocks: Vec<BlockStats>,
}

impl BernoulliReport {
    /// Statistics of the last block.
    pub fn last(&self) -> &BlockStats {
        self.blocks.last().expect("at least one block")
    }
}

#[derive(Clone, Default)]
struct Acc {
    slot: RunningStats,
    run: RunningStats,
    success: RunningStats,
    latency: RunningStats,
    paoi: RunningStats,
}

impl Merge for Acc {
    fn merge_from(&mut self, o: Self) {
        self.slot.merge(&o.slot);
        self.run.merge(&o.run);
        self.success.merge(&o.success);
        self.latency.merge(&o.latency);
        self.paoi.merge(&o.paoi);
    }
}

/// First and last success index of a block, if any.
fn success_span(bits: &[bool]) -> Option<(usize, usize)> {
    let first = bits.iter().position(|&b| b)?;
    let last = bits.iter().rposition(|&b| b)?;
    Some((first, last))
}

fn draw_block<R: Rng + ?Sized>(p: f64, bits: &mut [bool], rng: &mut R) {
    for b in bits.iter_mut() {
        *b = rng.random::<f64>() < p;
    }
}

/// Simulates `episodes` independent histories in which every slot of block
/// `i` succeeds independently with probability `p[i - 1]`.
///
/// For every block `k` with a success, the latency of its first success is
/// `T (kappa - 1) + W + X + 1` and its peak AoI `kappa T + X + 1`, where
/// `kappa` is the gap to the previous block with a success, `W` that
/// block's trailing failures and `X` the leading failures of block `k`.
/// Block 0 follows `mode`; under [`VirtualBlock::ExtendFirst`] it is drawn
/// with `p[0]` and episodes with no earlier success contribute no gap term
/// (`-T + X + 1` and `X + 1`), mirroring the analytic sums.
pub fn simulate_bernoulli(
    p: &[f64],
    shape: &BlockShape,
    episodes: u64,
    seed: u64,
    mode: VirtualBlock,
) -> Result<BernoulliReport> {
    if p.is_empty() {
        return Err(Error::Shape("empty success-probability history".into()));
    }
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    for &x in p {
        check_probability("slot_success", x)?;
    }
    let slots = shape.slots();
    let t = slots as f64;
    let accs = run_chunked(
        episodes,
        seed,
        || vec![Acc::default(); p.len()],
        |accs, _, rng| {
            let mut bits = vec![false; slots];
            // (block index, trailing failures) of the latest success
            let mut last: Option<(usize, usize)> = match mode {
                VirtualBlock::BoundarySuccess => Some((0, 0)),
                VirtualBlock::ExtendFirst => {
                    draw_block(p[0], &mut bits, rng);
                    success_span(&bits).map(|(_, l)| (0, slots - 1 - l))
                }
            };
            for (i, (&pi, acc)) in p.iter().zip(accs.iter_mut()).enumerate() {
                let k = i + 1;
                draw_block(pi, &mut bits, rng);
                let hits = bits.iter().filter(|&&b| b).count();
                acc.slot.push(hits as f64 / t);
                acc.run.push_flag(has_run(&bits, shape.run()));
                let span = success_span(&bits);
                acc.success.push_flag(span.is_some());
                if let Some((first, last_idx)) = span {
                    let x = first as f64;
                    let (lat, age) = match last {
                        Some((j, w)) => {
                            let kappa = (k - j) as f64;
                            (t * (kappa - 1.0) + w as f64 + x + 1.0, kappa * t + x + 1.0)
                        }
                        None => (-t + x + 1.0, x + 1.0),
                    };
                    acc.latency.push(lat);
                    acc.paoi.push(age);
                    last = Some((k, slots - 1 - last_idx));
                }
            }
        },
    );
    let blocks = accs
        .iter()
        .enumerate()
        .map(|(i, a)| BlockStats {
            k: i + 1,
            slot_rate: a.slot.estimate(),
            run_rate: a.run.estimate(),
            success_rate: a.success.estimate(),
            latency: a.latency.estimate(),
            paoi: a.paoi.estimate(),
        })
        .collect();
    Ok(BernoulliReport {
        episodes,
        virtual_block: mode,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_success() {
        let shape = BlockShape::new(5, 3).unwrap();
        for mode in [VirtualBlock::ExtendFirst, VirtualBlock::BoundarySuccess] {
            let r = simulate_bernoulli(&[1.0; 3], &shape, 100, 1, mode).unwrap();
            for b in &r.blocks {
                assert_eq!(b.latency.mean, 1.0);
                assert_eq!(b.paoi.mean, 6.0);
                assert_eq!(b.run_rate.mean, 1.0);
                assert_eq!(b.latency.std_error, 0.0);
            }
        }
    }

    #[test]
    fn run_frequency_near_chi() {
        let shape = BlockShape::new(5, 3).unwrap();
        let r = simulate_bernoulli(&[0.5], &shape, 100_000, 3, VirtualBlock::ExtendFirst).unwrap();
        assert!(r.last().run_rate.within(0.25, 4.0), "{:?}", r.last().run_rate);
        assert!(r.last().slot_rate.within(0.5, 4.0));
    }

    #[test]
    fn span_helper() {
        assert_eq!(success_span(&[false, true, false, true, false]), Some((1, 3)));
        assert_eq!(success_span(&[false; 4]), None);
    }

    #[test]
    fn rejects_bad_input() {
        let shape = BlockShape::new(5, 3).unwrap();
        assert!(simulate_bernoulli(&[], &shape, 10, 0, VirtualBlock::ExtendFirst).is_err());
        assert!(simulate_bernoulli(&[1.5], &shape, 10, 0, VirtualBlock::ExtendFirst).is_err());
        assert!(simulate_bernoulli(&[0.5], &shape, 0, 0, VirtualBlock::ExtendFirst).is_err());
    }
}
