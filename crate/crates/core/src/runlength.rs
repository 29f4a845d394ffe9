//! Success runs inside a block of i.i.d. Bernoulli slots.
//!
//! A block of `T` slots is *controllable* when it contains a run of at least
//! `v` consecutive successes. [`BlockShape::chi`] gives the probability of
//! that event in closed form (alternating inclusion-exclusion sum), and
//! [`BlockShape::chi_bruteforce`] recomputes it by enumerating every binary
//! sequence so the two can be checked against each other.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Largest block length accepted by [`BlockShape::chi_bruteforce`].
pub const BRUTEFORCE_MAX_SLOTS: usize = 24;

/// Slots per block and required run length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub struct BlockShape {
    slots: usize,
    run: usize,
    // binom(T - l v, l - 1) for l = 1 ..= floor((T+1)/(v+1))
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawShape {
    slots: usize,
    run: usize,
}

impl TryFrom<RawShape> for BlockShape {
    type Error = Error;

    fn try_from(raw: RawShape) -> Result<Self> {
        BlockShape::new(raw.slots, raw.run)
    }
}

impl From<BlockShape> for RawShape {
    fn from(shape: BlockShape) -> Self {
        RawShape {
            slots: shape.slots,
            run: shape.run,
        }
    }
}

impl BlockShape {
    /// `slots` is the block length `T`, `run` the controllability index `v`.
    pub fn new(slots: usize, run: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::Shape("block length must be at least 1".into()));
        }
        if run == 0 {
            return Err(Error::Shape("run length must be at least 1".into()));
        }
        if run > slots {
            return Err(Error::Shape(format!(
                "run length {run} exceeds block length {slots}; no block can ever be controllable"
            )));
        }
        let max_runs = (slots + 1) / (run + 1);
        let coefficients = (1..=max_runs)
            .map(|l| {
                binomial(slots - l * run, l - 1)
                    .to_f64()
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        Ok(Self {
            slots,
            run,
            coefficients,
        })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn run(&self) -> usize {
        self.run
    }

    /// Probability that `T` i.i.d. Bernoulli(`x`) slots contain a run of at
    /// least `v` successes.
    pub fn chi(&self, x: f64) -> Result<f64> {
        check_probability("x", x)?;
        Ok(self.chi_unchecked(x))
    }

    pub(crate) fn chi_unchecked(&self, x: f64) -> f64 {
        let q = 1.0 - x;
        let t = self.slots as f64;
        let v = self.run as i32;
        let mut sum = 0.0;
        for (idx, &binom) in self.coefficients.iter().enumerate() {
            let l = (idx + 1) as i32;
            let boundary = x + (t - f64::from(l * v) + 1.0) / f64::from(l) * q;
            let term = boundary * binom * x.powi(l * v) * q.powi(l - 1);
            if l % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        sum.clamp(0.0, 1.0)
    }

    /// Same probability as [`chi`](Self::chi) by summing the Bernoulli weight
    /// of every qualifying sequence. Limited to `T <= 24`.
    pub fn chi_bruteforce(&self, x: f64) -> Result<f64> {
        check_probability("x", x)?;
        if self.slots > BRUTEFORCE_MAX_SLOTS {
            return Err(Error::TooLarge {
                slots: self.slots,
                limit: BRUTEFORCE_MAX_SLOTS,
            });
        }
        let t = self.slots as u32;
        let q = 1.0 - x;
        // weight by number of ones, computed once
        let weights: Vec<f64> = (0..=t)
            .map(|ones| x.powi(ones as i32) * q.powi((t - ones) as i32))
            .collect();
        let mut counts = vec![0u64; t as usize + 1];
        for mask in 0u32..(1u32 << t) {
            if mask_has_run(mask, self.run) {
                counts[mask.count_ones() as usize] += 1;
            }
        }
        Ok(counts
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| c as f64 * w)
            .sum())
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn mask_has_run(mask: u32, run: usize) -> bool {
    let mut m = mask;
    for _ in 1..run {
        m &= m >> 1;
    }
    m != 0
}

/// True if `bits` contains at least `run` consecutive `true` values.
pub fn has_run(bits: &[bool], run: usize) -> bool {
    if run == 0 {
        return true;
    }
    let mut current = 0;
    for &b in bits {
        if b {
            current += 1;
            if current >= run {
                return true;
            }
        } else {
            current = 0;
        }
    }
    false
}

/// Mean number of leading failures in a block of `slots` slots with success
/// probability `p`, given that the block holds at least one success.
///
/// By symmetry this is also the mean number of trailing failures after the
/// last success.
pub fn truncated_geometric_mean(p: f64, slots: usize) -> Result<f64> {
    check_probability("p", p)?;
    if p == 0.0 {
        return Err(Error::Degenerate(
            "success probability 0: a block never contains a success".into(),
        ));
    }
    if slots == 0 {
        return Err(Error::Shape("block length must be at least 1".into()));
    }
    Ok(truncated_geometric_mean_unchecked(p, slots))
}

pub(crate) fn truncated_geometric_mean_unchecked(p: f64, slots: usize) -> f64 {
    let q = 1.0 - p;
    if q == 0.0 {
        return 0.0;
    }
    if p < 1e-4 {
        // closed form cancels badly; sum directly
        let mut num = 0.0;
        let mut den = 0.0;
        let mut w = 1.0;
        for n in 0..slots {
            num += n as f64 * w;
            den += w;
            w *= q;
        }
        return num / den;
    }
    let t = slots as f64;
    let q_t = (t * (-p).ln_1p()).exp();
    let block_success = -(t * (-p).ln_1p()).exp_m1();
    q / p - t * q_t / block_success
}
