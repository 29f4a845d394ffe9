//! Stochastic-geometry layer.
//!
//! Controllers form a homogeneous Poisson point process. Access
//! probabilities thin it into three transmitting sub-populations
//! (block access, pre-controllability slot access, post-controllability
//! slot access) and the superposition of those is what the typical link
//! sees as interference. With Rayleigh fading the conditional success
//! probability of a slot is
//!
//! ```text
//! rho = exp(-gamma N0 r0^alpha / xi) * exp(-2 pi lambda_eff I)
//! I   = int_0^inf gamma r^-alpha / (r0^-alpha + gamma r^-alpha) r dr
//!     = r0^2 gamma^(2/alpha) (pi/alpha) / sin(2 pi/alpha)
//! ```
//!
//! `I` is available in closed form and by adaptive quadrature; the spatial
//! sampler draws PPP realizations and evaluates the SINR directly.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::quadrature;

/// Physical and protocol constants of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Controller density (m^-2).
    pub lambda: f64,
    /// Path-loss exponent, must exceed 2.
    pub alpha: f64,
    /// SINR threshold (linear).
    pub gamma: f64,
    /// Transmit power (W).
    pub tx_power: f64,
    /// Noise power (W).
    pub noise_power: f64,
    /// Typical link distance (m).
    pub link_distance: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            alpha: 3.0,
            gamma: 0.1,
            tx_power: dbm_to_watts(40.0),
            noise_power: 1e-17,
            link_distance: 25.0,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("lambda", self.lambda)?;
        check_positive("alpha", self.alpha)?;
        check_positive("gamma", self.gamma)?;
        check_positive("tx_power", self.tx_power)?;
        check_positive("noise_power", self.noise_power)?;
        check_positive("link_distance", self.link_distance)?;
        if self.alpha <= 2.0 {
            return Err(Error::Divergent(self.alpha));
        }
        Ok(())
    }

    /// Exponent of the interference-free success probability,
    /// `gamma N0 r0^alpha / xi`.
    pub fn noise_exponent(&self) -> f64 {
        self.gamma * self.noise_power * self.link_distance.powf(self.alpha) / self.tx_power
    }

    /// Scale `r0 gamma^(1/alpha)` that maps the interference integrand onto
    /// `u / (1 + u^alpha)`.
    fn integral_scale(&self) -> f64 {
        self.link_distance * self.gamma.powf(1.0 / self.alpha)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Block access, pre-controllability slot access and post-controllability
/// slot access probabilities for one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessPolicy {
    pub delta_b: f64,
    pub delta_s: f64,
    pub delta_c: f64,
}

impl AccessPolicy {
    pub fn new(delta_b: f64, delta_s: f64, delta_c: f64) -> Result<Self> {
        check_probability("delta_b", delta_b)?;
        check_probability("delta_s", delta_s)?;
        check_probability("delta_c", delta_c)?;
        Ok(Self {
            delta_b,
            delta_s,
            delta_c,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.delta_b, self.delta_s, self.delta_c).map(|_| ())
    }
}

/// Densities of potentially transmitting controllers per access regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeDensities {
    pub block: f64,
    pub slot: f64,
    pub post: f64,
    pub effective: f64,
}

/// Thins the controller density by access regime. `po_prev` is the
/// probability that controllability was reached before this block
/// (0 for the first block).
pub fn effective_densities(
    params: &NetworkParams,
    policy: &AccessPolicy,
    po_prev: f64,
) -> Result<RegimeDensities> {
    check_positive("lambda", params.lambda)?;
    policy.validate()?;
    check_probability("po_prev", po_prev)?;
    Ok(effective_densities_unchecked(params.lambda, policy, po_prev))
}

pub(crate) fn effective_densities_unchecked(
    lambda: f64,
    policy: &AccessPolicy,
    po_prev: f64,
) -> RegimeDensities {
    let pre = 1.0 - po_prev;
    let block = pre * policy.delta_b * lambda;
    let slot = pre * (1.0 - policy.delta_b) * policy.delta_s * lambda;
    let post = po_prev * policy.delta_c * lambda;
    RegimeDensities {
        block,
        slot,
        post,
        effective: block + slot + post,
    }
}

/// How the interference integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralBackend {
    #[default]
    ClosedForm,
    Quadrature,
}

/// `int_0^inf u / (1 + u^alpha) du`.
pub fn normalized_integral_closed(alpha: f64) -> Result<f64> {
    if alpha <= 2.0 {
        return Err(Error::Divergent(alpha));
    }
    Ok((PI / alpha) / (2.0 * PI / alpha).sin())
}

// Breakpoint between the numerically integrated body and the series tail.
const QUAD_SPLIT: f64 = 64.0;

/// `int_0^inf u / (1 + u^alpha) du` by quadrature on `[0, U]` plus the
/// convergent tail series beyond `U`.
pub fn normalized_integral_quadrature(alpha: f64) -> Result<f64> {
    if alpha <= 2.0 {
        return Err(Error::Divergent(alpha));
    }
    let body = quadrature::integrate(
        |u| u / (1.0 + u.powf(alpha)),
        0.0,
        QUAD_SPLIT,
        1e-15,
        1e-14,
        4000,
    );
    if body.error > 1e-10 * body.value {
        return Err(Error::Degenerate(format!(
            "quadrature error estimate {:.3e} too large for alpha = {alpha}",
            body.error
        )));
    }
    Ok(body.value + normalized_tail(alpha, QUAD_SPLIT))
}

/// `int_U^inf u / (1 + u^alpha) du` for `U > 1`:
/// `sum_j (-1)^j U^(2 - alpha (j+1)) / (alpha (j+1) - 2)`.
pub(crate) fn normalized_tail(alpha: f64, upper: f64) -> f64 {
    debug_assert!(upper > 1.0);
    let ratio = upper.powf(-alpha);
    let mut power = upper.powf(2.0 - alpha);
    let mut sum = 0.0;
    for j in 0..200 {
        let denom = alpha * (j + 1) as f64 - 2.0;
        let term = power / denom;
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        power *= ratio;
    }
    sum
}

/// The interference integral `I` in m^2.
pub fn interference_integral(params: &NetworkParams, backend: IntegralBackend) -> Result<f64> {
    params.validate()?;
    let normalized = match backend {
        IntegralBackend::ClosedForm => normalized_integral_closed(params.alpha)?,
        IntegralBackend::Quadrature => normalized_integral_quadrature(params.alpha)?,
    };
    let scale = params.integral_scale();
    Ok(scale * scale * normalized)
}

/// Precomputed constants of the slot-success expression for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub noise_exponent: f64,
    pub integral: f64,
}

impl LinkModel {
    pub fn new(params: &NetworkParams, backend: IntegralBackend) -> Result<Self> {
        Ok(Self {
            noise_exponent: params.noise_exponent(),
            integral: interference_integral(params, backend)?,
        })
    }

    /// Interference-free success probability.
    pub fn noise_only(&self) -> f64 {
        (-self.noise_exponent).exp()
    }

    pub fn success(&self, lambda_eff: f64) -> f64 {
        (-self.noise_exponent - 2.0 * PI * lambda_eff * self.integral).exp()
    }
}

/// Conditional slot-success probability of the typical link given it
/// transmits, with `lambda_eff` transmitting interferers per m^2.
pub fn slot_success_prob(params: &NetworkParams, lambda_eff: f64) -> Result<f64> {
    slot_success_prob_with(params, lambda_eff, IntegralBackend::ClosedForm)
}

pub fn slot_success_prob_with(
    params: &NetworkParams,
    lambda_eff: f64,
    backend: IntegralBackend,
) -> Result<f64> {
    if !(lambda_eff >= 0.0 && lambda_eff.is_finite()) {
        return Err(Error::Domain {
            name: "lambda_eff",
            value: lambda_eff,
            range: "[0, inf)",
        });
    }
    Ok(LinkModel::new(params, backend)?.success(lambda_eff))
}

/// Exponent lost by ignoring interferers farther than `radius`:
/// `2 pi lambda_eff int_R^inf (...) r dr`. The truncated-disk success
/// probability is the infinite-plane value times `exp(bias)`.
pub fn truncation_exponent(params: &NetworkParams, lambda_eff: f64, radius: f64) -> f64 {
    let scale = params.integral_scale();
    let upper = radius / scale;
    let tail = if upper > 1.5 {
        normalized_tail(params.alpha, upper)
    } else {
        normalized_integral_closed(params.alpha).unwrap_or(f64::INFINITY)
            - quadrature::integrate(
                |u| u / (1.0 + u.powf(params.alpha)),
                0.0,
                upper,
                1e-15,
                1e-13,
                500,
            )
            .value
    };
    2.0 * PI * lambda_eff * scale * scale * tail
}

/// Disk radius whose truncation exponent is at most `2.5e-4`, grown in
/// steps of 25% from `20 r0` and capped at 20 km.
pub fn default_disk_radius(params: &NetworkParams, lambda_eff: f64) -> f64 {
    let mut radius = 20.0 * params.link_distance;
    while radius < 20_000.0 && truncation_exponent(params, lambda_eff, radius) > 2.5e-4 {
        radius *= 1.25;
    }
    radius.min(20_000.0)
}

/// Draws one PPP of interferers with density `lambda_eff` on a disk of
/// `disk_radius` around the typical receiver, unit-mean exponential channel
/// power on every link, and reports whether the typical link's SINR
/// exceeds the threshold.
pub fn sample_sinr_success<R: Rng + ?Sized>(
    params: &NetworkParams,
    lambda_eff: f64,
    rng: &mut R,
    disk_radius: f64,
) -> bool {
    let sampler = SinrSampler::new(params, disk_radius);
    let mut gains = Vec::new();
    sampler.draw_gains(lambda_eff, rng, &mut gains);
    let interference = sampler.faded_sum(&gains, rng);
    sampler.decide(interference, rng)
}

/// Reusable constants for repeated SINR draws.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SinrSampler {
    alpha_half: f64,
    radius_sq: f64,
    signal_gain: f64,
    gamma: f64,
    noise_over_power: f64,
}

impl SinrSampler {
    pub(crate) fn new(params: &NetworkParams, disk_radius: f64) -> Self {
        Self {
            alpha_half: params.alpha / 2.0,
            radius_sq: disk_radius * disk_radius,
            signal_gain: params.link_distance.powf(-params.alpha),
            gamma: params.gamma,
            noise_over_power: params.noise_power / params.tx_power,
        }
    }

    pub(crate) fn expected_points(&self, density: f64) -> f64 {
        density * PI * self.radius_sq
    }

    /// Draws a PPP realization and returns its path gains `r^-alpha`.
    pub(crate) fn draw_gains<R: Rng + ?Sized>(&self, density: f64, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        let mean = self.expected_points(density);
        if mean <= 0.0 {
            return;
        }
        let count = Poisson::new(mean)
            .map(|d| d.sample(rng) as usize)
            .unwrap_or(0);
        out.reserve(count);
        for _ in 0..count {
            let r_sq = self.radius_sq * rng.random::<f64>();
            out.push(r_sq.powf(-self.alpha_half));
        }
    }

    /// Faded interference power from a set of path gains, divided by the
    /// transmit power.
    pub(crate) fn faded_sum<R: Rng + ?Sized>(&self, gains: &[f64], rng: &mut R) -> f64 {
        gains
            .iter()
            .map(|g| {
                let h: f64 = Exp1.sample(rng);
                h * g
            })
            .sum()
    }

    pub(crate) fn decide<R: Rng + ?Sized>(&self, interference: f64, rng: &mut R) -> bool {
        let h0: f64 = Exp1.sample(rng);
        h0 * self.signal_gain > self.gamma * (self.noise_over_power + interference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn defaults() -> NetworkParams {
        NetworkParams::default()
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-12);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn densities_examples() {
        let p = defaults();
        let d = effective_densities(&p, &AccessPolicy::new(1.0, 0.0, 0.3).unwrap(), 0.0).unwrap();
        assert_eq!((d.block, d.slot, d.post), (1e-4, 0.0, 0.0));
        let d = effective_densities(&p, &AccessPolicy::new(0.5, 0.5, 0.5).unwrap(), 0.0).unwrap();
        assert!((d.block - 5e-5).abs() < 1e-20);
        assert!((d.slot - 2.5e-5).abs() < 1e-20);
        assert_eq!(d.post, 0.0);
        let d = effective_densities(&p, &AccessPolicy::new(0.5, 0.5, 0.4).unwrap(), 1.0).unwrap();
        assert_eq!((d.block, d.slot), (0.0, 0.0));
        assert!((d.post - 4e-5).abs() < 1e-20);
        assert!(effective_densities(&p, &AccessPolicy::new(0.5, 0.5, 0.4).unwrap(), 1.2).is_err());
        assert!(AccessPolicy::new(0.5, 1.5, 0.4).is_err());
    }

    #[test]
    fn interference_free_limit() {
        let p = defaults();
        let rho = slot_success_prob(&p, 0.0).unwrap();
        let expected = (-p.gamma * p.noise_power * p.link_distance.powf(p.alpha) / p.tx_power).exp();
        assert_eq!(rho, expected);
    }

    #[test]
    fn reference_point() {
        let p = defaults();
        let scale = 0.1f64.powf(2.0 / 3.0) * ((PI / 3.0) / (2.0 * PI / 3.0).sin()) * 625.0;
        assert!((0.1f64.powf(2.0 / 3.0) - 0.215_443_469).abs() < 1e-9);
        assert!(((PI / 3.0) / (2.0 * PI / 3.0).sin() - 1.209_199_576).abs() < 1e-9);
        let expected = (-p.noise_exponent()).exp() * (-2.0 * PI * 1e-4 * scale).exp();
        let rho = slot_success_prob(&p, 1e-4).unwrap();
        assert!((rho - expected).abs() < 1e-15);
        let rho_q = slot_success_prob_with(&p, 1e-4, IntegralBackend::Quadrature).unwrap();
        assert!(((rho_q - rho) / rho).abs() < 1e-9);
        assert!(slot_success_prob(&p, 2e-4).unwrap() < rho);
    }

    #[test]
    fn backends_agree() {
        for alpha in [2.5, 3.0, 3.5, 4.0, 5.0] {
            let c = normalized_integral_closed(alpha).unwrap();
            let q = normalized_integral_quadrature(alpha).unwrap();
            assert!(((c - q) / c).abs() < 1e-11, "alpha {alpha}: {c} vs {q}");
        }
    }

    #[test]
    fn divergent_exponent() {
        assert!(matches!(normalized_integral_closed(2.0), Err(Error::Divergent(_))));
        let mut p = defaults();
        p.alpha = 1.9;
        assert!(matches!(slot_success_prob(&p, 1e-4), Err(Error::Divergent(_))));
    }

    #[test]
    fn tail_matches_quadrature() {
        for alpha in [2.5, 3.0, 4.0] {
            let direct =
                quadrature::integrate(|u| u / (1.0 + u.powf(alpha)), 3.0, 1e5, 1e-15, 1e-13, 4000)
                    .value
                    + normalized_tail(alpha, 1e5);
            let series = normalized_tail(alpha, 3.0);
            assert!(((direct - series) / series).abs() < 1e-9, "alpha {alpha}");
        }
    }

    #[test]
    fn default_radius_bounds_bias() {
        let p = defaults();
        let r = default_disk_radius(&p, 1e-4);
        assert!(truncation_exponent(&p, 1e-4, r) <= 2.5e-4);
        assert!(r > 1000.0 && r < 10_000.0, "{r}");
    }

    #[test]
    fn noise_free_sampler_always_succeeds() {
        let mut p = defaults();
        p.noise_power = 1e-30;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let wins = (0..2000)
            .filter(|_| sample_sinr_success(&p, 0.0, &mut rng, 1000.0))
            .count();
        assert_eq!(wins, 2000);
        p.gamma = 1e20;
        p.noise_power = 1e-17;
        let wins = (0..2000)
            .filter(|_| sample_sinr_success(&p, 1e-4, &mut rng, 1000.0))
            .count();
        assert_eq!(wins, 0);
    }
}
