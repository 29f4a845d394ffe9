//! Latency and age analytics over a block history.
//!
//! * expected peak latency of the first successful input in block `k`,
//! * expected peak age of information of that input,
//! * distribution and mean of the peak control latency (blocks between
//!   consecutive controllable blocks),
//! * the current-block latency contribution mixed over access regimes, and
//!   the two joint CDF terms used by the per-block cost.
//!
//! Products of per-block failure probabilities are accumulated in log space,
//! so long horizons with near-certain blocks do not underflow into NaNs.

use serde::{Deserialize, Serialize};

use crate::controllability::{first_time_unchecked, instantaneous_unchecked};
use crate::error::{check_probability, Error, Result};
use crate::runlength::{truncated_geometric_mean_unchecked, BlockShape};
use crate::spatial::AccessPolicy;

/// How the virtual block 0 preceding the horizon enters the gap sums of
/// peak latency and peak AoI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VirtualBlock {
    /// Block 0 is an ordinary block with `p_0 = p_1`. Gap probabilities then
    /// sum to `1 - prod_{i<k} q_i^T`; the missing mass contributes nothing to
    /// the gap terms.
    #[default]
    ExtendFirst,
    /// Block 0 is a success whose last slot is a success (`W_0 = 0`), so the
    /// gap distribution is proper.
    BoundarySuccess,
}

/// Per-block series consumed by the latency recursions, block 1 first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockHistory {
    slots: usize,
    slot_success: Vec<f64>,
    instantaneous: Vec<f64>,
    post_chi: Vec<f64>,
}

impl BlockHistory {
    pub fn new(slots: usize) -> Self {
        Self {
            slots,
            ..Self::default()
        }
    }

    pub fn from_parts(
        slots: usize,
        slot_success: Vec<f64>,
        instantaneous: Vec<f64>,
        post_chi: Vec<f64>,
    ) -> Result<Self> {
        if slot_success.len() != instantaneous.len() || slot_success.len() != post_chi.len() {
            return Err(Error::Dimension(format!(
                "history lengths differ: {} / {} / {}",
                slot_success.len(),
                instantaneous.len(),
                post_chi.len()
            )));
        }
        let mut hist = Self::new(slots);
        for ((p, inst), post) in slot_success.into_iter().zip(instantaneous).zip(post_chi) {
            hist.push(p, inst, post)?;
        }
        Ok(hist)
    }

    /// History carrying only slot-success probabilities (controllability
    /// series set to zero); enough for peak latency and peak AoI.
    pub fn from_success(slots: usize, slot_success: &[f64]) -> Result<Self> {
        let zeros = vec![0.0; slot_success.len()];
        Self::from_parts(slots, slot_success.to_vec(), zeros.clone(), zeros)
    }

    pub fn push(&mut self, slot_success: f64, instantaneous: f64, post_chi: f64) -> Result<()> {
        check_probability("slot_success", slot_success)?;
        check_probability("instantaneous", instantaneous)?;
        check_probability("post_chi", post_chi)?;
        self.slot_success.push(slot_success);
        self.instantaneous.push(instantaneous);
        self.post_chi.push(post_chi);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.slot_success.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_success.is_empty()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn slot_success(&self) -> &[f64] {
        &self.slot_success
    }

    pub fn instantaneous(&self) -> &[f64] {
        &self.instantaneous
    }

    pub fn post_chi(&self) -> &[f64] {
        &self.post_chi
    }

    /// The first `len` blocks.
    pub fn prefix(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            slots: self.slots,
            slot_success: self.slot_success[..len].to_vec(),
            instantaneous: self.instantaneous[..len].to_vec(),
            post_chi: self.post_chi[..len].to_vec(),
        }
    }
}

/// One admissible value of the block gap `kappa` to the previous
/// successful block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTerm {
    pub kappa: usize,
    /// `(1 - q_{k-kappa}^T) prod_{i=k-kappa+1}^{k-1} q_i^T`.
    pub weight: f64,
    /// Mean trailing failures of block `k - kappa` given it succeeded.
    pub trailing_failures: f64,
}

fn log_fail_block(p: f64, slots: usize) -> f64 {
    slots as f64 * (-p).ln_1p()
}

fn block_success(p: f64, slots: usize) -> f64 {
    -log_fail_block(p, slots).exp_m1()
}

/// Gap distribution of the last successful block before block `k =
/// hist.len()`, `kappa = 1..=k`.
pub fn gap_terms(hist: &BlockHistory, mode: VirtualBlock) -> Result<Vec<GapTerm>> {
    let k = hist.len();
    if k == 0 {
        return Err(Error::Degenerate("empty history".into()));
    }
    let p = hist.slot_success();
    let t = hist.slots();
    let mut terms = Vec::with_capacity(k);
    let mut log_survival: f64 = 0.0;
    for kappa in 1..=k {
        let block = k - kappa;
        let (weight, trailing, log_fail) = if block == 0 && mode == VirtualBlock::BoundarySuccess {
            (log_survival.exp(), 0.0, f64::NEG_INFINITY)
        } else {
            // block 0 in ExtendFirst reuses p_1
            let pj = p[block.max(1) - 1];
            let trailing = if pj > 0.0 {
                truncated_geometric_mean_unchecked(pj, t)
            } else {
                0.0
            };
            (
                log_survival.exp() * block_success(pj, t),
                trailing,
                log_fail_block(pj, t),
            )
        };
        terms.push(GapTerm {
            kappa,
            weight,
            trailing_failures: trailing,
        });
        log_survival += log_fail;
    }
    Ok(terms)
}

fn current_block_term(hist: &BlockHistory) -> Result<f64> {
    let k = hist.len();
    if k == 0 {
        return Err(Error::Degenerate("empty history".into()));
    }
    let pk = hist.slot_success()[k - 1];
    if pk == 0.0 {
        return Err(Error::Degenerate(format!(
            "block {k} has success probability 0 and cannot contain a success"
        )));
    }
    Ok(truncated_geometric_mean_unchecked(pk, hist.slots()))
}

/// Expected peak latency (slots) of the first successful input of block
/// `k = hist.len()`, given block `k` holds a success.
pub fn expected_peak_latency(hist: &BlockHistory, mode: VirtualBlock) -> Result<f64> {
    let leading = current_block_term(hist)?;
    let t = hist.slots() as f64;
    let gaps: f64 = gap_terms(hist, mode)?
        .iter()
        .map(|g| g.weight * (g.trailing_failures + t * g.kappa as f64))
        .sum();
    Ok(gaps - t + leading + 1.0)
}

/// Expected peak AoI (slots) of the first successful input of block
/// `k = hist.len()`, given block `k` holds a success.
pub fn expected_paoi(hist: &BlockHistory, mode: VirtualBlock) -> Result<f64> {
    let leading = current_block_term(hist)?;
    let t = hist.slots() as f64;
    let gaps: f64 = gap_terms(hist, mode)?
        .iter()
        .map(|g| g.weight * g.kappa as f64)
        .sum();
    Ok(t * gaps + leading + 1.0)
}

/// Distribution of the peak control latency at a controllable block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PclProfile {
    /// `pmf[tau - 1] = P(latency = tau | block controllable)`.
    pmf: Vec<f64>,
}

impl PclProfile {
    /// Profile of block `k = prior.len() + 1`. Only blocks before `k` enter;
    /// block 0 is controllable by convention.
    pub fn for_next_block(prior: &BlockHistory) -> Result<Self> {
        let k = prior.len() + 1;
        let inst = prior.instantaneous();
        let post = prior.post_chi();
        let mut log_weights = Vec::with_capacity(k);
        let mut log_survival = 0.0;
        for tau in 1..=k {
            let block = k - tau;
            let p_inst = if block == 0 { 1.0 } else { inst[block - 1] };
            log_weights.push(p_inst.ln() + log_survival);
            if block >= 1 {
                log_survival += (-post[block - 1]).ln_1p();
            }
        }
        let max = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Degenerate(format!(
                "no earlier block can be controllable before block {k}"
            )));
        }
        let unnorm: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = unnorm.iter().sum();
        Ok(Self {
            pmf: unnorm.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn into_pmf(self) -> Vec<f64> {
        self.pmf
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// `P(latency <= eta | block controllable)`.
    pub fn cdf(&self, eta: f64) -> f64 {
        if eta < 1.0 {
            return 0.0;
        }
        let upto = (eta.floor() as usize).min(self.pmf.len());
        self.pmf[..upto].iter().sum()
    }
}

/// Peak-control-latency PMF of block `k = hist.len()`, indexed by `tau - 1`.
pub fn pcl_pmf(hist: &BlockHistory) -> Result<Vec<f64>> {
    if hist.is_empty() {
        return Err(Error::Degenerate("empty history".into()));
    }
    Ok(PclProfile::for_next_block(&hist.prefix(hist.len() - 1))?.into_pmf())
}

/// Expected peak control latency (blocks) of block `k = hist.len()`.
pub fn expected_pcl(hist: &BlockHistory) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::Degenerate("empty history".into()));
    }
    Ok(PclProfile::for_next_block(&hist.prefix(hist.len() - 1))?.mean())
}

/// Access regime of a controller within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Block,
    Slot,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTerm {
    pub regime: Regime,
    /// Share of controllers that are in this regime and may transmit.
    pub fraction: f64,
    /// Slot success probability of a controller in this regime.
    pub success: f64,
    /// `1 - (1 - success)^T`.
    pub block_success: f64,
    /// Probability of this regime given the block holds a success.
    pub posterior: f64,
}

/// Current-block latency contribution mixed over regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeMixture {
    pub terms: [RegimeTerm; 3],
    /// `sum_phi fraction_phi * block_success_phi`.
    pub block_success_prob: f64,
    /// Posterior-weighted mean leading failures (slots).
    pub theta_curr: f64,
    /// Posterior-weighted slot success probability.
    pub posterior_success: f64,
}

/// Regime mixture of the current-block latency term for one candidate
/// policy.
pub fn current_block_latency(
    shape: &BlockShape,
    policy: &AccessPolicy,
    rho: f64,
    po_prev: f64,
) -> Result<RegimeMixture> {
    policy.validate()?;
    check_probability("rho", rho)?;
    check_probability("po_prev", po_prev)?;
    regime_mixture(shape.slots(), policy, rho, po_prev)
}

pub(crate) fn regime_mixture(
    slots: usize,
    policy: &AccessPolicy,
    rho: f64,
    po_prev: f64,
) -> Result<RegimeMixture> {
    let pre = 1.0 - po_prev;
    let raw = [
        (Regime::Block, pre * policy.delta_b, rho),
        (
            Regime::Slot,
            pre * (1.0 - policy.delta_b) * policy.delta_s,
            policy.delta_s * rho,
        ),
        (Regime::Post, po_prev * policy.delta_c, policy.delta_c * rho),
    ];
    let mut terms = raw.map(|(regime, fraction, success)| RegimeTerm {
        regime,
        fraction,
        success,
        block_success: block_success(success, slots),
        posterior: 0.0,
    });
    let norm: f64 = terms.iter().map(|t| t.fraction * t.block_success).sum();
    if norm <= 0.0 {
        return Err(Error::Degenerate(
            "no access regime can deliver a success in this block".into(),
        ));
    }
    let mut theta_curr = 0.0;
    let mut posterior_success = 0.0;
    for term in &mut terms {
        term.posterior = term.fraction * term.block_success / norm;
        if term.posterior > 0.0 {
            theta_curr += term.posterior * truncated_geometric_mean_unchecked(term.success, slots);
            posterior_success += term.posterior * term.success;
        }
    }
    Ok(RegimeMixture {
        terms,
        block_success_prob: norm,
        theta_curr,
        posterior_success,
    })
}

/// Joint CDF terms entering the per-block cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfTerms {
    /// `P(theta_curr <= eta_curr, block holds a success)`.
    pub current: f64,
    /// `P(peak control latency <= eta_pcl, block controllable)`.
    pub pcl: f64,
}

/// Both CDF terms for block `k = prior.len() + 1`, with the current-block
/// term in indicator form: `1{theta_curr <= eta_curr} P(Z(k) = 1)`.
#[allow(clippy::too_many_arguments)]
pub fn cdf_terms(
    shape: &BlockShape,
    policy: &AccessPolicy,
    rho: f64,
    po_prev: f64,
    prior: &BlockHistory,
    eta_curr: f64,
    eta_pcl: f64,
) -> Result<CdfTerms> {
    if !(eta_curr >= 0.0 && eta_pcl >= 0.0) {
        return Err(Error::Domain {
            name: "eta",
            value: eta_curr.min(eta_pcl),
            range: "[0, inf)",
        });
    }
    let mixture = current_block_latency(shape, policy, rho, po_prev)?;
    let pi = first_time_unchecked(shape, policy, rho);
    let inst = instantaneous_unchecked(po_prev, pi, shape.chi_unchecked(policy.delta_c * rho));
    let profile = PclProfile::for_next_block(prior)?;
    let current = if mixture.theta_curr <= eta_curr {
        mixture.block_success_prob
    } else {
        0.0
    };
    Ok(CdfTerms {
        current,
        pcl: profile.cdf(eta_pcl) * inst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Peak latency evaluated term by term as the closed-form sum is
    /// written, with explicit products and `q_0` supplied by the caller.
    fn peak_latency_verbatim(p: &[f64], p0: f64, t: usize) -> f64 {
        let k = p.len();
        let q = |i: usize| if i == 0 { 1.0 - p0 } else { 1.0 - p[i - 1] };
        let pp = |i: usize| if i == 0 { p0 } else { p[i - 1] };
        let tt = t as f64;
        let qt = |i: usize| q(i).powi(t as i32);
        let mut first = 0.0;
        let mut second = 0.0;
        for kappa in 1..=k {
            let prod_a: f64 = ((k - kappa + 1)..k).map(qt).product();
            first += (1.0 - qt(k - kappa)) * prod_a * (q(k - kappa) / pp(k - kappa) + tt * kappa as f64);
            let prod_b: f64 = ((k - kappa)..k).map(qt).product();
            second += prod_b;
        }
        let qk = q(k);
        let pk = pp(k);
        first - tt * second - tt + (qk / pk - tt * qk.powi(t as i32) / (1.0 - qk.powi(t as i32))) + 1.0
    }

    fn paoi_verbatim(p: &[f64], p0: f64, t: usize) -> f64 {
        let k = p.len();
        let q = |i: usize| if i == 0 { 1.0 - p0 } else { 1.0 - p[i - 1] };
        let qt = |i: usize| q(i).powi(t as i32);
        let tt = t as f64;
        let mut sum = 0.0;
        for kappa in 1..=k {
            let prod: f64 = ((k - kappa + 1)..k).map(qt).product();
            sum += kappa as f64 * (1.0 - qt(k - kappa)) * prod;
        }
        let qk = q(k);
        let pk = 1.0 - qk;
        tt * sum + (qk / pk - tt * qk.powi(t as i32) / (1.0 - qk.powi(t as i32))) + 1.0
    }

    #[test]
    fn matches_verbatim_sums() {
        let histories: [&[f64]; 4] = [
            &[0.5],
            &[0.9, 0.1, 0.8],
            &[0.2, 0.3, 0.05, 0.6, 0.7, 0.4],
            &[0.35; 12],
        ];
        for p in histories {
            let hist = BlockHistory::from_success(5, p).unwrap();
            let pl = expected_peak_latency(&hist, VirtualBlock::ExtendFirst).unwrap();
            let pa = expected_paoi(&hist, VirtualBlock::ExtendFirst).unwrap();
            let pl_ref = peak_latency_verbatim(p, p[0], 5);
            let pa_ref = paoi_verbatim(p, p[0], 5);
            assert!((pl - pl_ref).abs() < 1e-12, "{p:?}: {pl} vs {pl_ref}");
            assert!((pa - pa_ref).abs() < 1e-12, "{p:?}: {pa} vs {pa_ref}");
        }
    }

    #[test]
    fn single_block_paoi_value() {
        let hist = BlockHistory::from_success(5, &[0.5]).unwrap();
        let pa = expected_paoi(&hist, VirtualBlock::ExtendFirst).unwrap();
        let expected = 5.0 * (31.0 / 32.0) + 26.0 / 31.0 + 1.0;
        assert!((pa - expected).abs() < 1e-12);
    }

    #[test]
    fn certain_success() {
        for mode in [VirtualBlock::ExtendFirst, VirtualBlock::BoundarySuccess] {
            for k in 1..5 {
                let hist = BlockHistory::from_success(5, &vec![1.0; k]).unwrap();
                assert!((expected_peak_latency(&hist, mode).unwrap() - 1.0).abs() < 1e-12);
                assert!((expected_paoi(&hist, mode).unwrap() - 6.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_mode_gap_distribution_is_proper() {
        let hist = BlockHistory::from_success(4, &[0.1, 0.3, 0.2, 0.6]).unwrap();
        let total: f64 = gap_terms(&hist, VirtualBlock::BoundarySuccess)
            .unwrap()
            .iter()
            .map(|g| g.weight)
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
        let deficit: f64 = [0.1f64, 0.1, 0.3, 0.2]
            .iter()
            .map(|p| (1.0 - p).powi(4))
            .product();
        let total: f64 = gap_terms(&hist, VirtualBlock::ExtendFirst)
            .unwrap()
            .iter()
            .map(|g| g.weight)
            .sum();
        assert!((total - (1.0 - deficit)).abs() < 1e-14);
    }

    #[test]
    fn zero_success_current_block_rejected() {
        let hist = BlockHistory::from_success(5, &[0.4, 0.0]).unwrap();
        assert!(matches!(
            expected_paoi(&hist, VirtualBlock::ExtendFirst),
            Err(Error::Degenerate(_))
        ));
        // a silent earlier block is fine
        let hist = BlockHistory::from_success(5, &[0.0, 0.4]).unwrap();
        assert!(expected_peak_latency(&hist, VirtualBlock::BoundarySuccess).is_ok());
    }

    #[test]
    fn pcl_first_block_point_mass() {
        let hist = BlockHistory::from_parts(5, vec![0.5], vec![0.3], vec![0.4]).unwrap();
        assert_eq!(pcl_pmf(&hist).unwrap(), vec![1.0]);
        assert_eq!(expected_pcl(&hist).unwrap(), 1.0);
    }

    #[test]
    fn pcl_constant_regime_is_censored_geometric() {
        let c = 0.3;
        let k = 9;
        let hist = BlockHistory::from_parts(5, vec![0.5; k], vec![c; k], vec![c; k]).unwrap();
        let pmf = pcl_pmf(&hist).unwrap();
        for tau in 1..k {
            let expected = c * (1.0 - c).powi(tau as i32 - 1);
            assert!((pmf[tau - 1] - expected).abs() < 1e-15);
        }
        assert!((pmf[k - 1] - (1.0 - c).powi(k as i32 - 1)).abs() < 1e-15);
        let mean = expected_pcl(&hist).unwrap();
        assert!((mean - (1.0 - (1.0 - c).powi(k as i32)) / c).abs() < 1e-13);
    }

    #[test]
    fn pcl_degenerate_history() {
        let hist = BlockHistory::from_parts(5, vec![0.5; 3], vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(matches!(pcl_pmf(&hist), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_regime_mixtures() {
        let s = BlockShape::new(5, 2).unwrap();
        let rho = 0.7;
        let m = current_block_latency(&s, &AccessPolicy::new(1.0, 0.3, 0.9).unwrap(), rho, 0.0).unwrap();
        assert!((m.theta_curr - truncated_geometric_mean_unchecked(rho, 5)).abs() < 1e-15);
        let m = current_block_latency(&s, &AccessPolicy::new(0.2, 0.3, 0.6).unwrap(), rho, 1.0).unwrap();
        assert!((m.theta_curr - truncated_geometric_mean_unchecked(0.6 * rho, 5)).abs() < 1e-15);
        assert!(matches!(
            current_block_latency(&s, &AccessPolicy::new(0.0, 0.0, 0.6).unwrap(), rho, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn three_regime_mixture_by_hand() {
        // po_prev 0.5, deltas 0.5, rho 0.8, T = 5
        let s = BlockShape::new(5, 2).unwrap();
        let m = current_block_latency(&s, &AccessPolicy::new(0.5, 0.5, 0.5).unwrap(), 0.8, 0.5)
            .unwrap();
        let fractions = [0.25, 0.125, 0.25];
        let success = [0.8, 0.4, 0.4];
        let mut weights = [0.0; 3];
        let mut means = [0.0; 3];
        for i in 0..3 {
            let q: f64 = 1.0 - success[i];
            weights[i] = fractions[i] * (1.0 - q.powi(5));
            let mut num = 0.0;
            let mut den = 0.0;
            for n in 0..5 {
                num += n as f64 * q.powi(n) * success[i];
                den += q.powi(n) * success[i];
            }
            means[i] = num / den;
        }
        let norm: f64 = weights.iter().sum();
        let expected: f64 = (0..3).map(|i| weights[i] / norm * means[i]).sum();
        assert!((m.block_success_prob - norm).abs() < 1e-15);
        assert!((m.theta_curr - expected).abs() < 1e-14);
    }

    #[test]
    fn cdf_limits() {
        let s = BlockShape::new(5, 2).unwrap();
        let policy = AccessPolicy::new(0.4, 0.6, 0.7).unwrap();
        let prior = BlockHistory::from_parts(5, vec![0.6; 3], vec![0.5, 0.6, 0.7], vec![0.4, 0.5, 0.5])
            .unwrap();
        let rho = 0.85;
        let po_prev = 0.6;
        let all = cdf_terms(&s, &policy, rho, po_prev, &prior, 1e9, 1e9).unwrap();
        let mix = current_block_latency(&s, &policy, rho, po_prev).unwrap();
        let pi = first_time_unchecked(&s, &policy, rho);
        let inst = instantaneous_unchecked(po_prev, pi, s.chi(0.7 * rho).unwrap());
        assert!((all.current - mix.block_success_prob).abs() < 1e-15);
        assert!((all.pcl - inst).abs() < 1e-15);
        let none = cdf_terms(&s, &policy, rho, po_prev, &prior, 0.0, 0.5).unwrap();
        assert_eq!(none.pcl, 0.0);
        let one = cdf_terms(&s, &policy, rho, po_prev, &prior, 3.0, 1.0).unwrap();
        let pmf = PclProfile::for_next_block(&prior).unwrap();
        assert!((one.pcl - pmf.pmf()[0] * inst).abs() < 1e-15);
    }
}
