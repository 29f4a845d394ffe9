//! Analytic-versus-simulation comparison suite.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::controllability::{advance_unchecked, first_time_unchecked, instantaneous_unchecked};
use crate::error::Result;
use crate::latency::{expected_paoi, expected_peak_latency, BlockHistory, PclProfile};
use crate::montecarlo::{
    simulate_bernoulli, simulate_regimes, simulate_renewal_pcl, simulate_spatial, Estimate,
    SpatialOptions,
};
use crate::spatial::{effective_densities_unchecked, AccessPolicy, LinkModel};

/// Comparisons with `|z|` at or above this fail.
pub const Z_LIMIT: f64 = 3.0;

/// Per-block slot success probabilities of the Bernoulli-tier history.
pub const BERNOULLI_HISTORY: [f64; 4] = [0.35, 0.6, 0.2, 0.5];

/// Policies of the regime-tier schedule, `(delta_B, delta_S, delta_C)`.
pub const REGIME_SCHEDULE: [(f64, f64, f64); 4] = [
    (0.7, 0.5, 0.3),
    (0.4, 0.8, 0.6),
    (0.0, 1.0, 0.9),
    (0.2, 0.3, 1.0),
];

/// Blocks of the constant-probability controllability chain.
pub const RENEWAL_BLOCKS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub samples: u64,
    pub z: f64,
    pub pass: bool,
}

impl Comparison {
    fn new(name: impl Into<String>, analytic: f64, est: Estimate) -> Self {
        let z = est.z_score(analytic);
        Self {
            name: name.into(),
            analytic,
            empirical: est.mean,
            std_error: est.std_error,
            samples: est.count,
            z,
            pass: z.abs() < Z_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<Comparison>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Comparison> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Runs every comparison for `cfg`. The seed of each simulator is derived
/// from `cfg.seed`, so the report depends on nothing else.
pub fn validation_suite(cfg: &RunConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let shape = cfg.shape()?;
    let params = &cfg.network;
    let link = LinkModel::new(params, cfg.optimizer.backend)?;
    let mode = cfg.optimizer.virtual_block;
    let skew = 1.0 + cfg.perturb_rho;
    let analytic_rho = |rho: f64| (rho * skew).clamp(0.0, 1.0);
    let mut rows = Vec::new();

    // Bernoulli tier
    let hist = BlockHistory::from_success(shape.slots(), &BERNOULLI_HISTORY)?;
    let bern = simulate_bernoulli(&BERNOULLI_HISTORY, &shape, cfg.episodes, cfg.seed, mode)?;
    let last = bern.last();
    let p = BERNOULLI_HISTORY[BERNOULLI_HISTORY.len() - 1];
    let k = BERNOULLI_HISTORY.len();
    rows.push(Comparison::new(format!("bernoulli/slot-rate k={k}"), p, last.slot_rate));
    rows.push(Comparison::new(
        format!("bernoulli/run-rate k={k}"),
        shape.chi(p)?,
        last.run_rate,
    ));
    rows.push(Comparison::new(
        format!("bernoulli/block-success k={k}"),
        1.0 - (1.0 - p).powi(shape.slots() as i32),
        last.success_rate,
    ));
    rows.push(Comparison::new(
        format!("bernoulli/peak-latency k={k}"),
        expected_peak_latency(&hist, mode)?,
        last.latency,
    ));
    rows.push(Comparison::new(
        format!("bernoulli/peak-aoi k={k}"),
        expected_paoi(&hist, mode)?,
        last.paoi,
    ));

    // regime tier; interference follows the analytic P_O of the schedule
    let mut schedule = Vec::new();
    let mut po_true = 0.0;
    for &(b, s, c) in &REGIME_SCHEDULE {
        let policy = AccessPolicy::new(b, s, c)?;
        let lambda_eff = effective_densities_unchecked(params.lambda, &policy, po_true).effective;
        let rho = link.success(lambda_eff);
        schedule.push((policy, rho));
        po_true = advance_unchecked(po_true, first_time_unchecked(&shape, &policy, rho));
    }
    let mut expected = (0.0, 0.0, 0.0);
    let mut po = 0.0;
    for (policy, rho) in &schedule {
        let r = analytic_rho(*rho);
        let pi = first_time_unchecked(&shape, policy, r);
        let inst = instantaneous_unchecked(po, pi, shape.chi(policy.delta_c * r)?);
        po = advance_unchecked(po, pi);
        expected = (pi, po, inst);
    }
    let regimes = simulate_regimes(&schedule, &shape, cfg.episodes, cfg.seed.wrapping_add(1))?;
    let (pi, po, inst) = expected;
    let block = regimes.blocks[regimes.blocks.len() - 1];
    let k = block.k;
    rows.push(Comparison::new(format!("regimes/first-time k={k}"), pi, block.first_time));
    rows.push(Comparison::new(format!("regimes/cumulative k={k}"), po, block.cumulative));
    rows.push(Comparison::new(
        format!("regimes/instantaneous k={k}"),
        inst,
        block.instantaneous,
    ));

    // renewal tier with a constant controllability probability
    let rho_full = link.success(params.lambda);
    let c = shape.chi(0.6 * rho_full)?;
    let series = vec![c; RENEWAL_BLOCKS];
    let profile = PclProfile::for_next_block(&BlockHistory::from_parts(
        shape.slots(),
        series[..RENEWAL_BLOCKS - 1].to_vec(),
        series[..RENEWAL_BLOCKS - 1].to_vec(),
        series[..RENEWAL_BLOCKS - 1].to_vec(),
    )?)?;
    let renewal = simulate_renewal_pcl(&series, &series, cfg.episodes, cfg.seed.wrapping_add(2))?;
    let k = RENEWAL_BLOCKS;
    rows.push(Comparison::new(format!("renewal/pcl-mean k={k}"), profile.mean(), renewal.mean));
    rows.push(Comparison::new(
        format!("renewal/pcl-pmf k={k} tau=1"),
        profile.pmf()[0],
        renewal.pmf[0],
    ));
    rows.push(Comparison::new(
        format!("renewal/pcl-pmf k={k} tau={k}"),
        profile.pmf()[k - 1],
        renewal.pmf[k - 1],
    ));

    // spatial tier, full access in the first block
    let spatial_episodes = (cfg.episodes / 20).max(500);
    let spatial = simulate_spatial(
        params,
        &[params.lambda],
        &shape,
        spatial_episodes,
        cfg.seed.wrapping_add(3),
        SpatialOptions::default(),
    )?;
    let s = spatial.blocks[0];
    let r = analytic_rho(rho_full);
    rows.push(Comparison::new("spatial/slot-rate full-access", r, s.slot_rate));
    rows.push(Comparison::new(
        "spatial/run-rate full-access",
        shape.chi(r)?,
        s.run_rate,
    ));
    Ok(ValidationReport { rows })
}
