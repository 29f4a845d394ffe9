//! Peak latency, peak age of information and peak control latency of a
//! short history, against the Bernoulli and renewal simulators.
//!
//! cargo run --release --example latency

use aloha_control::montecarlo::{simulate_bernoulli, simulate_renewal_pcl};
use aloha_control::{
    expected_paoi, expected_pcl, expected_peak_latency, pcl_pmf, BlockHistory, VirtualBlock,
};

fn main() -> aloha_control::Result<()> {
    let slots = 5;
    let p = [0.3, 0.55, 0.8, 0.45];
    let hist = BlockHistory::from_success(slots, &p)?;

    for mode in [VirtualBlock::ExtendFirst, VirtualBlock::BoundarySuccess] {
        let sim = simulate_bernoulli(&p, &aloha_control::BlockShape::new(slots, 2)?, 400_000, 3, mode)?;
        let last = sim.last();
        println!("{mode:?}");
        println!(
            "  peak latency  {:.5}  simulated {:.5} ± {:.5}",
            expected_peak_latency(&hist, mode)?,
            last.latency.mean,
            last.latency.std_error
        );
        println!(
            "  peak AoI      {:.5}  simulated {:.5} ± {:.5}",
            expected_paoi(&hist, mode)?,
            last.paoi.mean,
            last.paoi.std_error
        );
    }

    // single block, p = 1/2
    let one = BlockHistory::from_success(slots, &[0.5])?;
    println!("\nk = 1, p = 0.5: peak AoI {:.10}", expected_paoi(&one, VirtualBlock::ExtendFirst)?);

    // constant controllability probability c: peak control latency
    let c = 0.35;
    let k = 8;
    let chain = BlockHistory::from_parts(slots, vec![0.5; k], vec![c; k], vec![c; k])?;
    let pmf = pcl_pmf(&chain)?;
    let sim = simulate_renewal_pcl(&vec![c; k], &vec![c; k], 400_000, 9)?;
    println!("\npeak control latency, c = {c}, k = {k}");
    for (tau, (a, e)) in pmf.iter().zip(&sim.pmf).enumerate() {
        println!("  tau = {}: {a:.5}  simulated {:.5}", tau + 1, e.mean);
    }
    println!(
        "  mean {:.5} (limit 1/c = {:.5}), simulated {:.5} ± {:.5}",
        expected_pcl(&chain)?,
        1.0 / c,
        sim.mean.mean,
        sim.mean.std_error
    );
    Ok(())
}
