//! Controllability recursions over a fixed policy schedule, and the two-slot
//! case where block access beats slot access at the same access rate.
//!
//! cargo run --example controllability

use aloha_control::montecarlo::simulate_regimes;
use aloha_control::spatial::LinkModel;
use aloha_control::{
    effective_densities, first_time_controllability, AccessPolicy, BlockShape, ControllabilityState,
    NetworkParams,
};

fn main() -> aloha_control::Result<()> {
    let two = BlockShape::new(2, 2)?;
    println!("T = v = 2, rho = 0.9");
    for d in [0.2, 0.5, 0.8] {
        let block = first_time_controllability(&two, &AccessPolicy::new(d, 0.0, 0.0)?, 0.9)?;
        let slot = first_time_controllability(&two, &AccessPolicy::new(0.0, d, 0.0)?, 0.9)?;
        println!("  access {d}: block {block:.4}  slot {slot:.4}  gap {:.4}", block - slot);
    }

    let params = NetworkParams::default();
    let link = LinkModel::new(&params, Default::default())?;
    let shape = BlockShape::new(5, 3)?;
    let policies = [
        AccessPolicy::new(0.5, 0.5, 0.2)?,
        AccessPolicy::new(0.8, 0.4, 0.6)?,
        AccessPolicy::new(0.2, 0.9, 1.0)?,
        AccessPolicy::new(0.0, 1.0, 1.0)?,
    ];
    let mut state: Option<ControllabilityState> = None;
    let mut schedule = Vec::new();
    println!("\n k  rho       pi        P_O       P_O~");
    for policy in &policies {
        let po_prev = state.map_or(0.0, |s| s.cumulative);
        let rho = link.success(effective_densities(&params, policy, po_prev)?.effective);
        let next = ControllabilityState::step(state.as_ref(), &shape, policy, rho)?;
        println!(
            "{:>2}  {rho:.6}  {:.6}  {:.6}  {:.6}",
            next.k, next.first_time, next.cumulative, next.instantaneous
        );
        schedule.push((*policy, rho));
        state = Some(next);
    }

    let sim = simulate_regimes(&schedule, &shape, 200_000, 5)?;
    println!("\nsimulated (200k controllers)");
    for b in &sim.blocks {
        println!(
            "{:>2}  pi {:.4}±{:.4}  P_O {:.4}±{:.4}  P_O~ {:.4}±{:.4}",
            b.k,
            b.first_time.mean,
            b.first_time.std_error,
            b.cumulative.mean,
            b.cumulative.std_error,
            b.instantaneous.mean,
            b.instantaneous.std_error
        );
    }
    Ok(())
}
