//! Slot success probability of the typical link as the access fraction
//! grows, with both interference-integral backends and a Poisson point
//! process simulation at a few points.
//!
//! cargo run --release --example success_probability

use aloha_control::montecarlo::{simulate_spatial, SpatialOptions};
use aloha_control::spatial::{slot_success_prob_with, IntegralBackend};
use aloha_control::{BlockShape, NetworkParams};

fn main() -> aloha_control::Result<()> {
    let params = NetworkParams::default();
    let shape = BlockShape::new(5, 3)?;
    println!("lambda = {:e} /m^2, alpha = {}, gamma = {}, r0 = {} m", params.lambda, params.alpha, params.gamma, params.link_distance);
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "access", "closed", "quadrature", "simulated", "z");
    for i in 0..=10 {
        let d = i as f64 / 10.0;
        let lambda_eff = d * params.lambda;
        let closed = slot_success_prob_with(&params, lambda_eff, IntegralBackend::ClosedForm)?;
        let quad = slot_success_prob_with(&params, lambda_eff, IntegralBackend::Quadrature)?;
        if i % 5 == 0 {
            let sim = simulate_spatial(&params, &[lambda_eff], &shape, 2_000, 11, SpatialOptions::default())?;
            let est = sim.blocks[0].slot_rate;
            println!("{d:>6.1} {closed:>12.8} {quad:>12.8} {:>12.6} {:>10.2}", est.mean, est.z_score(closed));
        } else {
            println!("{d:>6.1} {closed:>12.8} {quad:>12.8}");
        }
    }
    Ok(())
}
