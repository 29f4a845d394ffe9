//! Optimizes the access policy block by block for several controllability
//! indices and prints where controllability sets in.
//!
//! cargo run --release --example optimize_horizon -- [horizon] [grid_step]

use aloha_control::{run_horizon, BlockShape, NetworkParams, OptimizerConfig};

fn main() -> aloha_control::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon = args.next().map_or(400, |s| s.parse().expect("horizon"));
    let grid_step = args.next().map_or(0.05, |s| s.parse().expect("grid step"));
    let params = NetworkParams::default();
    let config = OptimizerConfig {
        horizon,
        grid_step,
        ..OptimizerConfig::default()
    };

    println!(" v  P_O>=0.99  P_O>1-1e-6  final (dB, dS, dC)   E[pcl]  1/chi_C");
    for v in 2..=5 {
        let shape = BlockShape::new(5, v)?;
        let trace = run_horizon(&params, &shape, &config)?;
        let first = |th: f64| {
            trace
                .records
                .iter()
                .find(|r| r.po > th)
                .map_or("-".to_owned(), |r| r.k.to_string())
        };
        let last = trace.records.last().unwrap();
        println!(
            "{v:>2}  {:>9}  {:>10}  ({:.2}, {:.2}, {:.2})  {:>7.3}  {:>7.3}",
            first(0.99 - 1e-15),
            first(1.0 - 1e-6),
            last.policy.delta_b,
            last.policy.delta_s,
            last.policy.delta_c,
            last.pcl_mean.unwrap_or(f64::NAN),
            1.0 / last.post_chi
        );
        if v == 2 {
            println!("    first blocks of v = 2:");
            for r in trace.records.iter().take(8) {
                println!(
                    "    k={:<3} dB={:.2} dS={:.2} dC={:.2} rho={:.4} P_O={:.6} J={:.4}",
                    r.k, r.policy.delta_b, r.policy.delta_s, r.policy.delta_c, r.rho, r.po, r.cost
                );
            }
        }
    }
    Ok(())
}
