//! Runs the analytic-versus-simulation comparison suite and prints one line
//! per comparison.
//!
//! cargo run --release --example monte_carlo_validation -- [episodes] [seed]

use aloha_control::cli::validation_suite;
use aloha_control::config::RunConfig;

fn main() -> aloha_control::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    if let Some(n) = args.next() {
        cfg.episodes = n.parse().expect("episodes");
    }
    if let Some(s) = args.next() {
        cfg.seed = s.parse().expect("seed");
    }
    let report = validation_suite(&cfg)?;
    for r in &report.rows {
        println!(
            "{:<4} {:<34} {:>11.6} {:>11.6} ±{:<9.6} z={:>6.2}",
            if r.pass { "ok" } else { "FAIL" },
            r.name,
            r.analytic,
            r.empirical,
            r.std_error,
            r.z
        );
    }
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
