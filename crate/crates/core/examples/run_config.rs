//! Builds a run configuration from a flat key/value document plus
//! overrides, then writes the optimizer trace and its metadata sidecar.
//!
//! cargo run --release --example run_config -- [output_dir]

use aloha_control::cli::{cmd_optimize, trace_csv};
use aloha_control::config::RunConfig;

const DOC: &str = r#"
lambda = 1e-4
alpha = 3
gamma = 0.1
tx_power = "40dBm"
noise_power = 1e-17
slots = 5
run_length = 2
horizon = 12
grid_step = 0.1
"#;

fn main() -> aloha_control::Result<()> {
    let mut cfg = RunConfig::from_toml_str(DOC)?;
    cfg.apply_override("cdf_mode=indicator")?;
    cfg.output_dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("aloha-run"), Into::into);
    cfg.validate()?;
    println!("{}", cfg.to_toml_string());

    let outcome = cmd_optimize(&cfg)?;
    for line in outcome.summary {
        println!("{line}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    let trace = aloha_control::run_horizon(&cfg.network, &cfg.shape()?, &cfg.optimizer)?;
    let csv = trace_csv(&trace);
    println!("\n{}", csv.lines().filter(|l| !l.starts_with('#')).take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
