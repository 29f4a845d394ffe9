//! Command implementations behind the `aloha-ctl` binary.
//!
//! | command | output files |
//! |---|---|
//! | `optimize` | `trace.csv`, `trace.json` |
//! | `validate` | `validation.csv`, `validation.json` |
//! | `demo-plant` | `plant.csv`, `plant.json` |
//! | `chi-table` | `chi.csv` |
//! | `success-prob` | `success_prob.csv` |
//!
//! Exit status: 0 on success, 1 when a validation comparison fails, 2 on
//! configuration or I/O errors.

pub mod emit;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::montecarlo::episode_rng;
use crate::optimizer::{run_horizon, PolicyTrace};
use crate::plant::{BlockTrace, PlantModel};
use crate::spatial::{slot_success_prob_with, IntegralBackend, LinkModel};
use emit::{col, csv, json, num, opt, write, Column, Metadata};
pub use validate::{validation_suite, Comparison, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "aloha-ctl", version, about = "Block/slot Aloha access for wireless control")]
pub struct Cli {
    /// Flat key/value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set run_length=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Per-block policy optimization over the horizon.
    Optimize,
    /// Analytic formulas against Monte Carlo.
    Validate,
    /// One block of the control protocol on the demo plant.
    DemoPlant {
        /// Slot outcomes such as `01110`; drawn from the seed if absent.
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Run-probability table over the success probability.
    ChiTable {
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Slot success probability against the access fraction.
    SuccessProb {
        #[arg(long, default_value_t = 51)]
        points: usize,
    },
}

impl Cli {
    /// Config file, then `--set` overrides, then the dedicated flags.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir.clone_from(dir);
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub passed: bool,
}

/// Runs `command` inside a pool sized by `cfg.threads`.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Optimize => cmd_optimize(cfg),
        Command::Validate => cmd_validate(cfg),
        Command::DemoPlant { pattern } => cmd_demo_plant(cfg, pattern.as_deref()),
        Command::ChiTable { points } => chi_table(cfg, *points),
        Command::SuccessProb { points } => success_prob(cfg, *points),
    })
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = cli
        .resolve_config()
        .and_then(|cfg| run(&cli.command, &cfg));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

pub static TRACE_COLUMNS: [Column; 19] = [
    col("k", "blocks", "block index"),
    col("delta_b", "probability", "chosen block-access probability"),
    col("delta_s", "probability", "chosen pre-controllability slot-access probability"),
    col("delta_c", "probability", "chosen post-controllability slot-access probability"),
    col("lambda_eff", "m^-2", "effective interferer density"),
    col("rho", "probability", "conditional slot success probability"),
    col("pi", "probability", "first-time controllability probability"),
    col("p_o", "probability", "cumulative controllability probability"),
    col("p_o_inst", "probability", "probability that this block is controllable"),
    col("chi_c", "probability", "run probability at the post-controllability access rate"),
    col("p_z", "probability", "probability that the block holds a success"),
    col("theta_curr", "slots", "current-block latency term"),
    col("pcl_mean", "blocks", "expected peak control latency"),
    col("peak_latency", "slots", "expected peak latency"),
    col("peak_aoi", "slots", "expected peak age of information"),
    col("history_p", "probability", "slot success probability stored in the history"),
    col("cdf_curr", "probability", "current-block latency CDF term of the cost"),
    col("cdf_pcl", "probability", "peak control latency CDF term of the cost"),
    col("cost", "1", "objective J of the chosen policy"),
];

pub fn trace_csv(trace: &PolicyTrace) -> String {
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                num(r.policy.delta_b),
                num(r.policy.delta_s),
                num(r.policy.delta_c),
                num(r.lambda_eff),
                num(r.rho),
                num(r.pi),
                num(r.po),
                num(r.po_inst),
                num(r.post_chi),
                num(r.block_success_prob),
                opt(r.theta_curr),
                opt(r.pcl_mean),
                opt(r.theta_pl),
                opt(r.theta_pa),
                num(r.history_success),
                num(r.cdf_curr),
                num(r.cdf_pcl),
                num(r.cost),
            ]
        })
        .collect();
    csv("per-block optimized access policy", &TRACE_COLUMNS, &rows)
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<Outcome> {
    let shape = cfg.shape()?;
    let trace = run_horizon(&cfg.network, &shape, &cfg.optimizer)?;
    let meta = Metadata::new("optimize", cfg, &TRACE_COLUMNS, trace.len(), ());
    let files = vec![
        write(&cfg.output_dir, "trace.csv", &trace_csv(&trace))?,
        write(&cfg.output_dir, "trace.json", &json(&meta)?)?,
    ];
    let last = trace.records.last().expect("horizon is at least one block");
    let summary = vec![
        format!("blocks: {}", trace.len()),
        format!("final P_O: {:.6}", last.po),
        format!(
            "first block with P_O >= 0.99: {}",
            trace
                .records
                .iter()
                .find(|r| r.po >= 0.99)
                .map_or("none".to_owned(), |r| r.k.to_string())
        ),
    ];
    Ok(Outcome {
        files,
        summary,
        passed: true,
    })
}

pub static VALIDATION_COLUMNS: [Column; 7] = [
    col("name", "-", "comparison"),
    col("analytic", "varies", "formula value"),
    col("empirical", "varies", "Monte Carlo mean"),
    col("std_error", "varies", "standard error of the Monte Carlo mean"),
    col("samples", "episodes", "episodes entering the mean"),
    col("z", "1", "(empirical - analytic) / std_error"),
    col("pass", "-", "|z| < 3"),
];

pub fn validation_csv(report: &ValidationReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                num(r.analytic),
                num(r.empirical),
                num(r.std_error),
                r.samples.to_string(),
                num(r.z),
                r.pass.to_string(),
            ]
        })
        .collect();
    csv("analytic versus Monte Carlo", &VALIDATION_COLUMNS, &rows)
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outcome> {
    let report = validation_suite(cfg)?;
    let meta = Metadata::new(
        "validate",
        cfg,
        &VALIDATION_COLUMNS,
        report.rows.len(),
        &report,
    );
    let files = vec![
        write(&cfg.output_dir, "validation.csv", &validation_csv(&report))?,
        write(&cfg.output_dir, "validation.json", &json(&meta)?)?,
    ];
    let summary = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{} {:<36} analytic {:>12.6} empirical {:>12.6} z {:>7.2}",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.analytic,
                r.empirical,
                r.z
            )
        })
        .collect();
    Ok(Outcome {
        files,
        summary,
        passed: report.passed(),
    })
}

/// Parses a `0`/`1` slot pattern.
pub fn parse_pattern(pattern: &str) -> Result<Vec<bool>> {
    pattern
        .chars()
        .filter(|c| !matches!(c, ',' | ' ' | '_'))
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Config(format!("pattern character {other:?} is not 0 or 1"))),
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct PlantPayload<'a> {
    pattern: &'a [bool],
    target: Vec<f64>,
    steady_input: Vec<f64>,
    trace: &'a BlockTrace,
}

pub static PLANT_COLUMNS: [Column; 8] = [
    col("slot", "slots", "1-based slot index within the block"),
    col("phase", "-", "transmitting, retransmitting or dummy"),
    col("delivered", "-", "1 if the slot succeeded"),
    col("u", "input", "input sent or held"),
    col("xhat_1", "state", "estimate, first component, end of slot"),
    col("xhat_2", "state", "estimate, second component, end of slot"),
    col("x_1", "state", "true state, first component, end of slot"),
    col("x_2", "state", "true state, second component, end of slot"),
];

/// Replays one block of the double-integrator demo plant. Without a
/// pattern the slot outcomes are Bernoulli with the full-access slot
/// success probability of `cfg`, drawn from `cfg.seed`.
pub fn demo_plant_trace(cfg: &RunConfig, pattern: Option<&str>) -> Result<(Vec<bool>, BlockTrace)> {
    let shape = cfg.shape()?;
    let g = match pattern {
        Some(p) => parse_pattern(p)?,
        None => {
            let rho = LinkModel::new(&cfg.network, cfg.optimizer.backend)?.success(cfg.network.lambda);
            let mut rng = episode_rng(cfg.seed, 0);
            (0..shape.slots()).map(|_| rng.random::<f64>() < rho).collect()
        }
    };
    let plant = PlantModel::double_integrator(shape.run())?;
    let trace = plant.run_block(&shape, &DVector::zeros(2), &g)?;
    Ok((g, trace))
}

pub fn cmd_demo_plant(cfg: &RunConfig, pattern: Option<&str>) -> Result<Outcome> {
    let shape = cfg.shape()?;
    let (g, trace) = demo_plant_trace(cfg, pattern)?;
    let plant = PlantModel::double_integrator(shape.run())?;
    let rows: Vec<Vec<String>> = trace
        .slots
        .iter()
        .map(|s| {
            let phase = match s.phase {
                crate::plant::Phase::Transmitting => "transmitting",
                crate::plant::Phase::Retransmitting => "retransmitting",
                crate::plant::Phase::Dummy => "dummy",
            };
            vec![
                s.slot.to_string(),
                phase.to_owned(),
                u8::from(s.delivered).to_string(),
                num(s.input[0]),
                num(s.estimate[0]),
                num(s.estimate[1]),
                num(s.state[0]),
                num(s.state[1]),
            ]
        })
        .collect();
    let payload = PlantPayload {
        pattern: &g,
        target: plant.target().iter().copied().collect(),
        steady_input: plant.steady_input().iter().copied().collect(),
        trace: &trace,
    };
    let meta = Metadata::new("demo-plant", cfg, &PLANT_COLUMNS, rows.len(), payload);
    let files = vec![
        write(
            &cfg.output_dir,
            "plant.csv",
            &csv("one block of the input protocol on a double integrator", &PLANT_COLUMNS, &rows),
        )?,
        write(&cfg.output_dir, "plant.json", &json(&meta)?)?,
    ];
    let pattern: String = g.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let summary = vec![
        format!("pattern: {pattern}"),
        format!(
            "target reached at slot: {}",
            trace.target_slot.map_or("never".to_owned(), |s| s.to_string())
        ),
    ];
    Ok(Outcome {
        files,
        summary,
        passed: true,
    })
}

fn grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Config("need at least 2 grid points".into()));
    }
    Ok((0..points).map(|i| i as f64 / (points - 1) as f64).collect())
}

/// Run probabilities for every run length `1..=T` at `points` values of the
/// slot success probability.
pub fn chi_csv(cfg: &RunConfig, points: usize) -> Result<String> {
    let t = cfg.slots;
    let shapes = (1..=t)
        .map(|v| crate::runlength::BlockShape::new(t, v))
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec![col("x", "probability", "slot success probability")];
    columns.extend((1..=t).map(|v| Column {
        name: format!("v{v}").into(),
        unit: "probability",
        description: "run of at least v successes in T slots",
    }));
    let rows = grid(points)?
        .into_iter()
        .map(|x| {
            let mut row = vec![num(x)];
            for s in &shapes {
                row.push(num(s.chi(x)?));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv(&format!("run probability, T = {t}"), &columns, &rows))
}

pub fn chi_table(cfg: &RunConfig, points: usize) -> Result<Outcome> {
    let text = chi_csv(cfg, points)?;
    Ok(Outcome {
        files: vec![write(&cfg.output_dir, "chi.csv", &text)?],
        summary: vec![format!("T = {}, {points} grid points", cfg.slots)],
        passed: true,
    })
}

pub static SUCCESS_COLUMNS: [Column; 4] = [
    col("access", "probability", "fraction of controllers transmitting"),
    col("lambda_eff", "m^-2", "effective interferer density"),
    col("rho_closed", "probability", "slot success probability, closed-form integral"),
    col("rho_quadrature", "probability", "slot success probability, numerical integral"),
];

pub fn success_csv(cfg: &RunConfig, points: usize) -> Result<String> {
    let rows = grid(points)?
        .into_iter()
        .map(|d| {
            let lambda_eff = d * cfg.network.lambda;
            Ok(vec![
                num(d),
                num(lambda_eff),
                num(slot_success_prob_with(&cfg.network, lambda_eff, IntegralBackend::ClosedForm)?),
                num(slot_success_prob_with(&cfg.network, lambda_eff, IntegralBackend::Quadrature)?),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv("slot success probability", &SUCCESS_COLUMNS, &rows))
}

pub fn success_prob(cfg: &RunConfig, points: usize) -> Result<Outcome> {
    let text = success_csv(cfg, points)?;
    Ok(Outcome {
        files: vec![write(&cfg.output_dir, "success_prob.csv", &text)?],
        summary: vec![format!("{points} access fractions")],
        passed: true,
    })
}
