//! Run configuration: a flat `key = value` document plus `key=value`
//! overrides from the command line.
//!
//! ```text
//! lambda = 1e-4
//! alpha = 3
//! gamma = 0.1
//! tx_power = "40dBm"      # or "10W", or a bare number in watts
//! slots = 5
//! run_length = 3
//! cdf_mode = "indicator"
//! seed = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{io_error, Error, Result};
use crate::optimizer::OptimizerConfig;
use crate::runlength::BlockShape;
use crate::spatial::{dbm_to_watts, NetworkParams};

/// Everything a command needs; reproducible from this value alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub network: NetworkParams,
    /// Block length `T` (slots).
    pub slots: usize,
    /// Controllability index `v` (slots).
    pub run_length: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Monte Carlo episodes per Bernoulli-tier comparison.
    pub episodes: u64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses the rayon default. Never affects output.
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Relative error injected into the analytic slot success probability
    /// of the validation suite. Zero outside negative-control tests.
    pub perturb_rho: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: NetworkParams::default(),
            slots: 5,
            run_length: 3,
            optimizer: OptimizerConfig::default(),
            seed: 1,
            episodes: 200_000,
            output_dir: PathBuf::from("out"),
            threads: None,
            perturb_rho: 0.0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "alpha",
    "gamma",
    "tx_power",
    "noise_power",
    "r0",
    "slots",
    "run_length",
    "grid_step",
    "rho1",
    "rho2",
    "eta_curr",
    "eta_pcl",
    "horizon",
    "cdf_mode",
    "virtual_block",
    "history_scalar",
    "backend",
    "seed",
    "episodes",
    "output_dir",
    "threads",
    "perturb_rho",
];

fn number(key: &str, value: &Value) -> Result<f64> {
    match value {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key}: expected a number, got {value}"))),
    }
}

fn count(key: &str, value: &Value) -> Result<u64> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::Config(format!(
            "{key}: expected a non-negative integer, got {value}"
        ))),
    }
}

fn text<'v>(key: &str, value: &'v Value) -> Result<&'v str> {
    value
        .as_str()
        .ok_or_else(|| Error::Config(format!("{key}: expected a string, got {value}")))
}

fn keyword<T: for<'de> Deserialize<'de>>(key: &str, value: &Value) -> Result<T> {
    let word = text(key, value)?;
    Value::String(word.to_owned())
        .try_into()
        .map_err(|_| Error::Config(format!("{key}: unknown value {word:?}")))
}

/// Parses a power given in watts (bare number or `W` suffix) or in dBm.
pub fn parse_power(key: &str, value: &Value) -> Result<f64> {
    let raw = match value {
        Value::String(s) => s.trim(),
        other => return number(key, other),
    };
    let lower = raw.to_ascii_lowercase();
    let (digits, dbm) = if let Some(d) = lower.strip_suffix("dbm") {
        (d, true)
    } else if let Some(d) = lower.strip_suffix('w') {
        (d, false)
    } else {
        (lower.as_str(), false)
    };
    let x: f64 = digits
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot read power {raw:?}")))?;
    Ok(if dbm { dbm_to_watts(x) } else { x })
}

impl RunConfig {
    /// Reads a config file; missing keys keep their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut cfg = Self::default();
        for (key, value) in &table {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override. Values that do not parse as TOML
    /// are taken as bare strings, so `cdf_mode=grid-rank` works unquoted.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_owned()));
        self.set(key, &value)
    }

    pub fn set(&mut self, key: &str, value: &Value) -> Result<()> {
        let opt = &mut self.optimizer;
        match key {
            "lambda" => self.network.lambda = number(key, value)?,
            "alpha" => self.network.alpha = number(key, value)?,
            "gamma" => self.network.gamma = number(key, value)?,
            "tx_power" => self.network.tx_power = parse_power(key, value)?,
            "noise_power" => self.network.noise_power = parse_power(key, value)?,
            "r0" => self.network.link_distance = number(key, value)?,
            "slots" => self.slots = count(key, value)? as usize,
            "run_length" => self.run_length = count(key, value)? as usize,
            "grid_step" => opt.grid_step = number(key, value)?,
            "rho1" => opt.rho1 = number(key, value)?,
            "rho2" => opt.rho2 = number(key, value)?,
            "eta_curr" => opt.eta_curr = number(key, value)?,
            "eta_pcl" => opt.eta_pcl = number(key, value)?,
            "horizon" => opt.horizon = count(key, value)? as usize,
            "cdf_mode" => opt.cdf_mode = keyword(key, value)?,
            "virtual_block" => opt.virtual_block = keyword(key, value)?,
            "history_scalar" => opt.history_scalar = keyword(key, value)?,
            "backend" => opt.backend = keyword(key, value)?,
            "seed" => self.seed = count(key, value)?,
            "episodes" => self.episodes = count(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(text(key, value)?),
            "threads" => self.threads = Some(count(key, value)? as usize),
            "perturb_rho" => self.perturb_rho = number(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn shape(&self) -> Result<BlockShape> {
        BlockShape::new(self.slots, self.run_length)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.shape()?;
        self.optimizer.validate()?;
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !self.perturb_rho.is_finite() {
            return Err(Error::Config("perturb_rho must be finite".into()));
        }
        Ok(())
    }

    /// The config as a flat document that [`from_toml_str`](Self::from_toml_str)
    /// reads back to the same value. `threads` is left out.
    pub fn to_toml_string(&self) -> String {
        let opt = &self.optimizer;
        let mut t = Table::new();
        t.insert("lambda".into(), Value::Float(self.network.lambda));
        t.insert("alpha".into(), Value::Float(self.network.alpha));
        t.insert("gamma".into(), Value::Float(self.network.gamma));
        t.insert("tx_power".into(), Value::Float(self.network.tx_power));
        t.insert("noise_power".into(), Value::Float(self.network.noise_power));
        t.insert("r0".into(), Value::Float(self.network.link_distance));
        t.insert("slots".into(), Value::Integer(self.slots as i64));
        t.insert("run_length".into(), Value::Integer(self.run_length as i64));
        t.insert("grid_step".into(), Value::Float(opt.grid_step));
        t.insert("rho1".into(), Value::Float(opt.rho1));
        t.insert("rho2".into(), Value::Float(opt.rho2));
        t.insert("eta_curr".into(), Value::Float(opt.eta_curr));
        t.insert("eta_pcl".into(), Value::Float(opt.eta_pcl));
        t.insert("horizon".into(), Value::Integer(opt.horizon as i64));
        t.insert("cdf_mode".into(), word(&opt.cdf_mode));
        t.insert("virtual_block".into(), word(&opt.virtual_block));
        t.insert("history_scalar".into(), word(&opt.history_scalar));
        t.insert("backend".into(), word(&opt.backend));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert("episodes".into(), Value::Integer(self.episodes as i64));
        t.insert(
            "output_dir".into(),
            Value::String(self.output_dir.display().to_string()),
        );
        t.insert("perturb_rho".into(), Value::Float(self.perturb_rho));
        toml::to_string(&t).expect("flat table serializes")
    }
}

/// Kebab-case name of a unit enum variant.
fn word<T: Serialize>(v: &T) -> Value {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => Value::String(s),
        other => unreachable!("not a unit variant: {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::CdfMode;

    #[test]
    fn power_units() {
        let w = parse_power("p", &Value::String("40dBm".into())).unwrap();
        assert!((w - 10.0).abs() < 1e-12);
        assert_eq!(parse_power("p", &Value::String("10W".into())).unwrap(), 10.0);
        assert_eq!(parse_power("p", &Value::Float(2.5)).unwrap(), 2.5);
        assert!(parse_power("p", &Value::String("loud".into())).is_err());
    }

    #[test]
    fn file_and_overrides() {
        let mut cfg = RunConfig::from_toml_str(
            "lambda = 2e-4\ntx_power = \"30dBm\"\nslots = 6\ncdf_mode = \"grid-rank\"\n",
        )
        .unwrap();
        assert_eq!(cfg.network.lambda, 2e-4);
        assert!((cfg.network.tx_power - 1.0).abs() < 1e-12);
        assert_eq!(cfg.slots, 6);
        assert_eq!(cfg.optimizer.cdf_mode, CdfMode::GridRank);
        cfg.apply_override("cdf_mode=indicator").unwrap();
        cfg.apply_override("rho1 = 0.25").unwrap();
        cfg.apply_override("threads=3").unwrap();
        assert_eq!(cfg.optimizer.cdf_mode, CdfMode::Indicator);
        assert_eq!(cfg.optimizer.rho1, 0.25);
        assert_eq!(cfg.threads, Some(3));
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(RunConfig::from_toml_str("lamda = 1").is_err());
        assert!(RunConfig::from_toml_str("cdf_mode = \"best\"").is_err());
        assert!(RunConfig::from_toml_str("slots = -1").is_err());
        assert!(RunConfig::default().apply_override("novalue").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("virtual_block=boundary-success").unwrap();
        cfg.apply_override("noise_power=1e-17").unwrap();
        cfg.threads = Some(2);
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back.threads, None);
        cfg.threads = None;
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let mut cfg = RunConfig {
            run_length: 9,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg = RunConfig::default();
        cfg.episodes = 0;
        assert!(cfg.validate().is_err());
    }
}
