//! Flat `key = value` configuration shared by the CLI and sweeps.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment. Keys are the CLI flag names without dashes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::exact::AbsorptionRule;
use crate::mc::{McConfig, DEFAULT_MAX_STEPS};
use crate::model::{SystemSpec, Topology};

/// Parses flat key/value text. Later duplicates override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected `key = value`, got `{}`", lineno + 1, raw.trim()))
        })?;
        let key = key.trim().trim_start_matches("--").to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub(crate) fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{key}` expects a number, got `{value}`")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("`{key}` expects a nonnegative integer, got `{value}`")))
}

/// Every physical, cost and simulation knob in one flat record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta: f64,
    pub mu: f64,
    pub h: f64,
    pub sf: f64,
    pub cm: f64,
    pub cr: f64,
    pub k: f64,
    pub m: f64,
    pub n: f64,
    pub seed: u64,
    pub trials: u64,
    pub max_steps: u64,
    pub topology: String,
    pub rule: AbsorptionRule,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            beta: 1.0,
            mu: 1.0,
            h: 0.0,
            sf: 0.0,
            cm: 1.0,
            cr: 1.0,
            k: 1.0,
            m: 1.0,
            n: 1.0,
            seed: 0,
            trials: 100_000,
            max_steps: DEFAULT_MAX_STEPS,
            topology: "isolated".into(),
            rule: AbsorptionRule::MajorityWrong,
        }
    }
}

impl Params {
    pub const KEYS: [&'static str; 14] = [
        "beta", "mu", "h", "sf", "cm", "cr", "k", "m", "n", "seed", "trials", "max_steps",
        "topology", "rule",
    ];

    /// Sets one parameter. Returns `Ok(false)` when `key` is not a parameter.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "beta" => self.beta = parse_f64(key, value)?,
            "mu" => self.mu = parse_f64(key, value)?,
            "h" => self.h = parse_f64(key, value)?,
            "sf" => self.sf = parse_f64(key, value)?,
            "cm" => self.cm = parse_f64(key, value)?,
            "cr" => self.cr = parse_f64(key, value)?,
            "k" => self.k = parse_f64(key, value)?,
            "m" => self.m = parse_f64(key, value)?,
            "n" => self.n = parse_f64(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            "trials" => self.trials = parse_u64(key, value)?,
            "max_steps" => self.max_steps = parse_u64(key, value)?,
            "topology" => {
                Topology::from_name(value, 0.0)?;
                self.topology = value.to_ascii_lowercase();
            }
            "rule" => self.rule = value.parse()?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Builds parameters from a map, rejecting keys outside [`Params::KEYS`]
    /// and `extra_keys`.
    pub fn from_map(map: &BTreeMap<String, String>, extra_keys: &[&str]) -> Result<Self> {
        let mut p = Params::default();
        for (key, value) in map {
            if !p.set(key, value)? && !extra_keys.contains(&key.as_str()) {
                return Err(Error::Validation(format!("unknown configuration key `{key}`")));
            }
        }
        Ok(p)
    }

    pub fn cost_params(&self) -> CostParams {
        CostParams { c_m: self.cm, c_r: self.cr, mu: self.mu, k: self.k, m: self.m, n_exp: self.n }
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        Ok(SystemSpec::new(Topology::from_name(&self.topology, self.sf)?, self.h, self.beta))
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig { trials: self.trials, seed: self.seed, max_steps_per_trial: self.max_steps }
    }

    /// Checks every numeric parameter against the model and cost invariants.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h", self.h), ("sf", self.sf), ("beta", self.beta)] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite")));
            }
        }
        if self.beta < 0.0 {
            return Err(Error::Validation(format!("negative beta ({})", self.beta)));
        }
        self.cost_params().validate()?;
        self.mc_config().validate()?;
        crate::model::validate(&self.system_spec()?)
    }

    /// Every parameter as text, for output metadata.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for (k, v) in [
            ("beta", self.beta),
            ("mu", self.mu),
            ("h", self.h),
            ("sf", self.sf),
            ("cm", self.cm),
            ("cr", self.cr),
            ("k", self.k),
            ("m", self.m),
            ("n", self.n),
        ] {
            m.insert(k.to_string(), crate::emit::format_number(v));
        }
        m.insert("seed".into(), self.seed.to_string());
        m.insert("trials".into(), self.trials.to_string());
        m.insert("max_steps".into(), self.max_steps.to_string());
        m.insert("topology".into(), self.topology.clone());
        m.insert("rule".into(), self.rule.to_string());
        m
    }
}
