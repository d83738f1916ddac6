//! Run configuration: `key = value` lines, `#` comments.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::distill::cascade::DEFAULT_PASSES;
use crate::distill::pipeline::PipelineOptions;
use crate::distill::privacy::DEFAULT_EPSILON;
use crate::distill::EveBound;
use crate::security::{Attack, SecurityContext};
use crate::source::{ChannelModel, SourceMode, SourceModel, TimingConfig};
use crate::{Error, Result};

pub const KEYS: [&str; 16] = [
    "seed",
    "n_symbols",
    "V",
    "r",
    "mode",
    "eta",
    "delta",
    "attack",
    "symbol_rate_hz",
    "dt_switch_s",
    "dT_sample_s",
    "epsilon_pa",
    "cascade_passes",
    "eve_bound",
    "postselect",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n_symbols: usize,
    pub v: f64,
    /// Squeezing parameter; derived from `V` unless given.
    pub r: Option<f64>,
    pub mode: SourceMode,
    pub eta: f64,
    pub delta: f64,
    pub attack: Attack,
    pub symbol_rate_hz: f64,
    pub dt_switch_s: f64,
    pub dt_sample_s: f64,
    pub epsilon_pa: f64,
    pub cascade_passes: usize,
    pub eve_bound: EveBound,
    pub postselect: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_symbols: 100_000,
            v: 8.35,
            r: None,
            mode: SourceMode::Effective,
            eta: 0.8,
            delta: 0.14,
            attack: Attack::Collective,
            symbol_rate_hz: 2e6,
            dt_switch_s: 5e-3,
            dt_sample_s: 5e-7,
            epsilon_pa: DEFAULT_EPSILON,
            cascade_passes: DEFAULT_PASSES,
            eve_bound: EveBound::Mean,
            postselect: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_epsilon(s: &str) -> std::result::Result<f64, String> {
    if let Some(exp) = s.strip_prefix("2^") {
        let e: i32 = exp.trim().parse().map_err(|_| format!("bad exponent in {s:?}"))?;
        return Ok(2f64.powi(e));
    }
    s.parse().map_err(|_| format!("expected a number or 2^-N, got {s:?}"))
}

fn parse_mode(s: &str) -> std::result::Result<SourceMode, String> {
    match s {
        "effective" => Ok(SourceMode::Effective),
        "minimum-uncertainty" | "minimum_uncertainty" => Ok(SourceMode::MinimumUncertainty),
        other => Err(format!("expected effective or minimum-uncertainty, got {other:?}")),
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn parse_num<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("malformed value {s:?}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut lines: HashMap<&'static str, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |key: &str, reason: String| Error::Config {
                line,
                key: key.to_string(),
                reason,
            };
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(body, "expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let key = *KEYS
                .iter()
                .find(|&&known| known == k)
                .ok_or_else(|| err(k, "unknown key".into()))?;
            if lines.insert(key, line).is_some() {
                return Err(err(k, "given more than once".into()));
            }
            let r: std::result::Result<(), String> = (|| {
                match key {
                    "seed" => cfg.seed = parse_num(v)?,
                    "n_symbols" => cfg.n_symbols = parse_num::<f64>(v).and_then(|x| {
                        if x.fract() == 0.0 && x >= 0.0 && x < 1e15 {
                            Ok(x as usize)
                        } else {
                            Err(format!("expected a whole number, got {v:?}"))
                        }
                    })?,
                    "V" => cfg.v = parse_num(v)?,
                    "r" => cfg.r = Some(parse_num(v)?),
                    "mode" => cfg.mode = parse_mode(v)?,
                    "eta" => cfg.eta = parse_num(v)?,
                    "delta" => cfg.delta = parse_num(v)?,
                    "attack" => cfg.attack = v.parse()?,
                    "symbol_rate_hz" => cfg.symbol_rate_hz = parse_num(v)?,
                    "dt_switch_s" => cfg.dt_switch_s = parse_num(v)?,
                    "dT_sample_s" => cfg.dt_sample_s = parse_num(v)?,
                    "epsilon_pa" => cfg.epsilon_pa = parse_epsilon(v)?,
                    "cascade_passes" => cfg.cascade_passes = parse_num(v)?,
                    "eve_bound" => cfg.eve_bound = v.parse()?,
                    "postselect" => cfg.postselect = parse_bool(v)?,
                    "out_dir" => cfg.out_dir = PathBuf::from(v),
                    _ => unreachable!("key list is exhaustive"),
                }
                Ok(())
            })();
            r.map_err(|reason| err(key, reason))?;
        }
        cfg.validate(&lines)?;
        if 2.0 * cfg.eta <= cfg.delta {
            log::warn!(
                "2·eta = {} does not exceed delta = {}; secure distillation is ruled out at this noise level even where per-point rates are positive",
                2.0 * cfg.eta,
                cfg.delta
            );
        }
        Ok(cfg)
    }

    fn validate(&self, lines: &HashMap<&'static str, usize>) -> Result<()> {
        let check = |key: &'static str, ok: bool, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config {
                    line: lines.get(key).copied().unwrap_or(0),
                    key: key.to_string(),
                    reason: reason.to_string(),
                })
            }
        };
        check("n_symbols", self.n_symbols >= 1, "must be at least 1")?;
        check("V", self.v.is_finite() && self.v >= 1.0, "must satisfy V >= 1")?;
        check(
            "r",
            self.r.map_or(true, |r| r.is_finite() && r >= 0.0),
            "must satisfy r >= 0",
        )?;
        check(
            "V",
            !(self.mode == SourceMode::MinimumUncertainty && lines.contains_key("V")),
            "minimum-uncertainty mode takes r, not V",
        )?;
        check(
            "mode",
            !(self.mode == SourceMode::MinimumUncertainty && self.r.is_none()),
            "minimum-uncertainty mode needs r",
        )?;
        check("eta", self.eta > 0.0 && self.eta <= 1.0, "must satisfy 0 < eta <= 1")?;
        check("delta", self.delta.is_finite() && self.delta >= 0.0, "must satisfy delta >= 0")?;
        check(
            "symbol_rate_hz",
            self.symbol_rate_hz.is_finite() && self.symbol_rate_hz > 0.0,
            "must be positive",
        )?;
        check(
            "dT_sample_s",
            self.dt_sample_s.is_finite() && self.dt_sample_s > 0.0,
            "must be positive",
        )?;
        check(
            "dt_switch_s",
            self.dt_switch_s.is_finite() && self.dt_switch_s >= self.dt_sample_s,
            "must be at least dT_sample_s",
        )?;
        check(
            "epsilon_pa",
            self.epsilon_pa > 0.0 && self.epsilon_pa < 1.0,
            "must satisfy 0 < epsilon < 1",
        )?;
        check(
            "cascade_passes",
            (1..=255).contains(&self.cascade_passes),
            "must be between 1 and 255",
        )?;
        Ok(())
    }

    pub fn source_model(&self) -> Result<SourceModel> {
        match (self.mode, self.r) {
            (SourceMode::MinimumUncertainty, Some(r)) => SourceModel::minimum_uncertainty(r),
            (SourceMode::Effective, Some(r)) => SourceModel::effective_with_r(self.v, r),
            (_, None) => SourceModel::effective(self.v),
        }
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.eta, self.delta)
    }

    pub fn timing(&self) -> Result<TimingConfig> {
        TimingConfig::new(self.dt_switch_s, self.dt_sample_s, self.symbol_rate_hz)
    }

    pub fn security_context(&self) -> Result<SecurityContext> {
        SecurityContext::new(&self.channel()?, self.source_model()?.variance(), self.attack)
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            attack: self.attack,
            postselect: self.postselect,
            cascade_passes: self.cascade_passes,
            epsilon: self.epsilon_pa,
            eve_bound: self.eve_bound,
            seed: self.seed,
            symbol_rate_hz: self.symbol_rate_hz,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::parse(&text)
}
