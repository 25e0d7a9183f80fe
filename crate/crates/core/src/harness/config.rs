use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, EvalMode, Hyperparams};
use crate::error::{Error, Result};

/// Everything one training or evaluation run needs.
///
/// Built from defaults, then a TOML file, then `key=value` overrides, each
/// layer taking precedence over the previous one. Unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub agent: AgentKind,
    /// `"acrobot"` or `"tabular:<path to MDP file>"`.
    pub env: String,
    pub episodes: usize,
    pub seed: u64,
    /// Output directory for the curve, checkpoint and metadata.
    pub output_path: PathBuf,
    pub eval_mode: EvalMode,
    pub eval_episodes: usize,
    /// Step limit for tabular environments.
    pub horizon: usize,
    pub hyperparams: Hyperparams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            agent: AgentKind::Psadpg,
            env: "acrobot".into(),
            episodes: 1500,
            seed: 0,
            output_path: PathBuf::from("runs/default"),
            eval_mode: EvalMode::Sample,
            eval_episodes: 100,
            horizon: 100,
            hyperparams: Hyperparams::default(),
        }
    }
}

/// Environment named by [`RunConfig::env`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvChoice {
    Acrobot,
    Tabular(PathBuf),
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.horizon == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("horizon and eval_episodes must be positive".into()));
        }
        self.env_choice()?;
        self.hyperparams.validate()
    }

    pub fn env_choice(&self) -> Result<EnvChoice> {
        match self.env.as_str() {
            "acrobot" => Ok(EnvChoice::Acrobot),
            other => match other.strip_prefix("tabular:") {
                Some(path) if !path.is_empty() => Ok(EnvChoice::Tabular(PathBuf::from(path))),
                _ => Err(Error::Config(format!(
                    "unknown env `{other}` (expected `acrobot` or `tabular:<file>`)"
                ))),
            },
        }
    }

    /// TOML text that parses back to this config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Layers `overrides` (`key=value`, dotted keys into tables) over `file`
/// (TOML text) over the defaults.
pub fn parse_config(file: Option<&str>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match file {
        Some(text) => {
            // full parse first, for errors with line numbers
            toml::from_str::<RunConfig>(text).map_err(|e| Error::Config(e.to_string()))?;
            toml::from_str::<toml::Table>(text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = path
        .map(|p| fs::read_to_string(p).map_err(|e| Error::io(p, e)))
        .transpose()?;
    parse_config(text.as_deref(), overrides).map_err(|e| match (e, path) {
        (Error::Config(msg), Some(p)) => Error::Config(format!("{}: {msg}", p.display())),
        (e, _) => e,
    })
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let bad = |msg: &str| Error::Config(format!("override `{item}`: {msg}"));
    let (key, raw) = item.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    // TOML literal if it parses as one, otherwise a bare string
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    // check this override on its own so errors name the flag
    let mut probe = toml::Table::new();
    let mut slot = &mut probe;
    for part in &parts[..parts.len() - 1] {
        slot = slot
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("fresh table");
    }
    slot.insert(parts[parts.len() - 1].to_string(), cur[parts[parts.len() - 1]].clone());
    toml::Value::Table(probe)
        .try_into::<RunConfig>()
        .map_err(|e| bad(e.message()))?;
    Ok(())
}
