//! Run configuration: JSON file contents merged with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::portfolio::{
    default_level_params, LevelParams, ScaleConfig, DEFAULT_LEVELS, DEFAULT_RESOLUTION,
};

pub const DEFAULT_PRECISION: usize = 9;

/// What `generate` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Mode {
    /// Entropy-scaled hierarchical portfolio.
    #[default]
    Funnel,
    /// Hierarchical portfolio with every gamma forced to zero.
    Static,
    /// `n` highest-scoring non-overlapping windows of side `S`.
    TopK(usize),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Funnel => f.write_str("funnel"),
            Mode::Static => f.write_str("static"),
            Mode::TopK(n) => write!(f, "topk:{n}"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "funnel" => Ok(Mode::Funnel),
            "static" => Ok(Mode::Static),
            other => {
                let n = other
                    .strip_prefix("topk:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "unknown mode `{other}`; expected funnel, static or topk:N with N >= 1"
                        ))
                    })?;
                Ok(Mode::TopK(n))
            }
        }
    }
}

impl TryFrom<String> for Mode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Mode> for String {
    fn from(m: Mode) -> String {
        m.to_string()
    }
}

/// Parse a `K=V` level override.
pub fn parse_level_value(s: &str) -> Result<(usize, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("expected LEVEL=VALUE, got `{s}`")))?;
    let k: usize = k
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad level in `{s}`")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value in `{s}`")))?;
    Ok((k, v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub resolution: u32,
    pub levels: usize,
    /// Full `(beta, gamma)` list for levels `1..levels`; missing entries fall
    /// back to the defaults.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<LevelParams>>,
    /// Per-level beta overrides, keyed by level.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub beta: BTreeMap<usize, f64>,
    /// Per-level gamma overrides, keyed by level.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub gamma: BTreeMap<usize, f64>,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub overlay: bool,
    /// Digits after the decimal point for real numbers in manifests and tables.
    pub precision: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            levels: DEFAULT_LEVELS,
            params: None,
            beta: BTreeMap::new(),
            gamma: BTreeMap::new(),
            mode: Mode::Funnel,
            output_dir: None,
            overlay: false,
            precision: DEFAULT_PRECISION,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Resolve the expansion parameters for each level and validate them.
    /// Static mode zeroes every gamma.
    pub fn scale_config(&self) -> Result<ScaleConfig> {
        for &k in self.beta.keys().chain(self.gamma.keys()) {
            if k == 0 || k >= self.levels {
                return Err(Error::invalid(format!(
                    "override for level {k} but context levels are 1..{}",
                    self.levels.saturating_sub(1).max(1)
                )));
            }
        }
        if self.precision > 17 {
            return Err(Error::invalid("precision must be at most 17 digits"));
        }
        let params = (1..self.levels)
            .map(|k| {
                let base = self
                    .params
                    .as_ref()
                    .and_then(|p| p.get(k - 1).copied())
                    .or_else(|| default_level_params(k));
                let beta = self.beta.get(&k).copied().or(base.map(|p| p.beta));
                let gamma = self.gamma.get(&k).copied().or(base.map(|p| p.gamma));
                match (beta, gamma) {
                    (Some(beta), Some(gamma)) => Ok(LevelParams::new(beta, gamma)),
                    _ => Err(Error::invalid(format!(
                        "level {k} has no default; pass --beta {k}=V and --gamma {k}=V"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = ScaleConfig::new(self.resolution, self.levels, params)?;
        Ok(match self.mode {
            Mode::Static => cfg.to_static(),
            _ => cfg,
        })
    }
}
