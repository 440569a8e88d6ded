//! Run configuration: a line-oriented `key = value` file.
//!
//! ```text
//! # (4,5) tiling
//! source = tiling p=4 q=5
//! radius = 14
//! levels = 5
//! lambda = 1
//! lambda_e = 1        # or `auto`
//! beta = 1.25
//! seed = 7
//! output = out/tiling-4-5
//! ```
//!
//! `source` is one of `tiling p=P q=Q`, `presentation <file>` or
//! `graph <file>`; file paths are relative to the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceSpec {
    Tiling { p: u32, q: u32 },
    /// Path to a presentation file (see `Presentation::parse`).
    Presentation(PathBuf),
    /// Path to a graph file (see `GraphFile::parse`).
    Graph(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: SourceSpec,
    pub radius: u32,
    pub levels: u32,
    pub lambda: u32,
    /// `None` selects the automatic threshold.
    pub lambda_e: Option<u32>,
    pub beta: f64,
    /// Cone-type truncation N.
    pub truncation: u32,
    pub delta_samples: usize,
    /// Largest depth of sampled triangle corners; `None` uses R/2.
    pub delta_depth: Option<u32>,
    /// Optional δ̃, reported only.
    pub delta_tilde: Option<f64>,
    pub seed: u64,
    pub output: PathBuf,
    /// Stage cache; defaults to `<output>/cache`.
    pub cache: Option<PathBuf>,
    pub max_vertices: usize,
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut source = None;
        let mut cfg = RunConfig {
            source: SourceSpec::Tiling { p: 0, q: 0 },
            radius: 0,
            levels: 0,
            lambda: 1,
            lambda_e: Some(1),
            beta: 1.25,
            truncation: 3,
            delta_samples: 300,
            delta_depth: Some(5),
            delta_tilde: None,
            seed: 1,
            output: base.join("out"),
            cache: None,
            max_vertices: crate::ball::DEFAULT_MAX_VERTICES,
        };
        let (mut radius, mut levels) = (None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Syntax { line: i + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("`{key}` expects a non-negative integer, got `{v}`")));
            match key {
                "source" => source = Some(parse_source(value, base).map_err(err)?),
                "radius" => radius = Some(num(value)? as u32),
                "levels" => levels = Some(num(value)? as u32),
                "lambda" => cfg.lambda = num(value)? as u32,
                "lambda_e" => cfg.lambda_e = if value == "auto" { None } else { Some(num(value)? as u32) },
                "beta" => cfg.beta = value.parse().map_err(|_| err(format!("`beta` expects a number, got `{value}`")))?,
                "truncation" => cfg.truncation = num(value)? as u32,
                "delta_samples" => cfg.delta_samples = num(value)? as usize,
                "delta_depth" => cfg.delta_depth = if value == "auto" { None } else { Some(num(value)? as u32) },
                "delta_tilde" => {
                    cfg.delta_tilde = Some(value.parse().map_err(|_| err(format!("`delta_tilde` expects a number, got `{value}`")))?)
                }
                "seed" => cfg.seed = num(value)?,
                "output" => cfg.output = base.join(value),
                "cache" => cfg.cache = Some(base.join(value)),
                "max_vertices" => cfg.max_vertices = num(value)? as usize,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        cfg.source = source.ok_or(ConfigError::Missing("source"))?;
        cfg.radius = radius.ok_or(ConfigError::Missing("radius"))?;
        cfg.levels = levels.ok_or(ConfigError::Missing("levels"))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.radius < 2 * self.levels + 2 {
            return Err(ConfigError::Invalid(format!("radius {} must be at least 2·levels + 2 = {}", self.radius, 2 * self.levels + 2)));
        }
        if !(self.beta > 1.0) {
            return Err(ConfigError::Invalid(format!("beta must exceed 1, got {}", self.beta)));
        }
        if self.truncation == 0 {
            return Err(ConfigError::Invalid("truncation must be positive".into()));
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache.clone().unwrap_or_else(|| self.output.join("cache"))
    }
}

fn parse_source(value: &str, base: &Path) -> Result<SourceSpec, String> {
    let (kind, rest) = value.split_once(char::is_whitespace).unwrap_or((value, ""));
    let rest = rest.trim();
    match kind {
        "tiling" => {
            let spec = crate::ball::TilingSpec::parse(value).map_err(|e| e.to_string())?;
            Ok(SourceSpec::Tiling { p: spec.p, q: spec.q })
        }
        "presentation" if !rest.is_empty() => Ok(SourceSpec::Presentation(base.join(rest))),
        "graph" if !rest.is_empty() => Ok(SourceSpec::Graph(base.join(rest))),
        _ => Err(format!("unknown source `{value}`; expected `tiling p=P q=Q`, `presentation <file>` or `graph <file>`")),
    }
}
