//! TOML run configuration. See `SCHEMA.md` for the reference.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::expr::{Expression, FieldValue};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<MeshConfig>,
    pub cover: Option<CoverConfig>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub problem: ProblemConfig,
    pub weights: Option<WeightsConfig>,
    pub source: Option<FieldConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub poincare: Option<PoincareConfig>,
    pub transient: Option<TransientConfig>,
    pub convergence: Option<ConvergenceConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    /// `[a, b]` in 1D, `[x0, y0, x1, y1]` in 2D.
    pub extents: Vec<f64>,
    /// Cells per axis.
    pub resolution: Vec<usize>,
    /// Boxes `[x0, y0, x1, y1]` whose cells are removed (2D).
    #[serde(default)]
    pub holes: Vec<[f64; 4]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    pub sets: Vec<SetConfig>,
}

/// A cover set: the cells whose centers satisfy exactly one predicate.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub name: Option<String>,
    pub all: Option<bool>,
    /// `a < x < b`.
    pub interval: Option<[f64; 2]>,
    /// `x0 < x < x1`, `y0 < y < y1`.
    #[serde(rename = "box")]
    pub rect: Option<[f64; 4]>,
    /// `[cx, cy, r]`.
    pub disk: Option<[f64; 3]>,
    /// `[cx, cy, from_deg, to_deg]`, counter-clockwise.
    pub sector: Option<[f64; 4]>,
}

fn one() -> f64 {
    1.0
}

fn zero_expr() -> Expression {
    Expression::constant(0.0)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Rods(RodsModel),
    Multicontinuum(MultiModel),
    Inclusion(InclusionModel),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodsModel {
    pub epsilon: f64,
    pub cells_per_unit: usize,
    #[serde(default = "one")]
    pub w0: f64,
    #[serde(default = "one")]
    pub w1: f64,
    #[serde(default = "one")]
    pub w01: f64,
    #[serde(default = "zero_expr")]
    pub f0: Expression,
    #[serde(default = "zero_expr")]
    pub f1: Expression,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiModel {
    pub extents: [f64; 4],
    pub resolution: [usize; 2],
    pub permeabilities: Vec<f64>,
    pub exchange: Vec<Vec<f64>>,
    #[serde(default)]
    pub forcings: Vec<Expression>,
    #[serde(default)]
    pub compressible: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionModel {
    pub extents: [f64; 4],
    pub resolution: [usize; 2],
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "one")]
    pub w0: f64,
    #[serde(default = "one")]
    pub w1: f64,
    #[serde(default = "one")]
    pub w01: f64,
    #[serde(default = "zero_expr")]
    pub f0: Expression,
    #[serde(default = "zero_expr")]
    pub f1: Expression,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub degree: usize,
}

/// A cover set named either by position or by its `name`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SetRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(default = "one_expr")]
    pub default: Expression,
    #[serde(default, rename = "block")]
    pub blocks: Vec<WeightBlock>,
}

fn one_expr() -> Expression {
    Expression::constant(1.0)
}

/// Override for the blocks of one degree; later entries win.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightBlock {
    pub degree: usize,
    /// Multi-index of the intersection; all blocks of the degree if absent.
    pub index: Option<Vec<SetRef>>,
    /// Čech degree filter.
    pub p: Option<usize>,
    pub value: Expression,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default = "FieldValue::zero")]
    pub default: FieldValue,
    #[serde(default, rename = "block")]
    pub blocks: Vec<FieldBlock>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self { default: FieldValue::zero(), blocks: Vec::new() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub index: Option<Vec<SetRef>>,
    pub p: Option<usize>,
    pub value: FieldValue,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Primal,
    Mixed,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Also write the operator matrices in Matrix Market format.
    #[serde(default)]
    pub matrix_market: bool,
}

fn default_residual_tol() -> f64 {
    1e-8
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: Method::Auto, residual_tol: default_residual_tol(), matrix_market: false }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    pub degrees: Option<Vec<usize>>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `epsilon` (rods) or `radius` (inclusion).
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientConfig {
    /// Time derivative order: 1 (heat) or 2 (wave).
    pub order: u32,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub initial: FieldConfig,
    #[serde(default)]
    pub velocity: FieldConfig,
    /// Drive with `[source]`; otherwise unforced.
    #[serde(default)]
    pub forced: bool,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    pub self_convergence: Option<SelfConvergenceConfig>,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfConvergenceConfig {
    pub t_final: f64,
    pub base_steps: usize,
    pub levels: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Resolution per level: `cells_per_unit` for rods, cells per axis in 2D.
    pub refinements: Vec<usize>,
    /// `rods` or `double_porosity` replaces the model forcing.
    pub manufactured: Option<String>,
    /// Exact solution per cover set when no manufactured preset is used.
    pub exact: Option<Vec<Expression>>,
}

/// A configuration error with the line it refers to, when known.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path.display(), l, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

/// Parsed configuration together with its source text.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    /// Error anchored at the first line assigning `key` (or opening a
    /// `[key]` table).
    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { path: self.path.clone(), line: locate(&self.text, key), message: message.into() }
    }

    /// Error anchored at the first `key = ...` line whose value contains
    /// `fragment`, falling back to [`Self::error`].
    pub fn error_at_value(&self, key: &str, fragment: &str, message: impl Into<String>) -> ConfigError {
        let line = self
            .text
            .lines()
            .position(|l| {
                l.trim_start()
                    .strip_prefix(key)
                    .and_then(|r| r.trim_start().strip_prefix('='))
                    .is_some_and(|v| v.contains(fragment))
            })
            .map(|i| i + 1);
        match line {
            Some(_) => ConfigError { path: self.path.clone(), line, message: message.into() },
            None => self.error(key, message),
        }
    }
}

fn locate(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        let header = t.trim_start_matches('[').trim_end().trim_end_matches(']');
        let dotted = format!(".{key}");
        (t.starts_with('[') && (header == key || header.ends_with(&dotted) || header.starts_with(&format!("{key}."))))
            || t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of(text: &str, e: &toml::de::Error) -> Option<usize> {
    e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

fn is_header(line: &str) -> bool {
    let t = line.trim();
    t.starts_with('[') && t.ends_with(']') && !t.contains(',')
}

/// The `kind` tag makes serde buffer `[model]`, which drops spans. Parse the
/// section again as the concrete preset to recover the offending line.
fn model_error(text: &str) -> Option<(usize, String)> {
    let table: toml::Table = toml::from_str(text).ok()?;
    let kind = table.get("model")?.get("kind")?.as_str()?.to_string();
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| l.trim() == "[model]")?;
    let end = lines[start + 1..].iter().position(|l| is_header(l)).map_or(lines.len(), |i| start + 1 + i);
    let section: String = lines[start + 1..end]
        .iter()
        .map(|l| if l.trim_start().strip_prefix("kind").is_some_and(|r| r.trim_start().starts_with('=')) { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    let err = match kind.as_str() {
        "rods" => toml::from_str::<RodsModel>(&section).err(),
        "multicontinuum" => toml::from_str::<MultiModel>(&section).err(),
        "inclusion" => toml::from_str::<InclusionModel>(&section).err(),
        _ => None,
    }?;
    Some((start + 1 + line_of(&section, &err)?, err.message().to_string()))
}

pub fn parse(path: &Path, text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, message) = match model_error(text) {
            Some((l, m)) => (Some(l), m),
            None => (line_of(text, &e), e.message().to_string()),
        };
        ConfigError { path: path.to_path_buf(), line, message }
    })
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    let config = parse(path, &text)?;
    Ok(LoadedConfig { path: path.to_path_buf(), text, config })
}
