//! Run configuration: flat-sectioned key = value file (TOML), one section
//! per pipeline stage (D24).

use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub coefficient: CoefficientSection,
    pub period: PeriodSection,
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySection>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    /// constant | exponential | square_polynomial | user_sampled
    pub kind: String,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub exponent: Option<f64>,
    /// 3-column numeric text table (u, u', u'') on a uniform grid over [0, π]
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
}

fn default_grid_size() -> usize {
    513
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSection {
    pub p: u32,
    pub q: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub m_max: u32,
    pub n_max: usize,
    #[serde(default = "default_kernel_tol")]
    pub kernel_tol: f64,
    /// level bracketed by `gaps` and the nonresonance check
    #[serde(default)]
    pub level: f64,
}

fn default_kernel_tol() -> f64 {
    1e-6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default)]
    pub c_lin: f64,
    #[serde(default)]
    pub c_sat: f64,
    #[serde(default)]
    pub c_osc: f64,
    #[serde(default)]
    pub forcing: Vec<ForcingMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub m: usize,
    pub n: usize,
    /// cos | sin
    pub kind: String,
    pub amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_steps")]
    pub continuation_steps: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_r_clamp")]
    pub r_clamp: f64,
    #[serde(default)]
    pub seed: u64,
    /// solver truncation; defaults to the spectrum window
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

fn default_steps() -> usize {
    10
}

fn default_newton_tol() -> f64 {
    1e-10
}

fn default_newton_iter() -> usize {
    50
}

fn default_r_clamp() -> f64 {
    10.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// csv | json
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("varwave-out")
}

fn default_format() -> String {
    "json".to_string()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: default_format(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("malformed config {}: {e}", path.display())))?;
        if cfg.output.format != "csv" && cfg.output.format != "json" {
            return Err(CliError::Config(format!(
                "output.format must be csv or json, got {}",
                cfg.output.format
            )));
        }
        Ok(cfg)
    }

    pub fn nonlinearity_section(&self) -> Result<&NonlinearitySection, CliError> {
        self.nonlinearity
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [nonlinearity] section".into()))
    }

    pub fn solver_section(&self) -> Result<&SolverSection, CliError> {
        self.solver
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [solver] section".into()))
    }
}

/// Parses a whitespace-separated 3-column numeric table (u, u', u'').
pub fn load_sample_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read table {}: {e}", path.display())))?;
    let mut u = Vec::new();
    let mut du = Vec::new();
    let mut ddu = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(CliError::Config(format!(
                "{}:{}: expected 3 columns, got {}",
                path.display(),
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|e| {
                CliError::Config(format!("{}:{}: bad number {s}: {e}", path.display(), lineno + 1))
            })
        };
        u.push(parse(cols[0])?);
        du.push(parse(cols[1])?);
        ddu.push(parse(cols[2])?);
    }
    Ok((u, du, ddu))
}
