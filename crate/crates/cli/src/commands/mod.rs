pub mod cst;
pub mod fit;
pub mod levels;
pub mod spectrum;

use crate::config::{Config, ConfigError};
use cstsim_core::levels::ZfsTemperatureModel;
use cstsim_core::TAU;
use std::path::PathBuf;

/// Exit codes are a stable contract: 0 success, 1 configuration or input
/// error, 2 fit failure, 3 undefined trapping frequency.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    FitFailure(String),
    UndefinedCst(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::FitFailure(_) => 2,
            CliError::UndefinedCst(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::FitFailure(m) | CliError::UndefinedCst(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub struct CommonOpts {
    pub config_text: String,
    pub config_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub envelope: Option<PathBuf>,
}

impl CommonOpts {
    /// Resolves a possibly-relative path against the config file location.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = PathBuf::from(p);
        if path.is_absolute() {
            path
        } else {
            self.config_dir.join(path)
        }
    }
}

/// Worker cap from CSTSIM_THREADS; 0 lets the runtime use every core.
pub fn thread_cap() -> usize {
    std::env::var("CSTSIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .map(|v| v.max(1))
        .unwrap_or(0)
}

pub fn write_or_stdout(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Shared [zfs] section.
pub fn parse_zfs(cfg: &mut Config) -> Result<ZfsTemperatureModel, CliError> {
    Ok(ZfsTemperatureModel {
        two_d_g: cfg.require_f64("zfs", "two_d_g_mhz")?,
        two_d_e_ref: cfg.require_f64("zfs", "two_d_e_ref_mhz")?,
        slope: cfg.require_f64("zfs", "slope_mhz_per_k")?,
        t_ref: cfg.f64_or("zfs", "t_ref_k", 300.0)?,
    })
}

/// Reads a rate that may be given either directly in 1/us or as an ordinary
/// frequency in MHz (converted by 2 pi).
pub fn rate_key(cfg: &mut Config, section: &str, stem: &str) -> Result<Option<f64>, CliError> {
    let per_us = cfg.get_f64(section, &format!("{stem}_per_us"))?;
    let mhz = cfg.get_f64(section, &format!("{stem}_mhz"))?;
    match (per_us, mhz) {
        (Some(_), Some(_)) => Err(CliError::Config(format!(
            "give either {stem}_per_us or {stem}_mhz in [{section}], not both"
        ))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(TAU * v)),
        (None, None) => Ok(None),
    }
}

pub fn require_rate(cfg: &mut Config, section: &str, stem: &str) -> Result<f64, CliError> {
    rate_key(cfg, section, stem)?.ok_or_else(|| {
        CliError::Config(format!("missing key '{stem}_per_us' (or '{stem}_mhz') in [{section}]"))
    })
}

pub fn rate_or(cfg: &mut Config, section: &str, stem: &str, default: f64) -> Result<f64, CliError> {
    Ok(rate_key(cfg, section, stem)?.unwrap_or(default))
}

pub fn parse_axis(cfg: &mut Config, section: &str) -> Result<[f64; 3], CliError> {
    let axis = cfg
        .get_f64_list(section, "axis")?
        .unwrap_or_else(|| vec![0.0, 1.0, 0.0]);
    if axis.len() != 3 {
        return Err(CliError::Config(format!(
            "axis must have 3 components, got {}",
            axis.len()
        )));
    }
    if axis.iter().all(|v| *v == 0.0) {
        return Err(CliError::Config("axis must be nonzero".into()));
    }
    Ok([axis[0], axis[1], axis[2]])
}

pub fn parse_grid(cfg: &mut Config, section: &str) -> Result<Vec<f64>, CliError> {
    let lo = cfg.require_f64(section, "b_min_mt")?;
    let hi = cfg.require_f64(section, "b_max_mt")?;
    let step = cfg.require_f64(section, "b_step_mt")?;
    if !(step > 0.0) || !(hi > lo) {
        return Err(CliError::Config(format!(
            "invalid field grid: b_min_mt = {lo}, b_max_mt = {hi}, b_step_mt = {step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}
