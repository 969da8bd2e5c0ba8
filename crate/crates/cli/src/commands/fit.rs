//! `cstsim fit`: least-squares Fano decomposition of a two-column spectrum.

use super::{write_or_stdout, CliError, CommonOpts};
use crate::config::Config;
use crate::output::{read_xy_csv, ResultEnvelope};
use cstsim_core::fanofit::{fit, seed_guess, FanoResonance, FitError, FitResult};
use cstsim_core::spectra::Spectrum;
use serde::Serialize;

#[derive(Serialize)]
pub struct FanoLine {
    pub a: f64,
    pub q: f64,
    pub b0_mt: f64,
    pub width_mt: f64,
}

#[derive(Serialize)]
pub struct FitPayload {
    pub kind: String,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub baseline: f64,
    pub lines: Vec<FanoLine>,
    /// Row-major covariance over [a, q, b0, width] per line plus the
    /// baseline when it was fitted.
    pub covariance: Vec<Vec<f64>>,
}

fn payload_from(result: &FitResult, converged: bool) -> FitPayload {
    FitPayload {
        kind: "fit".into(),
        converged,
        iterations: result.iterations,
        residual_norm: result.residual_norm,
        baseline: result.baseline,
        lines: result
            .resonances
            .iter()
            .map(|l| FanoLine { a: l.a, q: l.q, b0_mt: l.b0, width_mt: l.width })
            .collect(),
        covariance: result.covariance.clone(),
    }
}

pub fn run(cfg: &mut Config, opts: &CommonOpts) -> Result<i32, CliError> {
    let data = cfg.require_str("fit", "data")?;
    let n_lines = cfg.get_i64("fit", "lines")?.unwrap_or(1);
    let baseline = cfg.get_bool("fit", "baseline")?.unwrap_or(false);
    let mut seeds: Vec<FanoResonance> = Vec::new();
    for k in 1.. {
        match cfg.get_str("fit", &format!("seed_{k}"))? {
            Some(text) => {
                let parts: Vec<&str> = text.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(CliError::Config(format!(
                        "seed_{k} must be 'a,q,b0_mT,width_mT', got '{text}'"
                    )));
                }
                let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
                let nums = nums.map_err(|_| {
                    CliError::Config(format!("seed_{k}: '{text}' contains a non-number"))
                })?;
                seeds.push(FanoResonance { a: nums[0], q: nums[1], b0: nums[2], width: nums[3] });
            }
            None => break,
        }
    }
    cfg.reject_unknown()?;

    let path = opts.resolve(&data);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read '{}': {e}", path.display())))?;
    let (x, y) = read_xy_csv(&text).map_err(CliError::Config)?;
    let spec = Spectrum::from_columns(x, y).map_err(|e| CliError::Config(e.to_string()))?;

    if seeds.is_empty() {
        if n_lines < 1 {
            return Err(CliError::Config("lines must be >= 1".into()));
        }
        seeds = seed_guess(&spec, n_lines as usize)
            .map_err(|e| CliError::FitFailure(e.to_string()))?;
    }

    match fit(&spec, &seeds, baseline) {
        Ok(result) => {
            let env = ResultEnvelope::new(&opts.config_text, payload_from(&result, true));
            write_or_stdout(&opts.out, &(env.to_json() + "\n"))?;
            Ok(0)
        }
        Err(FitError::NotConverged { best, max_iterations }) => {
            let env = ResultEnvelope::new(&opts.config_text, payload_from(&best, false));
            write_or_stdout(&opts.out, &(env.to_json() + "\n"))?;
            eprintln!("error: fit did not converge within {max_iterations} iterations");
            Ok(2)
        }
        Err(e @ (FitError::TooFewPoints { .. } | FitError::NonPositiveWidth(_))) => {
            Err(CliError::Config(e.to_string()))
        }
        Err(e) => Err(CliError::FitFailure(e.to_string())),
    }
}
