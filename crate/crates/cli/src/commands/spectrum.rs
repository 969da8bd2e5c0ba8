//! `cstsim spectrum`: composed PL-contrast spectrum versus magnetic field.

use super::{
    parse_axis, parse_grid, parse_zfs, rate_or, require_rate, thread_cap, write_or_stdout,
    CliError, CommonOpts,
};
use crate::config::Config;
use crate::output::{write_csv, write_svg, ResultEnvelope};
use cstsim_core::spectra::{
    spectrum_vs_b_threads, BroadeningMode, SignalModel, SpectrumConfig, TransitionPair,
};
use cstsim_core::threestate::ThreeStateRates;
use cstsim_core::TAU;
use serde::Serialize;

#[derive(Serialize)]
pub struct SpectrumPayload {
    pub kind: String,
    pub b_mt: Vec<f64>,
    pub dpl_over_pl: Vec<f64>,
}

pub fn parse_rates(cfg: &mut Config) -> Result<ThreeStateRates, CliError> {
    let rates = ThreeStateRates {
        pump_p: require_rate(cfg, "rates", "p")?,
        decay_gamma: require_rate(cfg, "rates", "gamma")?,
        gamma_m1: rate_or(cfg, "rates", "gamma_m1", 0.0)?,
        gamma_m2: rate_or(cfg, "rates", "gamma_m2", 0.0)?,
        eta: cfg.f64_or("rates", "eta", 0.0)?,
        gamma_g: rate_or(cfg, "rates", "gamma_g", 0.0)?,
        gamma_e: rate_or(cfg, "rates", "gamma_e", 0.0)?,
        gamma_m: rate_or(cfg, "rates", "gamma_m", 0.0)?,
        w_g: rate_or(cfg, "rates", "w_g", 0.0)?,
    };
    match rates.validate() {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            Ok(rates)
        }
        Err(e) => Err(CliError::Config(e.to_string())),
    }
}

fn parse_transitions(spec: Option<String>) -> Result<Vec<TransitionPair>, CliError> {
    let Some(text) = spec else {
        return Ok(TransitionPair::default_pairs());
    };
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((a, b)) = part.split_once(':') else {
            return Err(CliError::Config(format!(
                "transition '{part}' must look like '-3/2:+1/2'"
            )));
        };
        let pa = a.trim().parse().map_err(CliError::Config)?;
        let pb = b.trim().parse().map_err(CliError::Config)?;
        out.push(TransitionPair::new(pa, pb).map_err(|e| CliError::Config(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(CliError::Config("transitions list is empty".into()));
    }
    Ok(out)
}

pub fn run(cfg: &mut Config, opts: &CommonOpts) -> Result<(), CliError> {
    let zfs = parse_zfs(cfg)?;
    let temperature = cfg.require_f64("spectrum", "temperature_k")?;
    let f_drive_mhz = cfg.require_f64("spectrum", "f_drive_mhz")?;
    let g_factor = cfg.f64_or("spectrum", "g_factor", 2.0)?;
    let axis = parse_axis(cfg, "spectrum")?;
    let b_grid = parse_grid(cfg, "spectrum")?;
    let rabi_g = TAU * cfg.require_f64("spectrum", "rabi_g_mhz")?;
    let rabi_ratio = cfg.require_f64("spectrum", "rabi_ratio")?;
    let model = match cfg.get_str("spectrum", "model")?.as_deref() {
        None | Some("numeric") => SignalModel::Numeric,
        Some("analytic") => SignalModel::Analytic,
        Some(other) => {
            return Err(CliError::Config(format!(
                "model must be 'numeric' or 'analytic', got '{other}'"
            )))
        }
    };
    let broadening = match cfg.get_str("spectrum", "broadening")?.as_deref() {
        None | Some("additive") => BroadeningMode::Additive,
        Some("convolution") => BroadeningMode::Convolution,
        Some(other) => {
            return Err(CliError::Config(format!(
                "broadening must be 'additive' or 'convolution', got '{other}'"
            )))
        }
    };
    let transitions = parse_transitions(cfg.get_str("spectrum", "transitions")?)?;
    let rates = parse_rates(cfg)?;
    cfg.reject_unknown()?;

    let scfg = SpectrumConfig {
        temperature,
        f_drive_mhz,
        b_axis: axis,
        b_grid,
        transitions,
        rabi_g,
        rabi_ratio,
        rates,
        zfs,
        g_factor,
        model,
        broadening,
    };
    let spectrum = spectrum_vs_b_threads(&scfg, thread_cap())
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = Vec::new();
    write_csv(
        &mut csv,
        &["B_mT", "dPL_over_PL"],
        spectrum
            .x
            .iter()
            .zip(spectrum.y.iter())
            .map(|(x, y)| vec![format!("{x}"), format!("{y}")]),
    )?;
    write_or_stdout(&opts.out, &String::from_utf8(csv).expect("csv is utf-8"))?;

    if let Some(path) = &opts.svg {
        write_svg(path, &spectrum.x, &spectrum.y, "B (mT)", "dPL/PL")?;
    }
    if let Some(path) = &opts.envelope {
        let payload = SpectrumPayload {
            kind: "spectrum".into(),
            b_mt: spectrum.x.clone(),
            dpl_over_pl: spectrum.y.clone(),
        };
        std::fs::write(path, ResultEnvelope::new(&opts.config_text, payload).to_json())?;
    }
    Ok(())
}
