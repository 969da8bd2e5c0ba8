//! `cstsim cst`: trapping-frequency report with a full-model cross-check.

use super::{require_rate, write_or_stdout, CliError, CommonOpts};
use crate::config::Config;
use crate::output::ResultEnvelope;
use cstsim_core::twostate::{
    cst_angle, cst_dip_depth, cst_frequency, dephasing_rate, sr_signal, DrivePair, TwoStateRates,
    TwoStateError,
};
use cstsim_core::{rad_per_us_to_mhz, TAU};
use serde::Serialize;

#[derive(Serialize)]
pub struct CstScan {
    pub omega_at_min_rad_per_us: f64,
    pub f_at_min_mhz: f64,
    pub r_min: f64,
    pub rel_offset_from_cst: f64,
}

#[derive(Serialize)]
pub struct CstPayload {
    pub kind: String,
    pub omega_cst_rad_per_us: f64,
    pub f_cst_mhz: f64,
    /// Small-angle trap-axis tilt; absent for equal splittings.
    pub theta_cst: Option<f64>,
    pub dip_depth: f64,
    pub dephasing_rate_per_us: f64,
    pub scan: CstScan,
}

pub fn run(cfg: &mut Config, opts: &CommonOpts) -> Result<(), CliError> {
    let d = DrivePair {
        omega_z_g: TAU * cfg.require_f64("cst", "splitting_g_mhz")?,
        omega_z_e: TAU * cfg.require_f64("cst", "splitting_e_mhz")?,
        omega_r_g: TAU * cfg.require_f64("cst", "rabi_g_mhz")?,
        omega_r_e: TAU * cfg.require_f64("cst", "rabi_e_mhz")?,
        omega: 0.0,
    };
    let rates = TwoStateRates {
        pump_p: require_rate(cfg, "rates", "p")?,
        decay_gamma: require_rate(cfg, "rates", "gamma")?,
        spin_gamma: require_rate(cfg, "rates", "gamma_spin")?,
        pump_sigma: require_rate(cfg, "rates", "sigma")?,
    };
    cfg.reject_unknown()?;

    let omega_cst = match cst_frequency(&d) {
        Ok(v) => v,
        Err(TwoStateError::UndefinedCst) => {
            return Err(CliError::UndefinedCst(
                "Rabi amplitudes are equal; the trapping frequency is undefined".into(),
            ))
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let theta = cst_angle(&d).ok();
    let depth = cst_dip_depth(&d);
    let dephasing = dephasing_rate(&d, &rates);

    // Full-model cross-check: dense scan of R(omega) around both splittings,
    // then golden-section refinement of the minimum.
    let pad = 2.0 * (rates.pump_p + rates.decay_gamma)
        + (d.omega_z_e - d.omega_z_g).abs()
        + d.omega_r_g.abs()
        + d.omega_r_e.abs();
    let lo = d.omega_z_g.min(d.omega_z_e) - pad;
    let hi = d.omega_z_g.max(d.omega_z_e) + pad;
    let n = 100_000;
    let eval = |w: f64| -> Result<f64, CliError> {
        sr_signal(&DrivePair { omega: w, ..d }, &rates).map_err(|e| CliError::Config(e.to_string()))
    };
    let mut best = (lo, f64::MAX);
    for i in 0..=n {
        let w = lo + (hi - lo) * i as f64 / n as f64;
        let r = eval(w)?;
        if r < best.1 {
            best = (w, r);
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INVPHI * (b - a);
    let mut dd = a + INVPHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(dd)?;
    for _ in 0..120 {
        if fc < fd {
            b = dd;
            dd = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = dd;
            fc = fd;
            dd = a + INVPHI * (b - a);
            fd = eval(dd)?;
        }
        if b - a < 1e-10 * omega_cst.abs().max(1.0) {
            break;
        }
    }
    let w_min = 0.5 * (a + b);
    let r_min = eval(w_min)?;

    let payload = CstPayload {
        kind: "cst".into(),
        omega_cst_rad_per_us: omega_cst,
        f_cst_mhz: rad_per_us_to_mhz(omega_cst),
        theta_cst: theta,
        dip_depth: depth,
        dephasing_rate_per_us: dephasing,
        scan: CstScan {
            omega_at_min_rad_per_us: w_min,
            f_at_min_mhz: rad_per_us_to_mhz(w_min),
            r_min,
            rel_offset_from_cst: (w_min - omega_cst).abs() / omega_cst.abs().max(f64::MIN_POSITIVE),
        },
    };
    let env = ResultEnvelope::new(&opts.config_text, payload);
    write_or_stdout(&opts.out, &(env.to_json() + "\n"))?;
    Ok(())
}
