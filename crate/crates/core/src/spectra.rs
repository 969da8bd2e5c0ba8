//! Full spin-acoustic resonance spectra versus magnetic field and
//! temperature.
//!
//! Each listed GS/ES level pair is reduced to an independent pseudospin-1/2
//! transition; its Zeeman splittings come from the spin-3/2 level structure
//! at the scan field and the relative PL change comes from the three-state
//! model (numeric steady-state solves or the closed-form shape calibrated
//! against one numeric point). Signals of the listed transitions add.

use crate::levels::{
    d_e_of_temperature, eigenlevels, HamiltonianParams, LevelsError, SpinProjection,
    ZfsTemperatureModel,
};
use crate::parallel::map_indexed;
use crate::threestate::{odmr_signal_analytic, odmr_signal_numeric, ThreeStateError, ThreeStateRates};
use crate::twostate::DrivePair;
use crate::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid spectrum configuration: {0}")]
    InvalidConfig(String),
    #[error("integration window [{lo}, {hi}] mT lies outside the spectrum range")]
    WindowOutOfRange { lo: f64, hi: f64 },
    #[error(transparent)]
    Levels(#[from] LevelsError),
    #[error(transparent)]
    Model(#[from] ThreeStateError),
}

/// Which model produces the per-transition PL contrast.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalModel {
    /// Closed-form shape, scaled once per spectrum against the numeric model.
    Analytic,
    /// Full steady-state solves at every grid point.
    Numeric,
}

/// How the inhomogeneous GS broadening W_g enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BroadeningMode {
    /// W_g stays an additive width inside the model rates.
    Additive,
    /// W_g = 0 in the rates; the signal is averaged over a Gaussian spread
    /// of the GS splitting (sigma = W_g) by 7-point Gauss-Hermite quadrature.
    Convolution,
}

/// One GS/ES pseudospin pair, identified by the unordered pair of spin
/// projections it connects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionPair {
    pub a: SpinProjection,
    pub b: SpinProjection,
}

impl TransitionPair {
    pub fn new(a: SpinProjection, b: SpinProjection) -> Result<Self, SpectraError> {
        if a == b {
            return Err(SpectraError::InvalidConfig("transition pair needs two distinct levels".into()));
        }
        Ok(TransitionPair { a, b })
    }

    /// The two |delta m| = 2 pairs driven by the strain field.
    pub fn default_pairs() -> Vec<TransitionPair> {
        vec![
            TransitionPair { a: SpinProjection::MinusThreeHalf, b: SpinProjection::PlusHalf },
            TransitionPair { a: SpinProjection::PlusThreeHalf, b: SpinProjection::MinusHalf },
        ]
    }
}

impl std::fmt::Display for TransitionPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.a, self.b)
    }
}

/// Full configuration of one spectrum computation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumConfig {
    /// Sample temperature, K.
    pub temperature: f64,
    /// Drive frequency, MHz.
    pub f_drive_mhz: f64,
    /// Magnetic field direction (need not be normalized).
    pub b_axis: [f64; 3],
    /// Ordered scan fields, mT.
    pub b_grid: Vec<f64>,
    /// Level pairs contributing to the spectrum.
    pub transitions: Vec<TransitionPair>,
    /// GS Rabi amplitude, rad/us.
    pub rabi_g: f64,
    /// Signed ratio of ES to GS Rabi amplitude.
    pub rabi_ratio: f64,
    /// Optical/spin rates shared by all listed transitions.
    pub rates: ThreeStateRates,
    /// Zero-field splitting model for both manifolds.
    pub zfs: ZfsTemperatureModel,
    /// Electron g-factor.
    pub g_factor: f64,
    pub model: SignalModel,
    pub broadening: BroadeningMode,
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<(), SpectraError> {
        if !(self.f_drive_mhz > 0.0) {
            return Err(SpectraError::InvalidConfig(format!(
                "drive frequency must be positive, got {} MHz",
                self.f_drive_mhz
            )));
        }
        if self.b_grid.len() < 2 {
            return Err(SpectraError::InvalidConfig("field grid needs at least two points".into()));
        }
        for w in self.b_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(SpectraError::InvalidConfig("field grid must be strictly increasing".into()));
            }
        }
        if self.transitions.is_empty() {
            return Err(SpectraError::InvalidConfig("at least one transition pair is required".into()));
        }
        if self.b_axis == [0.0; 3] {
            return Err(SpectraError::InvalidConfig("field axis must be nonzero".into()));
        }
        self.rates.validate().map_err(SpectraError::Model)?;
        Ok(())
    }
}

/// A computed spectrum: `y` is the relative PL change at field `x[i]` mT.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub meta: Option<SpectrumConfig>,
}

impl Spectrum {
    pub fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self, SpectraError> {
        if x.len() != y.len() {
            return Err(SpectraError::InvalidConfig("x and y lengths differ".into()));
        }
        for w in x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(SpectraError::InvalidConfig("x must be strictly increasing".into()));
            }
        }
        Ok(Spectrum { x, y, meta: None })
    }
}

/// Angular GS and ES splittings (rad/us) of every configured transition pair
/// at field `b` (mT), with the ES zero-field splitting evaluated at the
/// configured temperature.
pub fn pair_splittings(cfg: &SpectrumConfig, b: f64) -> Result<Vec<(f64, f64)>, SpectraError> {
    let d_e = d_e_of_temperature(&cfg.zfs, cfg.temperature)?;
    let n = norm3(cfg.b_axis);
    let field = [cfg.b_axis[0] / n * b, cfg.b_axis[1] / n * b, cfg.b_axis[2] / n * b];
    let gs = eigenlevels(&HamiltonianParams { d: cfg.zfs.d_g(), g_factor: cfg.g_factor, b: field })?;
    let es = eigenlevels(&HamiltonianParams { d: d_e, g_factor: cfg.g_factor, b: field })?;
    Ok(cfg
        .transitions
        .iter()
        .map(|t| {
            let fg = (gs.energy_of(t.a) - gs.energy_of(t.b)).abs();
            let fe = (es.energy_of(t.a) - es.energy_of(t.b)).abs();
            (TAU * fg, TAU * fe)
        })
        .collect())
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// 7-point Gauss-Hermite nodes and weights for integrals against e^{-x^2}.
const GH_NODES: [f64; 7] = [
    -2.651961356835233492,
    -1.673551628767471445,
    -0.816287882858964664,
    0.0,
    0.816287882858964664,
    1.673551628767471445,
    2.651961356835233492,
];
const GH_WEIGHTS: [f64; 7] = [
    9.71781245099519154e-4,
    5.45155828191270306e-2,
    4.25607252610127800e-1,
    8.10264617556807326e-1,
    4.25607252610127800e-1,
    5.45155828191270306e-2,
    9.71781245099519154e-4,
];

const INV_SQRT_PI: f64 = 0.5641895835477562869;

/// Per-transition signal with the configured broadening treatment applied.
fn transition_signal<F>(cfg: &SpectrumConfig, drive: &DrivePair, eval: &F) -> Result<f64, SpectraError>
where
    F: Fn(&ThreeStateRates, &DrivePair) -> Result<f64, ThreeStateError>,
{
    match cfg.broadening {
        BroadeningMode::Additive => Ok(eval(&cfg.rates, drive)?),
        BroadeningMode::Convolution => {
            let rates = ThreeStateRates { w_g: 0.0, ..cfg.rates };
            let sigma = cfg.rates.w_g;
            if sigma == 0.0 {
                return Ok(eval(&rates, drive)?);
            }
            let mut acc = 0.0;
            for (x, w) in GH_NODES.iter().zip(GH_WEIGHTS.iter()) {
                let shifted = DrivePair {
                    omega_z_g: drive.omega_z_g + std::f64::consts::SQRT_2 * sigma * x,
                    ..*drive
                };
                acc += w * eval(&rates, &shifted)?;
            }
            Ok(acc * INV_SQRT_PI)
        }
    }
}

/// Fixes the open overall constant of the closed-form signal by matching the
/// numeric model at one reference drive configuration built from the
/// parameter set alone, so the scale does not depend on the scan grid.
fn analytic_scale(cfg: &SpectrumConfig) -> Result<f64, SpectraError> {
    let width = crate::threestate::gs_width(&cfg.rates, 0.0).separated.max(1e-6);
    let anchors = [0.0, width, 3.0 * width];
    for detune in anchors {
        let d = DrivePair {
            omega_z_g: 1000.0 * width.max(1.0),
            omega_z_e: 1000.0 * width.max(1.0) + 3.0 * width,
            omega_r_g: cfg.rabi_g,
            omega_r_e: cfg.rabi_ratio * cfg.rabi_g,
            omega: 1000.0 * width.max(1.0) + detune,
        };
        let raw = odmr_signal_analytic(&cfg.rates, &d);
        if raw.abs() < 1e-300 {
            continue;
        }
        let reference = odmr_signal_numeric(&cfg.rates, &d)?;
        return Ok(reference / raw);
    }
    // fully degenerate closed form (e.g. eta = 0); any scale gives zeros
    Ok(0.0)
}

fn drives_at(cfg: &SpectrumConfig, b: f64) -> Result<Vec<DrivePair>, SpectraError> {
    let omega = TAU * cfg.f_drive_mhz;
    Ok(pair_splittings(cfg, b)?
        .into_iter()
        .map(|(wg, we)| DrivePair {
            omega_z_g: wg,
            omega_z_e: we,
            omega_r_g: cfg.rabi_g,
            omega_r_e: cfg.rabi_ratio * cfg.rabi_g,
            omega,
        })
        .collect())
}

/// Spectrum versus magnetic field, single-threaded.
pub fn spectrum_vs_b(cfg: &SpectrumConfig) -> Result<Spectrum, SpectraError> {
    spectrum_vs_b_threads(cfg, 1)
}

/// Spectrum versus magnetic field with up to `threads` workers (0 = auto).
/// The output is identical for every thread count.
pub fn spectrum_vs_b_threads(cfg: &SpectrumConfig, threads: usize) -> Result<Spectrum, SpectraError> {
    cfg.validate()?;
    let n = cfg.b_grid.len();

    if cfg.rabi_g == 0.0 {
        return Ok(Spectrum { x: cfg.b_grid.clone(), y: vec![0.0; n], meta: Some(cfg.clone()) });
    }

    let numeric = |r: &ThreeStateRates, d: &DrivePair| odmr_signal_numeric(r, d);

    let y = match cfg.model {
        SignalModel::Numeric => {
            let rows: Vec<Result<f64, SpectraError>> = map_indexed(n, threads, |i| {
                let mut acc = 0.0;
                for d in drives_at(cfg, cfg.b_grid[i])? {
                    acc += transition_signal(cfg, &d, &numeric)?;
                }
                Ok(acc)
            });
            rows.into_iter().collect::<Result<Vec<f64>, _>>()?
        }
        SignalModel::Analytic => {
            let analytic = |r: &ThreeStateRates, d: &DrivePair| -> Result<f64, ThreeStateError> {
                Ok(odmr_signal_analytic(r, d))
            };
            let scale = analytic_scale(cfg)?;
            let rows: Vec<Result<f64, SpectraError>> = map_indexed(n, threads, |i| {
                let mut acc = 0.0;
                for d in drives_at(cfg, cfg.b_grid[i])? {
                    acc += transition_signal(cfg, &d, &analytic)?;
                }
                Ok(acc * scale)
            });
            rows.into_iter().collect::<Result<Vec<f64>, _>>()?
        }
    };

    Ok(Spectrum { x: cfg.b_grid.clone(), y, meta: Some(cfg.clone()) })
}

/// Per-temperature parameter row for a temperature series.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperatureRow {
    pub temperature: f64,
    pub rates: ThreeStateRates,
    pub rabi_ratio: f64,
}

/// Spectra at a series of temperatures; the ES splitting and the caller-
/// supplied rates are re-evaluated per row, and the field grid is restricted
/// to `b_window` (mT).
pub fn spectrum_vs_t(
    cfg: &SpectrumConfig,
    rows: &[TemperatureRow],
    b_window: (f64, f64),
    threads: usize,
) -> Result<Vec<Spectrum>, SpectraError> {
    let grid: Vec<f64> = cfg
        .b_grid
        .iter()
        .copied()
        .filter(|b| *b >= b_window.0 && *b <= b_window.1)
        .collect();
    if grid.len() < 2 {
        return Err(SpectraError::InvalidConfig("field window leaves fewer than two grid points".into()));
    }
    rows.iter()
        .map(|row| {
            let sub = SpectrumConfig {
                temperature: row.temperature,
                rates: row.rates,
                rabi_ratio: row.rabi_ratio,
                b_grid: grid.clone(),
                ..cfg.clone()
            };
            spectrum_vs_b_threads(&sub, threads)
        })
        .collect()
}

/// Windowed magnitude areas of a spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct AreaReport {
    /// Per-window trapezoidal integral of |y|, signed by the net integral
    /// of y over the window.
    pub areas: Vec<f64>,
    /// Set when any two requested windows overlap.
    pub overlap_warning: bool,
}

/// Integrates |y| over each window (mT range) of the spectrum, with linear
/// interpolation at the window edges. The sign of each area follows the net
/// signed integral over that window.
pub fn resonance_areas(s: &Spectrum, windows: &[(f64, f64)]) -> Result<AreaReport, SpectraError> {
    let (x_lo, x_hi) = match (s.x.first(), s.x.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(SpectraError::InvalidConfig("empty spectrum".into())),
    };
    for &(lo, hi) in windows {
        if !(lo < hi) || lo < x_lo || hi > x_hi {
            return Err(SpectraError::WindowOutOfRange { lo, hi });
        }
    }
    let mut overlap_warning = false;
    for i in 0..windows.len() {
        for j in (i + 1)..windows.len() {
            let (a, b) = windows[i];
            let (c, d) = windows[j];
            if a < d && c < b {
                overlap_warning = true;
            }
        }
    }

    let value_at = |b: f64| -> f64 {
        // binary search for the straddling segment
        let idx = s.x.partition_point(|v| *v < b);
        if idx == 0 {
            return s.y[0];
        }
        if idx >= s.x.len() {
            return *s.y.last().unwrap();
        }
        let (x0, x1) = (s.x[idx - 1], s.x[idx]);
        let t = (b - x0) / (x1 - x0);
        s.y[idx - 1] * (1.0 - t) + s.y[idx] * t
    };

    let areas = windows
        .iter()
        .map(|&(lo, hi)| {
            let mut xs = vec![lo];
            xs.extend(s.x.iter().copied().filter(|v| *v > lo && *v < hi));
            xs.push(hi);
            let mut abs_area = 0.0;
            let mut signed_area = 0.0;
            for w in xs.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (ya, yb) = (value_at(a), value_at(b));
                let dx = b - a;
                abs_area += 0.5 * (ya.abs() + yb.abs()) * dx;
                signed_area += 0.5 * (ya + yb) * dx;
            }
            if signed_area < 0.0 { -abs_area } else { abs_area }
        })
        .collect();

    Ok(AreaReport { areas, overlap_warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zfs() -> ZfsTemperatureModel {
        ZfsTemperatureModel { two_d_g: 70.0, two_d_e_ref: 430.0, slope: 2.1, t_ref: 300.0 }
    }

    // Fit-table-like 125 K parameter row; ordinary-frequency MHz values
    // extrapolated below the low end of the table trend, converted to rad/us.
    fn rates_125k() -> ThreeStateRates {
        ThreeStateRates {
            pump_p: TAU * 0.3,
            decay_gamma: TAU * 70.0,
            gamma_m1: TAU * 0.07,
            gamma_m2: TAU * 0.07,
            eta: 0.05,
            gamma_g: TAU * 2.5e-5,
            gamma_e: TAU * 0.25,
            gamma_m: 0.0,
            w_g: TAU * 7.0,
        }
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    fn config_125k() -> SpectrumConfig {
        SpectrumConfig {
            temperature: 125.0,
            f_drive_mhz: 921.0,
            b_axis: [0.0, 1.0, 0.0],
            b_grid: grid(1.0, 24.0, 0.05),
            transitions: TransitionPair::default_pairs(),
            rabi_g: 0.02,
            rabi_ratio: -460.0,
            rates: rates_125k(),
            zfs: zfs(),
            g_factor: 2.0,
            model: SignalModel::Numeric,
            broadening: BroadeningMode::Additive,
        }
    }

    #[test]
    fn splittings_at_analytic_zeeman_resonance() {
        let mut cfg = config_125k();
        cfg.zfs = ZfsTemperatureModel { two_d_g: 0.0, two_d_e_ref: 0.0, slope: 0.0, t_ref: 300.0 };
        let b = 921.0 / (2.0 * 2.0 * crate::levels::MU_B_MHZ_PER_MT);
        let sp = pair_splittings(&cfg, b).unwrap();
        for (wg, we) in sp {
            assert!((wg - TAU * 921.0).abs() < 1e-6, "{wg}");
            assert!((we - TAU * 921.0).abs() < 1e-6);
        }
    }

    #[test]
    fn es_splitting_shifts_with_temperature() {
        let cfg = config_125k();
        let cold = pair_splittings(&cfg, 0.0).unwrap();
        let warm = pair_splittings(&SpectrumConfig { temperature: 300.0, ..cfg }, 0.0).unwrap();
        // at B = 0 both pairs span the doublets: splitting = 2 D_e
        let shift = cold[0].1 - warm[0].1;
        assert!((shift - TAU * 367.5).abs() < 1e-6, "shift {shift}");
    }

    #[test]
    fn gs_splittings_bracket_drive_between_16_and_17_mt() {
        let cfg = config_125k();
        let at16 = pair_splittings(&cfg, 16.0).unwrap();
        let at17 = pair_splittings(&cfg, 17.0).unwrap();
        let f = TAU * 921.0;
        // one pair resonates below 16.5, the other above
        let lo = at16.iter().map(|p| p.0).fold(f64::MIN, f64::max);
        let hi = at17.iter().map(|p| p.0).fold(f64::MAX, f64::min);
        assert!(lo > f || hi < f || (at16.iter().any(|p| p.0 < f) && at17.iter().any(|p| p.0 > f)));
    }

    #[test]
    fn zero_rabi_gives_flat_spectrum() {
        let mut cfg = config_125k();
        cfg.rabi_g = 0.0;
        cfg.b_grid = grid(10.0, 12.0, 0.5);
        let s = spectrum_vs_b(&cfg).unwrap();
        assert!(s.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spectrum_is_deterministic_and_thread_independent() {
        let mut cfg = config_125k();
        cfg.b_grid = grid(15.5, 18.0, 0.1);
        let a = spectrum_vs_b_threads(&cfg, 1).unwrap();
        let b = spectrum_vs_b_threads(&cfg, 4).unwrap();
        assert_eq!(a.y, b.y);
        let c = spectrum_vs_b_threads(&cfg, 4).unwrap();
        assert_eq!(b.y, c.y);
    }

    #[test]
    fn summed_spectrum_equals_sum_of_single_transition_spectra() {
        let mut cfg = config_125k();
        cfg.b_grid = grid(15.5, 18.0, 0.25);
        let both = spectrum_vs_b(&cfg).unwrap();
        let mut sum = vec![0.0; cfg.b_grid.len()];
        for t in TransitionPair::default_pairs() {
            let single = SpectrumConfig { transitions: vec![t], ..cfg.clone() };
            for (acc, v) in sum.iter_mut().zip(spectrum_vs_b(&single).unwrap().y) {
                *acc += v;
            }
        }
        for (a, b) in both.y.iter().zip(sum.iter()) {
            assert!((a - b).abs() < 1e-18, "{a} vs {b}");
        }
    }

    #[test]
    fn convolution_converges_to_additive_at_zero_width() {
        let mut cfg = config_125k();
        cfg.b_grid = grid(15.9, 17.5, 0.2);
        cfg.rates.w_g = 0.0;
        let additive = spectrum_vs_b(&cfg).unwrap();
        cfg.broadening = BroadeningMode::Convolution;
        let conv = spectrum_vs_b(&cfg).unwrap();
        for (a, b) in additive.y.iter().zip(conv.y.iter()) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn fig2c_like_feature_set_at_125k() {
        let cfg = config_125k();
        let s = spectrum_vs_b(&cfg).unwrap();
        let win = |lo: f64, hi: f64| -> (f64, f64) {
            // (min, max) of y inside the window
            let mut mn = f64::MAX;
            let mut mx = f64::MIN;
            for (x, y) in s.x.iter().zip(s.y.iter()) {
                if *x >= lo && *x <= hi {
                    mn = mn.min(*y);
                    mx = mx.max(*y);
                }
            }
            (mn, mx)
        };
        let peak = s.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        // broad negative dips near 4 and 18 mT
        let (mn4, _) = win(3.0, 5.5);
        let (mn18, _) = win(17.6, 19.5);
        assert!(mn4 < -0.3 * peak, "no dip near 4 mT: {mn4}");
        assert!(mn18 < -0.3 * peak, "no dip near 18 mT: {mn18}");
        // narrow positive peak near 16 mT
        let (_, mx16) = win(15.7, 16.6);
        assert!(mx16 > 0.0, "no positive peak near 16 mT: {mx16}");
        // narrow dip near 17 mT: deeper than the surrounding background
        let (mn17, _) = win(16.9, 17.4);
        let bg = s
            .x
            .iter()
            .zip(s.y.iter())
            .filter(|(x, _)| (16.6..=16.8).contains(*x))
            .map(|(_, y)| *y)
            .fold(f64::MAX, f64::min);
        assert!(mn17 < bg, "17 mT feature ({mn17}) does not dip below background ({bg})");
    }

    #[test]
    fn temperature_series_es_dips_move_down_in_field_when_cooling() {
        let mut cfg = config_125k();
        cfg.b_grid = grid(1.0, 22.0, 0.1);
        cfg.rabi_ratio = -300.0;
        let rows: Vec<TemperatureRow> = [175.0, 255.0]
            .iter()
            .map(|t| TemperatureRow { temperature: *t, rates: rates_125k(), rabi_ratio: -300.0 })
            .collect();
        let spectra = spectrum_vs_t(&cfg, &rows, (1.0, 22.0), 0).unwrap();
        // position of the strongest (most negative) low-field ES dip
        let dip_pos = |s: &Spectrum| -> f64 {
            let mut best = (0usize, f64::MAX);
            for (i, y) in s.y.iter().enumerate() {
                if s.x[i] < 12.0 && *y < best.1 {
                    best = (i, *y);
                }
            }
            s.x[best.0]
        };
        let cold = dip_pos(&spectra[0]);
        let warm = dip_pos(&spectra[1]);
        assert!(cold < warm, "ES dip should shift to lower field when cooling: {cold} vs {warm}");
    }

    #[test]
    fn identical_rows_give_identical_spectra_when_slope_is_zero() {
        let mut cfg = config_125k();
        cfg.b_grid = grid(15.5, 18.0, 0.25);
        cfg.zfs.slope = 0.0;
        let row = |t: f64| TemperatureRow { temperature: t, rates: rates_125k(), rabi_ratio: -300.0 };
        let spectra = spectrum_vs_t(&cfg, &[row(150.0), row(280.0)], (15.5, 18.0), 0).unwrap();
        assert_eq!(spectra[0].y, spectra[1].y);
    }

    #[test]
    fn grid_refinement_leaves_common_points_unchanged() {
        for model in [SignalModel::Numeric, SignalModel::Analytic] {
            let mut cfg = config_125k();
            cfg.model = model;
            cfg.b_grid = grid(15.5, 17.5, 0.2);
            let coarse = spectrum_vs_b(&cfg).unwrap();
            cfg.b_grid = grid(15.5, 17.5, 0.1);
            let fine = spectrum_vs_b(&cfg).unwrap();
            for (i, x) in coarse.x.iter().enumerate() {
                let j = fine.x.iter().position(|v| v == x).expect("common point");
                assert_eq!(coarse.y[i], fine.y[j], "value changed at B = {x} mT ({model:?})");
            }
        }
    }

    #[test]
    fn seventeen_mt_value_flips_sign_between_255_and_300() {
        // Raw spectrum value at the 17 mT ground-state line: negative (trapping
        // inverted) at 255 K, positive at 300 K with the fit-table-like rows.
        let mut cfg = config_125k();
        cfg.b_grid = grid(16.5, 17.6, 0.02);
        cfg.rabi_g = 0.01;
        let row = |t: f64, ratio: f64, p: f64, g: f64, wg: f64, gg: f64, ge: f64| TemperatureRow {
            temperature: t,
            rabi_ratio: ratio,
            rates: ThreeStateRates {
                pump_p: TAU * p,
                decay_gamma: TAU * g,
                gamma_m1: TAU * g * 1e-3,
                gamma_m2: TAU * g * 1e-3,
                eta: 0.05,
                gamma_g: TAU * gg,
                gamma_e: TAU * ge,
                gamma_m: 0.0,
                w_g: TAU * wg,
            },
        };
        let rows = [
            row(255.0, -350.0, 0.76, 240.0, 9.3, 2.1e-4, 2.1),
            row(300.0, -120.0, 1.0, 250.0, 10.0, 4.6e-4, 4.6),
        ];
        let spectra = spectrum_vs_t(&cfg, &rows, (16.5, 17.6), 0).unwrap();
        let at_17 = |s: &Spectrum| -> f64 {
            let i = s.x.iter().position(|x| (*x - 17.04).abs() < 0.011).unwrap();
            s.y[i]
        };
        assert!(at_17(&spectra[0]) < 0.0, "255 K value {:+e}", at_17(&spectra[0]));
        assert!(at_17(&spectra[1]) > 0.0, "300 K value {:+e}", at_17(&spectra[1]));
    }

    #[test]
    fn area_of_symmetric_lorentzian_window() {
        // single symmetric line: y = A w^2 / ((x-b0)^2 + w^2)
        let (a_amp, b0, w) = (0.3, 10.0, 0.2);
        let xs = grid(10.0 - 20.0 * w, 10.0 + 20.0 * w, 0.002);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| a_amp * w * w / ((x - b0) * (x - b0) + w * w))
            .collect();
        let s = Spectrum::from_columns(xs, ys).unwrap();
        let rep = resonance_areas(&s, &[(b0 - 20.0 * w, b0 + 20.0 * w)]).unwrap();
        let want = std::f64::consts::PI * a_amp * w;
        assert!(
            (rep.areas[0] - want).abs() / want < 0.04,
            "area {} vs pi*A*w {}",
            rep.areas[0],
            want
        );
        assert!(!rep.overlap_warning);
    }

    #[test]
    fn zero_spectrum_zero_areas() {
        let xs = grid(0.0, 10.0, 0.5);
        let n = xs.len();
        let s = Spectrum::from_columns(xs, vec![0.0; n]).unwrap();
        let rep = resonance_areas(&s, &[(1.0, 3.0), (5.0, 7.0)]).unwrap();
        assert!(rep.areas.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn overlapping_windows_flagged() {
        let xs = grid(0.0, 10.0, 0.5);
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = Spectrum::from_columns(xs, ys).unwrap();
        let rep = resonance_areas(&s, &[(1.0, 5.0), (4.0, 8.0)]).unwrap();
        assert!(rep.overlap_warning);
        assert!(resonance_areas(&s, &[(9.0, 11.0)]).is_err());
    }

    #[test]
    fn es_area_dominates_gs_area_at_large_rabi_ratio() {
        let cfg = config_125k();
        let s = spectrum_vs_b(&cfg).unwrap();
        let rep = resonance_areas(
            &s,
            &[(1.5, 8.0), (17.6, 24.0), (15.54, 16.04), (16.79, 17.29)],
        )
        .unwrap();
        let es = rep.areas[0].abs() + rep.areas[1].abs();
        let gs = rep.areas[2].abs() + rep.areas[3].abs();
        assert!(es / gs >= 10.0, "ES/GS area ratio {}", es / gs);
    }
}
