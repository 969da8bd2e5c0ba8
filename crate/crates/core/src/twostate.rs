//! Pseudospin-1/2 model of one ground-state/excited-state transition pair
//! driven by a common oscillating field: rotating-frame effective fields,
//! steady-state and time-domain spin dynamics, the normalized spin-resonance
//! signal R, closed-form resonance limits, and the coherent-spin-trapping
//! (CST) condition.
//!
//! All frequencies are angular (rad/us), all rates are 1/us. Rabi amplitudes
//! are rotating-frame amplitudes after the rotating-wave approximation and
//! may be negative (a relative phase of pi between GS and ES driving).

use crate::linalg::{solve_dense, LinalgError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TwoStateError {
    #[error("coherent spin trapping is undefined for equal Rabi amplitudes")]
    UndefinedCst,
    #[error("trap-axis angle is undefined for equal Zeeman splittings")]
    EqualSplittings,
    #[error("invalid rates: {0}")]
    InvalidRates(&'static str),
    #[error("time step {dt} us violates the stability bound {limit} us")]
    StepSizeRejected { dt: f64, limit: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Drive parameters of one GS/ES pseudospin pair.
///
/// `omega_z_g`/`omega_z_e` are the Zeeman splittings of the pair in the two
/// electronic states, `omega_r_g`/`omega_r_e` the signed Rabi amplitudes, and
/// `omega` the drive frequency; everything in rad/us.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivePair {
    pub omega_z_g: f64,
    pub omega_z_e: f64,
    pub omega_r_g: f64,
    pub omega_r_e: f64,
    pub omega: f64,
}

impl DrivePair {
    pub fn detuning_g(&self) -> f64 {
        self.omega_z_g - self.omega
    }

    pub fn detuning_e(&self) -> f64 {
        self.omega_z_e - self.omega
    }
}

/// Optical and spin rates of the two-state model, 1/us.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStateRates {
    /// Optical pumping rate P (GS -> ES).
    pub pump_p: f64,
    /// ES decay rate Gamma (ES -> GS).
    pub decay_gamma: f64,
    /// Spin relaxation rate gamma, common to both states.
    pub spin_gamma: f64,
    /// Phenomenological z-directed spin pumping rate Sigma, fed into the GS.
    pub pump_sigma: f64,
}

impl TwoStateRates {
    fn check_steady(&self) -> Result<(), TwoStateError> {
        if !(self.spin_gamma > 0.0) {
            return Err(TwoStateError::InvalidRates("spin relaxation gamma must be > 0"));
        }
        if !(self.pump_p + self.decay_gamma > 0.0) {
            return Err(TwoStateError::InvalidRates("P + Gamma must be > 0"));
        }
        if self.pump_p < 0.0 || self.decay_gamma < 0.0 || self.pump_sigma < 0.0 {
            return Err(TwoStateError::InvalidRates("rates must be non-negative"));
        }
        Ok(())
    }
}

/// Occupancies and pseudospins of the pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    pub s_g: [f64; 3],
    pub s_e: [f64; 3],
    pub n_g: f64,
    pub n_e: f64,
}

/// Static rotating-frame effective fields of GS and ES:
/// (Omega_z - omega) z + Omega_R x.
pub fn effective_fields(d: &DrivePair) -> ([f64; 3], [f64; 3]) {
    (
        [d.omega_r_g, 0.0, d.detuning_g()],
        [d.omega_r_e, 0.0, d.detuning_e()],
    )
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Writes the 3x3 block of the cross-product operator `omega x` into a dense
/// row-major matrix of width `n` at block position (row, col).
fn add_cross_block(m: &mut [f64], n: usize, row: usize, col: usize, omega: [f64; 3]) {
    // (omega x s)_x = omega_y s_z - omega_z s_y, etc.
    m[(row) * n + col + 1] += -omega[2];
    m[(row) * n + col + 2] += omega[1];
    m[(row + 1) * n + col] += omega[2];
    m[(row + 1) * n + col + 2] += -omega[0];
    m[(row + 2) * n + col] += -omega[1];
    m[(row + 2) * n + col + 1] += omega[0];
}

fn add_diag_block(m: &mut [f64], n: usize, row: usize, col: usize, v: f64) {
    for k in 0..3 {
        m[(row + k) * n + col + k] += v;
    }
}

/// Steady state of the coupled GS/ES pseudospin equations.
///
/// Solves the 6x6 linear system for (s_g, s_e) with precession about the
/// static effective fields, exchange Gamma s_e / P s_g, relaxation gamma, and
/// the source Sigma z in the GS equation. Occupancies come from the two-state
/// rate balance n_e / n_g = P / Gamma with n_g + n_e = 1.
pub fn steady_state(d: &DrivePair, r: &TwoStateRates) -> Result<SpinState, TwoStateError> {
    r.check_steady()?;
    let (og, oe) = effective_fields(d);

    const N: usize = 6;
    let mut m = vec![0.0; N * N];
    // GS block rows 0..3
    add_cross_block(&mut m, N, 0, 0, og);
    add_diag_block(&mut m, N, 0, 0, -(r.pump_p + r.spin_gamma));
    add_diag_block(&mut m, N, 0, 3, r.decay_gamma);
    // ES block rows 3..6
    add_cross_block(&mut m, N, 3, 3, oe);
    add_diag_block(&mut m, N, 3, 3, -(r.decay_gamma + r.spin_gamma));
    add_diag_block(&mut m, N, 3, 0, r.pump_p);

    // M s = -source
    let mut b = vec![0.0, 0.0, -r.pump_sigma, 0.0, 0.0, 0.0];
    let x = solve_dense(&mut m, &mut b, N)?;

    let total = r.pump_p + r.decay_gamma;
    Ok(SpinState {
        s_g: [x[0], x[1], x[2]],
        s_e: [x[3], x[4], x[5]],
        n_g: r.decay_gamma / total,
        n_e: r.pump_p / total,
    })
}

/// Normalized spin-resonance signal R = 1 - gamma (s_gz + s_ez) / Sigma at
/// steady state. R is 0 with undisturbed pumping and approaches 1 when the
/// pumped polarization is fully destroyed.
pub fn sr_signal(d: &DrivePair, r: &TwoStateRates) -> Result<f64, TwoStateError> {
    if !(r.pump_sigma > 0.0) {
        return Err(TwoStateError::InvalidRates("Sigma must be > 0 for the SR signal"));
    }
    let s = steady_state(d, r)?;
    Ok(1.0 - r.spin_gamma * (s.s_g[2] + s.s_e[2]) / r.pump_sigma)
}

fn saturation_term(d: &DrivePair, r: &TwoStateRates) -> f64 {
    r.pump_p * r.decay_gamma / (r.decay_gamma + r.pump_p) * d.omega_r_g * d.omega_r_g
        / r.spin_gamma
}

/// Closed-form GS resonance in the well-separated limit (Gamma ~ P >> gamma).
pub fn sr_lorentzian_gs(d: &DrivePair, r: &TwoStateRates) -> f64 {
    let k = saturation_term(d, r);
    let dg = d.detuning_g();
    k / (dg * dg + r.pump_p * r.pump_p + k)
}

/// Closed-form ES resonance in the well-separated limit (Gamma ~ P >> gamma).
pub fn sr_lorentzian_es(d: &DrivePair, r: &TwoStateRates) -> f64 {
    let k = saturation_term(d, r);
    let de = d.detuning_e();
    k / (de * de + r.decay_gamma * r.decay_gamma + k)
}

/// Closed-form SR signal when the GS and ES resonances overlap (weak drive,
/// Gamma, P >> gamma).
pub fn sr_overlap(d: &DrivePair, r: &TwoStateRates) -> f64 {
    let dg = d.detuning_g();
    let de = d.detuning_e();
    let num = dg * d.omega_r_e - de * d.omega_r_g;
    let mix = r.decay_gamma * dg + r.pump_p * de;
    let denom = mix * mix + dg * dg * de * de + num * num;
    let pref = r.decay_gamma * r.pump_p / (r.spin_gamma * (r.decay_gamma + r.pump_p));
    pref * num * num / denom
}

/// Drive frequency at which the GS and ES effective fields are collinear and
/// the spin is trapped:
/// omega_CST = (Oz_g Or_e - Oz_e Or_g) / (Or_e - Or_g).
pub fn cst_frequency(d: &DrivePair) -> Result<f64, TwoStateError> {
    let dr = d.omega_r_e - d.omega_r_g;
    if dr == 0.0 {
        return Err(TwoStateError::UndefinedCst);
    }
    Ok((d.omega_z_g * d.omega_r_e - d.omega_z_e * d.omega_r_g) / dr)
}

/// Small-angle tilt of the trapped spin axis from z:
/// theta_CST = (Or_e - Or_g) / (Oz_e - Oz_g).
pub fn cst_angle(d: &DrivePair) -> Result<f64, TwoStateError> {
    let dz = d.omega_z_e - d.omega_z_g;
    if dz == 0.0 {
        return Err(TwoStateError::EqualSplittings);
    }
    Ok((d.omega_r_e - d.omega_r_g) / dz)
}

/// Depth of the SR dip at the CST frequency, sin^2 of the exact trap-axis
/// angle: (dOr)^2 / ((dOz)^2 + (dOr)^2).
pub fn cst_dip_depth(d: &DrivePair) -> f64 {
    let dz = d.omega_z_e - d.omega_z_g;
    let dr = d.omega_r_e - d.omega_r_g;
    dr * dr / (dz * dz + dr * dr)
}

/// Motional-narrowing style dephasing rate of the randomly switching spin:
/// [(dOz)^2 + (dOr)^2] / (Gamma + P).
pub fn dephasing_rate(d: &DrivePair, r: &TwoStateRates) -> f64 {
    let dz = d.omega_z_e - d.omega_z_g;
    let dr = d.omega_r_e - d.omega_r_g;
    (dz * dz + dr * dr) / (r.decay_gamma + r.pump_p)
}

fn derivative(d: &DrivePair, r: &TwoStateRates, s: &SpinState) -> SpinState {
    let (og, oe) = effective_fields(d);
    let pg = cross(og, s.s_g);
    let pe = cross(oe, s.s_e);
    let mut ds_g = [0.0; 3];
    let mut ds_e = [0.0; 3];
    for k in 0..3 {
        ds_g[k] = pg[k] + r.decay_gamma * s.s_e[k] - (r.pump_p + r.spin_gamma) * s.s_g[k];
        ds_e[k] = pe[k] + r.pump_p * s.s_g[k] - (r.decay_gamma + r.spin_gamma) * s.s_e[k];
    }
    ds_g[2] += r.pump_sigma;
    SpinState {
        s_g: ds_g,
        s_e: ds_e,
        n_g: r.decay_gamma * s.n_e - r.pump_p * s.n_g,
        n_e: r.pump_p * s.n_g - r.decay_gamma * s.n_e,
    }
}

fn axpy(a: &SpinState, f: f64, b: &SpinState) -> SpinState {
    let mut out = *a;
    for k in 0..3 {
        out.s_g[k] += f * b.s_g[k];
        out.s_e[k] += f * b.s_e[k];
    }
    out.n_g += f * b.n_g;
    out.n_e += f * b.n_e;
    out
}

/// Fixed-step classical 4th-order Runge-Kutta integration of the coupled
/// population/spin equations in the rotating frame.
///
/// Returns the trajectory sampled at every step, starting with `s0` at t = 0.
/// The step must satisfy dt * max(rates, field magnitudes) < 0.1.
pub fn time_evolution(
    d: &DrivePair,
    r: &TwoStateRates,
    s0: &SpinState,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, SpinState)>, TwoStateError> {
    if !(dt > 0.0) {
        return Err(TwoStateError::InvalidRates("dt must be > 0"));
    }
    let (og, oe) = effective_fields(d);
    let scale = [
        r.pump_p,
        r.decay_gamma,
        r.spin_gamma,
        (og[0] * og[0] + og[2] * og[2]).sqrt(),
        (oe[0] * oe[0] + oe[2] * oe[2]).sqrt(),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    if dt * scale >= 0.1 {
        return Err(TwoStateError::StepSizeRejected { dt, limit: 0.1 / scale.max(f64::MIN_POSITIVE) });
    }

    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = *s0;
    out.push((0.0, s));
    for k in 0..steps {
        let k1 = derivative(d, r, &s);
        let k2 = derivative(d, r, &axpy(&s, dt / 2.0, &k1));
        let k3 = derivative(d, r, &axpy(&s, dt / 2.0, &k2));
        let k4 = derivative(d, r, &axpy(&s, dt, &k3));
        let mut next = axpy(&s, dt / 6.0, &k1);
        next = axpy(&next, dt / 3.0, &k2);
        next = axpy(&next, dt / 3.0, &k3);
        next = axpy(&next, dt / 6.0, &k4);
        s = next;
        out.push(((k + 1) as f64 * dt, s));
    }
    Ok(out)
}
