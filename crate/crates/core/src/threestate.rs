//! Optically detected model with ground, excited and metastable states.
//!
//! Spin-dependent shelving from the ES into the MS (selectivity `eta`)
//! polarizes the spin under continuous pumping and makes the
//! photoluminescence depend on the spin polarization. The module provides
//! steady-state populations and polarizations, the PL intensity, the relative
//! PL change under drive (numeric and closed-form), and the GS linewidth
//! formulas including the trapping-induced narrowing.
//!
//! Rates are 1/us; `w_g` (inhomogeneous GS broadening) is rad/us and acts as
//! additional dephasing of the transverse GS spin.

use crate::linalg::{solve_dense, LinalgError};
use crate::twostate::DrivePair;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThreeStateError {
    #[error("degenerate optical network: all transfer rates vanish")]
    DegenerateNetwork,
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Substitute for a metastable spin relaxation rate of exactly zero, keeping
/// the steady-state system nonsingular.
pub const GAMMA_M_FLOOR: f64 = 1e-9;

/// Optical and spin rates of the three-state model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeStateRates {
    /// Optical pumping rate P (GS -> ES), 1/us.
    pub pump_p: f64,
    /// Radiative ES -> GS decay rate Gamma, 1/us.
    pub decay_gamma: f64,
    /// ES -> MS shelving rate Gamma_m1, 1/us.
    pub gamma_m1: f64,
    /// MS -> GS return rate Gamma_m2, 1/us.
    pub gamma_m2: f64,
    /// Dimensionless spin selectivity of the shelving step; |eta| << 1.
    pub eta: f64,
    /// GS spin relaxation rate, 1/us.
    pub gamma_g: f64,
    /// ES spin relaxation rate, 1/us.
    pub gamma_e: f64,
    /// MS spin relaxation rate, 1/us.
    pub gamma_m: f64,
    /// Inhomogeneous GS broadening, rad/us.
    pub w_g: f64,
}

impl ThreeStateRates {
    /// Validates signs and returns soft warnings (large `eta`).
    pub fn validate(&self) -> Result<Vec<String>, ThreeStateError> {
        let fields = [
            ("pump_p", self.pump_p),
            ("decay_gamma", self.decay_gamma),
            ("gamma_m1", self.gamma_m1),
            ("gamma_m2", self.gamma_m2),
            ("gamma_g", self.gamma_g),
            ("gamma_e", self.gamma_e),
            ("gamma_m", self.gamma_m),
            ("w_g", self.w_g),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) {
                return Err(ThreeStateError::InvalidRates(format!("{name} must be >= 0, got {v}")));
            }
        }
        let mut warnings = Vec::new();
        if self.eta.abs() > 0.2 {
            warnings.push(format!(
                "spin selectivity eta = {} exceeds 0.2; the perturbative shelving model assumes |eta| << 1",
                self.eta
            ));
        }
        Ok(warnings)
    }

    fn gamma_m_effective(&self) -> f64 {
        if self.gamma_m == 0.0 { GAMMA_M_FLOOR } else { self.gamma_m }
    }
}

/// Occupancies and spin polarizations of the three electronic states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeStateState {
    pub n_g: f64,
    pub n_e: f64,
    pub n_m: f64,
    pub s_g: [f64; 3],
    pub s_e: [f64; 3],
    pub s_m: [f64; 3],
}

/// ES population of the closed pumping cycle at eta = 0, total normalized
/// to 1: N_e = Gm2 P / (Gm1 (Gm2 + P) + Gm2 (Gamma + P)).
pub fn excited_population_eta0(r: &ThreeStateRates) -> Result<f64, ThreeStateError> {
    if r.pump_p == 0.0 {
        return Ok(0.0);
    }
    let den = r.gamma_m1 * (r.gamma_m2 + r.pump_p) + r.gamma_m2 * (r.decay_gamma + r.pump_p);
    if den == 0.0 {
        return Err(ThreeStateError::DegenerateNetwork);
    }
    Ok(r.gamma_m2 * r.pump_p / den)
}

/// Steady-state populations (n_g, n_e, n_m) including the O(eta) spin
/// feedback on the populations; no drive.
pub fn populations_steady(r: &ThreeStateRates) -> Result<(f64, f64, f64), ThreeStateError> {
    let zero_drive = DrivePair {
        omega_z_g: 0.0,
        omega_z_e: 0.0,
        omega_r_g: 0.0,
        omega_r_e: 0.0,
        omega: 0.0,
    };
    let s = spins_steady(r, &zero_drive)?;
    Ok((s.n_g, s.n_e, s.n_m))
}

/// Steady state of the coupled population/spin system of one GS/ES pseudospin
/// pair with spin-dependent shelving.
///
/// The spin sector is driven by the fixed generation terms
/// G_e = -1/2 eta Gm1 N_e0 z and G_m = +1/2 eta Gm1 N_e0 z built from the
/// eta = 0 excited population; the population sector carries the
/// 2 eta Gm1 S_e^z feedback. The metastable state is far off-resonance, so
/// its transverse spin components are clamped to zero and a gamma_m of
/// exactly zero is regularized to [`GAMMA_M_FLOOR`].
pub fn spins_steady(r: &ThreeStateRates, d: &DrivePair) -> Result<ThreeStateState, ThreeStateError> {
    spins_steady_with(r, d, true)
}

/// Like [`spins_steady`] with an explicit far-off-resonance flag for the
/// metastable transverse spin. With `ms_far_off_resonance = false` the
/// transverse MS components evolve with no MS splitting instead of being
/// clamped.
pub fn spins_steady_with(
    r: &ThreeStateRates,
    d: &DrivePair,
    ms_far_off_resonance: bool,
) -> Result<ThreeStateState, ThreeStateError> {
    r.validate()?;
    if r.pump_p == 0.0 && r.decay_gamma == 0.0 && r.gamma_m1 == 0.0 && r.gamma_m2 == 0.0 {
        return Err(ThreeStateError::DegenerateNetwork);
    }
    let ne0 = excited_population_eta0(r)?;
    let source = 0.5 * r.eta * r.gamma_m1 * ne0;
    let gm = r.gamma_m_effective();

    // Unknowns: [n_g, n_e, n_m, sgx, sgy, sgz, sex, sey, sez, smx, smy, smz]
    const N: usize = 12;
    const SG: usize = 3;
    const SE: usize = 6;
    const SM: usize = 9;
    let mut m = vec![0.0; N * N];
    let mut b = vec![0.0; N];
    let set = |mat: &mut Vec<f64>, row: usize, col: usize, v: f64| {
        mat[row * N + col] += v;
    };

    // Population sector.
    // Row 0: normalization n_g + n_e + n_m = 1 (the three balance rows sum
    // to zero, so one is redundant).
    set(&mut m, 0, 0, 1.0);
    set(&mut m, 0, 1, 1.0);
    set(&mut m, 0, 2, 1.0);
    b[0] = 1.0;
    // Row 1: ES balance, with the spin feedback 2 eta Gm1 sez.
    set(&mut m, 1, 1, -(r.decay_gamma + r.gamma_m1));
    set(&mut m, 1, 0, r.pump_p);
    set(&mut m, 1, SE + 2, -2.0 * r.eta * r.gamma_m1);
    // Row 2: MS balance.
    set(&mut m, 2, 1, r.gamma_m1);
    set(&mut m, 2, SE + 2, 2.0 * r.eta * r.gamma_m1);
    set(&mut m, 2, 2, -r.gamma_m2);

    let cross = |mat: &mut Vec<f64>, row: usize, col: usize, omega: [f64; 3]| {
        mat[row * N + col + 1] += -omega[2];
        mat[row * N + col + 2] += omega[1];
        mat[(row + 1) * N + col] += omega[2];
        mat[(row + 1) * N + col + 2] += -omega[0];
        mat[(row + 2) * N + col] += -omega[1];
        mat[(row + 2) * N + col + 1] += omega[0];
    };
    let diag3 = |mat: &mut Vec<f64>, row: usize, col: usize, v: f64| {
        for k in 0..3 {
            mat[(row + k) * N + col + k] += v;
        }
    };

    let og = [d.omega_r_g, 0.0, d.detuning_g()];
    let oe = [d.omega_r_e, 0.0, d.detuning_e()];

    // GS spin rows: Og x s_g - (gamma_g + P) s_g - W_g s_g(transverse)
    //               + Gamma s_e + Gm2 s_m = 0
    cross(&mut m, SG, SG, og);
    diag3(&mut m, SG, SG, -(r.gamma_g + r.pump_p));
    set(&mut m, SG, SG, -r.w_g);
    set(&mut m, SG + 1, SG + 1, -r.w_g);
    diag3(&mut m, SG, SE, r.decay_gamma);
    diag3(&mut m, SG, SM, r.gamma_m2);

    // ES spin rows: Oe x s_e - (gamma_e + Gamma + Gm1) s_e + P s_g = G_e
    cross(&mut m, SE, SE, oe);
    diag3(&mut m, SE, SE, -(r.gamma_e + r.decay_gamma + r.gamma_m1));
    diag3(&mut m, SE, SG, r.pump_p);
    b[SE + 2] = source; // moves -G_e to the rhs

    // MS spin rows.
    if ms_far_off_resonance {
        // transverse components clamped to zero
        set(&mut m, SM, SM, 1.0);
        set(&mut m, SM + 1, SM + 1, 1.0);
    } else {
        // no MS splitting: plain relaxation fed by the shelving transfer
        set(&mut m, SM, SM, -(gm + r.gamma_m2));
        set(&mut m, SM, SE, r.gamma_m1);
        set(&mut m, SM + 1, SM + 1, -(gm + r.gamma_m2));
        set(&mut m, SM + 1, SE + 1, r.gamma_m1);
    }
    // z component: -(gamma_m + Gm2) smz + Gm1 sez = -G_m
    set(&mut m, SM + 2, SM + 2, -(gm + r.gamma_m2));
    set(&mut m, SM + 2, SE + 2, r.gamma_m1);
    b[SM + 2] = -source;

    let x = solve_dense(&mut m, &mut b, N)?;
    Ok(ThreeStateState {
        n_g: x[0],
        n_e: x[1],
        n_m: x[2],
        s_g: [x[SG], x[SG + 1], x[SG + 2]],
        s_e: [x[SE], x[SE + 1], x[SE + 2]],
        s_m: [x[SM], x[SM + 1], x[SM + 2]],
    })
}

/// Photoluminescence intensity Gamma * n_e, 1/us.
pub fn pl_intensity(state: &ThreeStateState, r: &ThreeStateRates) -> f64 {
    r.decay_gamma * state.n_e
}

/// Relative PL change (I_on - I_off) / I_off from two full steady-state
/// solves, with and without the drive amplitudes.
pub fn odmr_signal_numeric(r: &ThreeStateRates, d: &DrivePair) -> Result<f64, ThreeStateError> {
    let off_drive = DrivePair { omega_r_g: 0.0, omega_r_e: 0.0, ..*d };
    let on = spins_steady(r, d)?;
    let off = spins_steady(r, &off_drive)?;
    let i_off = pl_intensity(&off, r);
    if i_off == 0.0 {
        return Err(ThreeStateError::InvalidRates(
            "PL intensity vanishes without drive; no reference for the relative change".into(),
        ));
    }
    Ok((pl_intensity(&on, r) - i_off) / i_off)
}

/// Closed-form ODMR signal, quadratic in the Rabi amplitudes, derived for
/// gamma_m = 0 and vanishing shelving rates. The overall eta^2-proportional
/// normalization is left open; callers compare shapes after a one-point
/// calibration.
pub fn odmr_signal_analytic(r: &ThreeStateRates, d: &DrivePair) -> f64 {
    let dg = d.detuning_g();
    let de = d.detuning_e();
    let p = r.pump_p;
    let big_g = r.decay_gamma;
    let ge = r.gamma_e;
    let gg = r.gamma_g;
    let wg = r.w_g;
    let org = d.omega_r_g;
    let ore = d.omega_r_e;

    let a = gg + wg;
    let c1 = big_g + ge;
    let c2 = c1 * a + ge * p;

    let pref_den = (gg * c1 + ge * p).powi(2);
    let main_den = de * de * (dg * dg + (a + p) * (a + p))
        + 2.0 * de * dg * big_g * p
        + dg * dg * c1 * c1
        + c2 * c2;

    let bracket = ge * p * org * org * (de * de * (a + p) + c1 * c2)
        + p * org * ore * (ge * (gg + p) - big_g * gg) * (-de * dg + c2)
        - gg * ore * ore * (gg + p) * (dg * dg * c1 + (a + p) * c2);

    r.eta * r.eta * bracket / (pref_den * main_den)
}

/// GS resonance widths (1/us): the gap-dependent width, the well-separated
/// limit, and the fully overlapping (trapping) limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsWidths {
    /// Width at the given GS/ES splitting gap.
    pub coupled: f64,
    /// Far-detuned limit gamma_g + P + W_g.
    pub separated: f64,
    /// Overlapping-resonance limit with the pump broadening suppressed.
    pub cst: f64,
}

fn full_derivative(r: &ThreeStateRates, d: &DrivePair, x: &ThreeStateState) -> ThreeStateState {
    // Exact bilinear coupling: populations feed the spin sources and the
    // spin feeds back on the shelving flux.
    let gm = r.gamma_m_effective();
    let og = [d.omega_r_g, 0.0, d.detuning_g()];
    let oe = [d.omega_r_e, 0.0, d.detuning_e()];
    let cross = |o: [f64; 3], s: [f64; 3]| {
        [
            o[1] * s[2] - o[2] * s[1],
            o[2] * s[0] - o[0] * s[2],
            o[0] * s[1] - o[1] * s[0],
        ]
    };
    let shelving_flux = r.gamma_m1 * (x.n_e + 2.0 * r.eta * x.s_e[2]);
    let spin_source = 0.5 * r.eta * r.gamma_m1 * x.n_e;

    let pg = cross(og, x.s_g);
    let pe = cross(oe, x.s_e);
    let mut ds_g = [0.0; 3];
    let mut ds_e = [0.0; 3];
    let mut ds_m = [0.0; 3];
    for k in 0..3 {
        ds_g[k] = pg[k] - (r.gamma_g + r.pump_p) * x.s_g[k]
            + r.decay_gamma * x.s_e[k]
            + r.gamma_m2 * x.s_m[k];
        ds_e[k] = pe[k]
            - (r.gamma_e + r.decay_gamma + r.gamma_m1) * x.s_e[k]
            + r.pump_p * x.s_g[k];
        ds_m[k] = -(gm + r.gamma_m2) * x.s_m[k] + r.gamma_m1 * x.s_e[k];
    }
    ds_g[0] -= r.w_g * x.s_g[0];
    ds_g[1] -= r.w_g * x.s_g[1];
    ds_e[2] -= spin_source;
    ds_m[2] += spin_source;

    ThreeStateState {
        n_g: r.decay_gamma * x.n_e - r.pump_p * x.n_g + r.gamma_m2 * x.n_m,
        n_e: -r.decay_gamma * x.n_e - shelving_flux + r.pump_p * x.n_g,
        n_m: shelving_flux - r.gamma_m2 * x.n_m,
        s_g: ds_g,
        s_e: ds_e,
        s_m: ds_m,
    }
}

fn state_axpy(a: &ThreeStateState, f: f64, b: &ThreeStateState) -> ThreeStateState {
    let mut out = *a;
    out.n_g += f * b.n_g;
    out.n_e += f * b.n_e;
    out.n_m += f * b.n_m;
    for k in 0..3 {
        out.s_g[k] += f * b.s_g[k];
        out.s_e[k] += f * b.s_e[k];
        out.s_m[k] += f * b.s_m[k];
    }
    out
}

/// Fixed-step RK4 integration of the full 12-dimensional population/spin
/// system (exact bilinear shelving coupling, no steady-state linearization).
pub fn time_evolution(
    r: &ThreeStateRates,
    d: &DrivePair,
    x0: &ThreeStateState,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, ThreeStateState)>, ThreeStateError> {
    if !(dt > 0.0) {
        return Err(ThreeStateError::InvalidRates("dt must be > 0".into()));
    }
    let scale = [
        r.pump_p,
        r.decay_gamma,
        r.gamma_m1,
        r.gamma_m2,
        r.gamma_g,
        r.gamma_e,
        r.gamma_m,
        r.w_g,
        d.detuning_g().abs() + d.omega_r_g.abs(),
        d.detuning_e().abs() + d.omega_r_e.abs(),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    if dt * scale >= 0.1 {
        return Err(ThreeStateError::InvalidRates(format!(
            "time step {dt} us violates the stability bound {} us",
            0.1 / scale.max(f64::MIN_POSITIVE)
        )));
    }
    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = *x0;
    out.push((0.0, x));
    for k in 0..steps {
        let k1 = full_derivative(r, d, &x);
        let k2 = full_derivative(r, d, &state_axpy(&x, dt / 2.0, &k1));
        let k3 = full_derivative(r, d, &state_axpy(&x, dt / 2.0, &k2));
        let k4 = full_derivative(r, d, &state_axpy(&x, dt, &k3));
        let mut next = state_axpy(&x, dt / 6.0, &k1);
        next = state_axpy(&next, dt / 3.0, &k2);
        next = state_axpy(&next, dt / 3.0, &k3);
        next = state_axpy(&next, dt / 6.0, &k4);
        x = next;
        out.push(((k + 1) as f64 * dt, x));
    }
    Ok(out)
}

/// GS resonance width versus the GS/ES splitting gap (rad/us).
pub fn gs_width(r: &ThreeStateRates, splitting_gap: f64) -> GsWidths {
    let relax = r.decay_gamma + r.gamma_m1 + r.gamma_e;
    let coupled = r.gamma_g
        + r.pump_p * (1.0 - r.decay_gamma * relax / (splitting_gap * splitting_gap + relax * relax))
        + r.w_g;
    let separated = r.gamma_g + r.pump_p + r.w_g;
    let cst = r.gamma_g + r.pump_p * (r.gamma_m1 + r.gamma_e) / relax + r.w_g;
    GsWidths { coupled, separated, cst }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_rates() -> ThreeStateRates {
        ThreeStateRates {
            pump_p: 1.0,
            decay_gamma: 250.0,
            gamma_m1: 10.0,
            gamma_m2: 5.0,
            eta: 0.02,
            gamma_g: 4.6e-4,
            gamma_e: 4.6,
            gamma_m: 0.0,
            w_g: 0.0,
        }
    }

    fn no_drive() -> DrivePair {
        DrivePair { omega_z_g: 0.0, omega_z_e: 0.0, omega_r_g: 0.0, omega_r_e: 0.0, omega: 0.0 }
    }

    /// Closed-form zero-drive polarizations (S_e^z, S_g^z, S_m^z).
    fn closed_form_polarizations(r: &ThreeStateRates) -> (f64, f64, f64) {
        let gm = if r.gamma_m == 0.0 { GAMMA_M_FLOOR } else { r.gamma_m };
        let (gg, ge, p, big_g, gm1, gm2) =
            (r.gamma_g, r.gamma_e, r.pump_p, r.decay_gamma, r.gamma_m1, r.gamma_m2);
        let ne0 = excited_population_eta0(r).unwrap();
        let den = gg * gm * (big_g + ge + gm1)
            + gg * gm2 * (big_g + ge + gm1)
            + gm * p * (ge + gm1)
            + ge * gm2 * p;
        let f = 0.5 * r.eta * ne0 * gm1 / den;
        (
            -(gg * gm2 + gm * p + gg * gm) * f,
            (ge * gm2 - gm * big_g) * f,
            (gg * big_g + ge * p + gg * ge) * f,
        )
    }

    #[test]
    fn population_two_level_limit() {
        let mut r = table_rates();
        r.gamma_m1 = 0.0;
        r.eta = 0.0;
        let (_, n_e, n_m) = populations_steady(&r).unwrap();
        assert!((n_e - r.pump_p / (r.decay_gamma + r.pump_p)).abs() < 1e-12);
        assert!(n_m.abs() < 1e-12);
    }

    #[test]
    fn population_no_pump() {
        let mut r = table_rates();
        r.pump_p = 0.0;
        let (n_g, n_e, n_m) = populations_steady(&r).unwrap();
        assert!(n_e.abs() < 1e-12);
        assert!(n_m.abs() < 1e-12);
        assert!((n_g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn population_matches_closed_form_at_eta0() {
        let mut r = table_rates();
        r.eta = 0.0;
        let (_, n_e, _) = populations_steady(&r).unwrap();
        let want = excited_population_eta0(&r).unwrap();
        assert!((n_e - want).abs() < 1e-12, "{n_e} vs {want}");
    }

    #[test]
    fn degenerate_network_rejected() {
        let r = ThreeStateRates {
            pump_p: 0.0,
            decay_gamma: 0.0,
            gamma_m1: 0.0,
            gamma_m2: 0.0,
            eta: 0.0,
            gamma_g: 1.0,
            gamma_e: 1.0,
            gamma_m: 1.0,
            w_g: 0.0,
        };
        assert!(matches!(
            spins_steady(&r, &no_drive()),
            Err(ThreeStateError::DegenerateNetwork)
        ));
    }

    #[test]
    fn zero_selectivity_means_zero_spin() {
        let mut r = table_rates();
        r.eta = 0.0;
        let s = spins_steady(&r, &no_drive()).unwrap();
        for v in [s.s_g, s.s_e, s.s_m] {
            for c in v {
                assert!(c.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_drive_polarizations_match_closed_form() {
        for rates in [
            table_rates(),
            ThreeStateRates {
                pump_p: 0.7,
                decay_gamma: 12.0,
                gamma_m1: 3.0,
                gamma_m2: 0.8,
                eta: 0.05,
                gamma_g: 0.01,
                gamma_e: 0.3,
                gamma_m: 0.2,
                w_g: 0.0,
            },
        ] {
            let s = spins_steady(&rates, &no_drive()).unwrap();
            let (sez, sgz, smz) = closed_form_polarizations(&rates);
            let scale = sez.abs().max(sgz.abs()).max(smz.abs());
            assert!((s.s_e[2] - sez).abs() / scale < 1e-8, "sez {} vs {}", s.s_e[2], sez);
            assert!((s.s_g[2] - sgz).abs() / scale < 1e-8, "sgz {} vs {}", s.s_g[2], sgz);
            assert!((s.s_m[2] - smz).abs() / scale < 1e-8, "smz {} vs {}", s.s_m[2], smz);
            // transverse components vanish without drive
            assert!(s.s_g[0].abs() < 1e-15 && s.s_g[1].abs() < 1e-15);
        }
    }

    #[test]
    fn opposite_gs_es_orientation_under_sign_condition() {
        // gamma_m -> 0 makes Gm2/gamma_m arbitrarily large, so the condition
        // Gm2/gamma_m > Gamma/gamma_e holds and GS and ES spins are opposite.
        let r = table_rates();
        let s = spins_steady(&r, &no_drive()).unwrap();
        assert!(s.s_g[2] > 0.0, "GS spin up, got {}", s.s_g[2]);
        assert!(s.s_e[2] < 0.0, "ES spin down, got {}", s.s_e[2]);
    }

    #[test]
    fn pl_intensity_basics() {
        let r = table_rates();
        let mut s = spins_steady(&r, &no_drive()).unwrap();
        s.n_e = 0.0;
        assert_eq!(pl_intensity(&s, &r), 0.0);
        s.n_e = 0.25;
        let base = pl_intensity(&s, &r);
        let doubled = ThreeStateRates { decay_gamma: 2.0 * r.decay_gamma, ..r };
        assert!((pl_intensity(&s, &doubled) - 2.0 * base).abs() < 1e-15);
    }

    #[test]
    fn no_drive_no_signal() {
        let r = table_rates();
        let d = DrivePair { omega_z_g: 100.0, omega_z_e: 160.0, omega_r_g: 0.0, omega_r_e: 0.0, omega: 100.0 };
        assert!(odmr_signal_numeric(&r, &d).unwrap().abs() < 1e-14);
    }

    #[test]
    fn drive_changes_pl_at_second_order_in_eta() {
        let mut r = table_rates();
        let d = DrivePair { omega_z_g: 100.0, omega_z_e: 160.0, omega_r_g: 0.3, omega_r_e: 0.3, omega: 100.0 };
        r.eta = 0.04;
        let s_full = odmr_signal_numeric(&r, &d).unwrap();
        r.eta = 0.02;
        let s_half = odmr_signal_numeric(&r, &d).unwrap();
        let ratio = s_full / s_half;
        assert!((ratio - 4.0).abs() < 0.04, "eta^2 scaling ratio {ratio}");
    }

    #[test]
    fn signal_signs_for_far_detuned_resonances() {
        let r = table_rates(); // gamma_m = 0 satisfies the sign condition
        let far = 1e6;
        let gs_drive = DrivePair {
            omega_z_g: 500.0,
            omega_z_e: 500.0 + far,
            omega_r_g: 0.2,
            omega_r_e: 0.2,
            omega: 500.0,
        };
        assert!(odmr_signal_numeric(&r, &gs_drive).unwrap() > 0.0);
        let es_drive = DrivePair { omega: 500.0 + far, ..gs_drive };
        assert!(odmr_signal_numeric(&r, &es_drive).unwrap() < 0.0);
    }

    #[test]
    fn analytic_no_drive_is_zero() {
        let r = table_rates();
        let d = DrivePair { omega_z_g: 10.0, omega_z_e: 20.0, omega_r_g: 0.0, omega_r_e: 0.0, omega: 11.0 };
        assert_eq!(odmr_signal_analytic(&r, &d), 0.0);
    }

    #[test]
    fn analytic_sign_far_detuned_es() {
        let r = table_rates();
        let d = DrivePair {
            omega_z_g: 100.0,
            omega_z_e: 100.0 + 1e7,
            omega_r_g: 0.05,
            omega_r_e: 0.05,
            omega: 100.0,
        };
        assert!(odmr_signal_analytic(&r, &d) > 0.0);
    }

    #[test]
    fn analytic_even_under_detuning_reflection() {
        let r = table_rates();
        let base = DrivePair { omega_z_g: 100.0, omega_z_e: 130.0, omega_r_g: 0.1, omega_r_e: -0.7, omega: 0.0 };
        for w in [95.0, 104.0, 121.0] {
            let d = DrivePair { omega: w, ..base };
            let refl = DrivePair {
                omega_z_g: 2.0 * w - base.omega_z_g,
                omega_z_e: 2.0 * w - base.omega_z_e,
                omega: w,
                ..base
            };
            let a = odmr_signal_analytic(&r, &d);
            let b = odmr_signal_analytic(&r, &refl);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn analytic_matches_numeric_shape() {
        // Vanishing shelving limit of the closed form: small Gm1 = Gm2.
        let r = ThreeStateRates {
            pump_p: 1.0,
            decay_gamma: 100.0,
            gamma_m1: 0.1,
            gamma_m2: 0.1,
            eta: 0.05,
            gamma_g: 0.002,
            gamma_e: 0.5,
            gamma_m: 0.0,
            w_g: 2.0,
        };
        let widths = gs_width(&r, 0.0).separated;
        let gap = 3.0 * widths;
        let base = DrivePair {
            omega_z_g: 1000.0,
            omega_z_e: 1000.0 + gap,
            omega_r_g: 0.01,
            omega_r_e: -0.05,
            omega: 0.0,
        };
        let n = 161;
        let mut analytic = Vec::with_capacity(n);
        let mut numeric = Vec::with_capacity(n);
        for i in 0..n {
            let w = 1000.0 - 10.0 * widths + 20.0 * widths * i as f64 / (n - 1) as f64;
            let d = DrivePair { omega: w, ..base };
            analytic.push(odmr_signal_analytic(&r, &d));
            numeric.push(odmr_signal_numeric(&r, &d).unwrap());
        }
        let i_max = (0..n)
            .max_by(|&a, &b| analytic[a].abs().partial_cmp(&analytic[b].abs()).unwrap())
            .unwrap();
        let scale = numeric[i_max] / analytic[i_max];
        let peak = numeric.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0_f64;
        for i in 0..n {
            worst = worst.max((analytic[i] * scale - numeric[i]).abs() / peak);
        }
        assert!(worst < 0.02, "max shape deviation {worst}");
    }

    #[test]
    fn width_formula_limits() {
        let r = table_rates();
        let w = gs_width(&r, 1e9);
        assert!((w.coupled - w.separated).abs() < 1e-9);
        let w0 = gs_width(&r, 0.0);
        assert!((w0.coupled - w0.cst).abs() < 1e-15);
        assert!(w0.cst < w0.separated);
    }

    #[test]
    fn width_formula_example_value() {
        let r = ThreeStateRates {
            pump_p: 1.0,
            decay_gamma: 250.0,
            gamma_m1: 0.0,
            gamma_m2: 5.0,
            eta: 0.02,
            gamma_g: 0.0,
            gamma_e: 4.6,
            gamma_m: 0.0,
            w_g: 10.0,
        };
        let w = gs_width(&r, 0.0);
        assert!((w.cst - (10.0 + 4.6 / 254.6)).abs() < 1e-6, "{}", w.cst);
    }

    #[test]
    fn width_monotone_in_gap_and_bounded() {
        let r = table_rates();
        let mut prev = gs_width(&r, 0.0).coupled;
        let w0 = gs_width(&r, 0.0);
        for k in 1..60 {
            let gap = k as f64 * 25.0;
            let w = gs_width(&r, gap).coupled;
            assert!(w >= prev - 1e-12, "width not monotone at gap {gap}");
            assert!(w >= w0.cst - 1e-12 && w <= w0.separated + 1e-12);
            prev = w;
        }
    }

    #[test]
    fn time_evolution_conserves_population() {
        let r = table_rates();
        let d = DrivePair { omega_z_g: 10.0, omega_z_e: 14.0, omega_r_g: 0.4, omega_r_e: -1.0, omega: 11.0 };
        let x0 = ThreeStateState {
            n_g: 0.8,
            n_e: 0.15,
            n_m: 0.05,
            s_g: [0.0, 0.0, 0.1],
            s_e: [0.0; 3],
            s_m: [0.0; 3],
        };
        let traj = time_evolution(&r, &d, &x0, 2.0, 2e-4).unwrap();
        for (_, x) in traj.iter().step_by(500) {
            assert!((x.n_g + x.n_e + x.n_m - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn eta_warning_threshold() {
        let mut r = table_rates();
        r.eta = 0.5;
        let warnings = r.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        r.eta = 0.05;
        assert!(r.validate().unwrap().is_empty());
    }
}
