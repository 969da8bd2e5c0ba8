//! Shared fixtures for the criterion benchmarks.

use cstsim_core::levels::ZfsTemperatureModel;
use cstsim_core::spectra::{BroadeningMode, SignalModel, SpectrumConfig, TransitionPair};
use cstsim_core::threestate::ThreeStateRates;
use cstsim_core::TAU;

pub fn zfs() -> ZfsTemperatureModel {
    ZfsTemperatureModel { two_d_g: 70.0, two_d_e_ref: 430.0, slope: 2.1, t_ref: 300.0 }
}

pub fn rates() -> ThreeStateRates {
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

pub fn spectrum_config(points: usize, model: SignalModel) -> SpectrumConfig {
    SpectrumConfig {
        temperature: 125.0,
        f_drive_mhz: 921.0,
        b_axis: [0.0, 1.0, 0.0],
        b_grid: (0..points).map(|i| 14.0 + 4.0 * i as f64 / (points - 1) as f64).collect(),
        transitions: TransitionPair::default_pairs(),
        rabi_g: 0.02,
        rabi_ratio: -460.0,
        rates: rates(),
        zfs: zfs(),
        g_factor: 2.0,
        model,
        broadening: BroadeningMode::Additive,
    }
}
