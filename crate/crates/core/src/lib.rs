//! Simulation and analysis toolkit for acoustically driven spin resonance in
//! high-spin (S = 3/2) colour centres.
//!
//! The crate computes spin-3/2 level structures versus magnetic field and
//! temperature ([`levels`]), solves the coupled ground-/excited-state
//! pseudospin dynamics of an optically pumped centre ([`twostate`],
//! [`threestate`]), composes full spin-acoustic resonance spectra
//! ([`spectra`]), and fits spectra with sums of Fano-like resonance lines
//! ([`fanofit`]).
//!
//! Unit conventions: level energies are E/h in MHz and magnetic fields in mT;
//! the dynamical modules work in angular frequency (rad/us) and rates in 1/us.

pub mod fanofit;
pub mod levels;
pub mod linalg;
pub mod parallel;
pub mod spectra;
pub mod threestate;
pub mod twostate;

pub use fanofit::{FanoResonance, FitResult};
pub use levels::{
    HamiltonianParams, LevelSet, ResonanceField, SpinMatrices, SpinProjection, Transition,
    ZfsTemperatureModel, MU_B_MHZ_PER_MT,
};
pub use spectra::{BroadeningMode, SignalModel, Spectrum, SpectrumConfig, TransitionPair};
pub use threestate::{ThreeStateRates, ThreeStateState};
pub use twostate::{DrivePair, SpinState, TwoStateRates};

/// 2*pi, the MHz to rad/us conversion factor.
pub const TAU: f64 = std::f64::consts::TAU;

/// Converts an ordinary frequency in MHz to an angular frequency in rad/us.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Converts an angular frequency in rad/us to an ordinary frequency in MHz.
pub fn rad_per_us_to_mhz(omega: f64) -> f64 {
    omega / TAU
}
