//! Single-ion dynamics: RF and secular trajectories, micromotion, spectra
//! and stability maps.

mod micromotion;
mod spectrum;
mod stability;
mod trajectory;

pub use micromotion::{micromotion_amplitude, rf_initial_state};
pub use spectrum::{
    motional_spectrum, tone_amplitude, Peak, Spectrum, MIN_DOMINANT_PERIODS, MIN_SAMPLES_PER_PERIOD,
};
pub use stability::{
    stability_scan, Axis, ScanMethod, ScanPlane, StabilityCell, StabilityMap, TrajectoryScan,
    Verdict,
};
pub use trajectory::{
    integrate_rf, integrate_secular, propagate_rf, IntegratorControl, MotionModel, PhaseState,
    Trajectory,
};
