//! CODATA 2018 physical constants in SI units.

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum electric permittivity (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_813e-12;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_067e-27;

pub use std::f64::consts::PI;

/// Converts a frequency in MHz (Ω/2π) to an angular frequency in rad/s.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

/// Converts an angular frequency in rad/s to MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}
