//! Domain types and closed-form relations for ideal linear multipole traps.

mod formulas;
mod mathieu;
mod species;
mod trap;

pub use formulas::{
    adiabaticity, axial_frequency_squared, characteristic_energy, coupling_limit,
    coupling_parameter, debye_length, density_for_debye_length, limit_density,
    linear_density_unit, pseudopotential, pseudopotential_frequency, pseudopotential_gradient,
    rf_minimum_radius, secular_frequencies, wigner_seitz_radius, CharacteristicEnergy,
    RadialMinimum, SecularFrequencies,
};
pub(crate) use formulas::complex_pow;
pub use mathieu::{beta_from_aq, mathieu_parameters, MathieuPoint, CF_DEPTH, CF_MAX_ITER, CF_TOLERANCE};
pub use species::IonSpecies;
pub use trap::{AxialConfinement, LinearTrap};

/// Default adiabaticity limit η_lim.
pub const DEFAULT_ETA_LIMIT: f64 = 0.3;
