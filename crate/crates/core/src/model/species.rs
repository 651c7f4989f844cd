use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};

/// A trapped particle species.
///
/// Constructed in experimentalist units (elementary charges, atomic mass
/// units); [`IonSpecies::charge`] and [`IonSpecies::mass`] return SI values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    charge_e: f64,
    mass_u: f64,
    label: String,
}

impl IonSpecies {
    pub fn new(charge_e: f64, mass_u: f64, label: impl Into<String>) -> Result<Self> {
        if !charge_e.is_finite() || charge_e == 0.0 {
            return Err(Error::invalid("ion.charge", "charge must be finite and nonzero"));
        }
        if !mass_u.is_finite() || mass_u <= 0.0 {
            return Err(Error::invalid("ion.mass", "mass must be finite and positive"));
        }
        Ok(IonSpecies { charge_e, mass_u, label: label.into() })
    }

    /// Singly charged ⁴⁰Ca⁺ (40 u).
    pub fn calcium40() -> Self {
        IonSpecies { charge_e: 1.0, mass_u: 40.0, label: "Ca+".into() }
    }

    /// Charge in coulombs.
    pub fn charge(&self) -> f64 {
        self.charge_e * ELEMENTARY_CHARGE
    }

    /// Mass in kilograms.
    pub fn mass(&self) -> f64 {
        self.mass_u * ATOMIC_MASS_UNIT
    }

    pub fn charge_e(&self) -> f64 {
        self.charge_e
    }

    pub fn mass_u(&self) -> f64 {
        self.mass_u
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}
