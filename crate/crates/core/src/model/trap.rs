use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static end-electrode confinement along the trap axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialConfinement {
    /// End-electrode voltage (V).
    pub v_end: f64,
    /// Geometric loss factor in (0, 1].
    pub kappa: f64,
    /// Axial length scale (m).
    pub z0: f64,
}

impl AxialConfinement {
    pub fn new(v_end: f64, kappa: f64, z0: f64) -> Result<Self> {
        if !(v_end.is_finite() && v_end >= 0.0) {
            return Err(Error::invalid("axial.v_end", "must be >= 0"));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::invalid("axial.kappa", "must lie in (0, 1]"));
        }
        if !(z0.is_finite() && z0 > 0.0) {
            return Err(Error::invalid("axial.z0", "must be > 0"));
        }
        Ok(AxialConfinement { v_end, kappa, z0 })
    }

    /// Effective axial voltage κ·V_end.
    pub fn strength(&self) -> f64 {
        self.kappa * self.v_end
    }
}

/// An ideal linear 2k-pole RF trap. All fields are SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTrap {
    k: u32,
    r0: f64,
    v0: f64,
    omega: f64,
    us: f64,
    rf_phase: f64,
    axial: Option<AxialConfinement>,
}

impl LinearTrap {
    /// `k` pole pairs, inscribed radius `r0` (m), RF amplitude `v0` (V),
    /// RF angular frequency `omega` (rad/s).
    pub fn new(k: u32, r0: f64, v0: f64, omega: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("trap.k", "pole-pair count must be >= 2"));
        }
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::invalid("trap.r0", "must be > 0"));
        }
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(Error::invalid("trap.v0", "must be >= 0"));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid("trap.omega", "must be > 0"));
        }
        Ok(LinearTrap { k, r0, v0, omega, us: 0.0, rf_phase: 0.0, axial: None })
    }

    pub fn with_static_offset(mut self, us: f64) -> Result<Self> {
        if !us.is_finite() {
            return Err(Error::invalid("trap.us", "must be finite"));
        }
        self.us = us;
        Ok(self)
    }

    pub fn with_axial(mut self, axial: AxialConfinement) -> Self {
        self.axial = Some(axial);
        self
    }

    pub fn without_axial(mut self) -> Self {
        self.axial = None;
        self
    }

    /// RF phase φ in the drive −V0/2·cos(Ωt + φ).
    pub fn with_rf_phase(mut self, phase: f64) -> Self {
        self.rf_phase = phase;
        self
    }

    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        let mut t = LinearTrap::new(self.k, self.r0, v0, self.omega)?;
        t.us = self.us;
        t.rf_phase = self.rf_phase;
        t.axial = self.axial;
        Ok(t)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        let mut t = LinearTrap::new(self.k, self.r0, self.v0, omega)?;
        t.us = self.us;
        t.rf_phase = self.rf_phase;
        t.axial = self.axial;
        Ok(t)
    }

    pub fn with_order(&self, k: u32) -> Result<Self> {
        let mut t = LinearTrap::new(k, self.r0, self.v0, self.omega)?;
        t.us = self.us;
        t.rf_phase = self.rf_phase;
        t.axial = self.axial;
        Ok(t)
    }

    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn v0(&self) -> f64 {
        self.v0
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn us(&self) -> f64 {
        self.us
    }
    pub fn rf_phase(&self) -> f64 {
        self.rf_phase
    }
    pub fn axial(&self) -> Option<&AxialConfinement> {
        self.axial.as_ref()
    }

    pub fn is_quadrupole(&self) -> bool {
        self.k == 2
    }

    /// RF period 2π/Ω (s).
    pub fn rf_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub(crate) fn require_quadrupole(&self) -> Result<()> {
        if self.k == 2 {
            Ok(())
        } else {
            Err(Error::QuadrupoleOnly { k: self.k })
        }
    }

    pub(crate) fn require_multipole(&self) -> Result<()> {
        if self.k >= 3 {
            Ok(())
        } else {
            Err(Error::MultipoleOnly { k: self.k })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_invariants() {
        assert!(LinearTrap::new(1, 0.01, 100.0, 1e6).is_err());
        assert!(LinearTrap::new(2, 0.0, 100.0, 1e6).is_err());
        assert!(LinearTrap::new(2, 0.01, -1.0, 1e6).is_err());
        assert!(LinearTrap::new(2, 0.01, 100.0, 0.0).is_err());
        assert!(LinearTrap::new(2, 0.01, 0.0, 1e6).is_ok());
        assert!(AxialConfinement::new(10.0, 0.0, 0.01).is_err());
        assert!(AxialConfinement::new(10.0, 1.5, 0.01).is_err());
        assert!(AxialConfinement::new(-1.0, 0.5, 0.01).is_err());
        assert!(AxialConfinement::new(10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn modifiers_keep_other_fields() {
        let ax = AxialConfinement::new(10.0, 0.2, 0.01).unwrap();
        let t = LinearTrap::new(4, 0.01, 400.0, 1e7)
            .unwrap()
            .with_static_offset(2.0)
            .unwrap()
            .with_axial(ax);
        let t2 = t.with_v0(800.0).unwrap().with_omega(2e7).unwrap();
        assert_eq!(t2.us(), 2.0);
        assert_eq!(t2.axial(), Some(&ax));
        assert_eq!(t2.k(), 4);
    }
}
