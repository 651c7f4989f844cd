use serde::{Deserialize, Serialize};

use super::matching::{match_alpha, match_gamma};
use super::profile::{reduced_linear_density, ProfileKind, ProfileOptions, ReducedProfile};
use crate::constants::{BOLTZMANN, PI, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::model::{
    adiabaticity, characteristic_energy, coupling_parameter, debye_length, density_for_debye_length,
    limit_density, linear_density_unit, secular_frequencies, IonSpecies, LinearTrap,
};

/// A reduced profile expressed in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledCloud {
    pub profile: ReducedProfile,
    /// Temperature (K).
    pub temperature: f64,
    /// Central density (m⁻³).
    pub n0: f64,
    /// Debye length at the central density (m).
    pub lambda_d: f64,
    /// Radial size λ_D·ρ_max (m).
    pub radius: f64,
    /// Ions per unit length N/2L (m⁻¹).
    pub linear_density: f64,
    pub trap: LinearTrap,
    pub ion: IonSpecies,
}

impl ScaledCloud {
    pub fn shape(&self) -> f64 {
        self.profile.shape
    }

    /// Coupling parameter Γ at the central density.
    pub fn coupling(&self) -> f64 {
        coupling_parameter(&self.ion, self.temperature, self.n0)
    }

    /// Weakly coupled (Γ < 1) results are only indicative for a fluid model.
    pub fn is_indicative(&self) -> bool {
        self.coupling() < 1.0
    }

    pub fn peak_density(&self) -> f64 {
        self.n0 * self.profile.peak_to_center()
    }

    /// Mean density N/(πR²·2L) over the cloud cross-section.
    pub fn mean_density(&self) -> f64 {
        self.linear_density / (PI * self.radius * self.radius)
    }

    /// Physical radii (m) of the stored profile points.
    pub fn radii(&self) -> Vec<f64> {
        self.profile.rho.iter().map(|r| r * self.lambda_d).collect()
    }

    /// Human-readable caveats about the validity of this result.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(ax) = self.trap.axial() {
            if self.radius > ax.z0 / 10.0 {
                out.push(format!(
                    "cloud radius {:.3e} m exceeds z0/10; the prolate approximation may not hold",
                    self.radius
                ));
            }
        }
        if self.is_indicative() {
            out.push(format!(
                "coupling parameter {:.3e} < 1: warm, dilute sample; result is indicative only",
                self.coupling()
            ));
        }
        out
    }
}

fn finish(profile: ReducedProfile, trap: &LinearTrap, ion: &IonSpecies, temperature: f64, lambda_d: f64) -> Result<ScaledCloud> {
    let reduced = reduced_linear_density(&profile)?;
    Ok(ScaledCloud {
        n0: density_for_debye_length(ion, temperature, lambda_d),
        radius: lambda_d * profile.rho_max,
        linear_density: linear_density_unit(ion, temperature) * reduced,
        profile,
        temperature,
        lambda_d,
        trap: trap.clone(),
        ion: ion.clone(),
    })
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature.is_finite() && temperature > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("temperature", "must be finite and > 0"))
    }
}

/// Quadrupole scaling with an explicit secular frequency ω_x (rad/s):
/// n0 = n_c/(γ+1), λ_D² = k_B T(γ+1)/(2mω_x²).
pub fn scale_quadrupole_with_frequency(
    profile: ReducedProfile,
    omega_x: f64,
    trap: &LinearTrap,
    ion: &IonSpecies,
    temperature: f64,
) -> Result<ScaledCloud> {
    trap.require_quadrupole()?;
    check_temperature(temperature)?;
    if profile.kind != ProfileKind::Quadrupole {
        return Err(Error::invalid("profile", "expected a quadrupole profile"));
    }
    if !(omega_x.is_finite() && omega_x > 0.0) {
        return Err(Error::invalid("omega_x", "must be finite and > 0"));
    }
    let gamma = profile.shape;
    let n0 = limit_density(ion, omega_x) / (gamma + 1.0);
    let lambda_d = debye_length(ion, temperature, n0);
    let direct = (BOLTZMANN * temperature * (gamma + 1.0) / (2.0 * ion.mass() * omega_x * omega_x)).sqrt();
    debug_assert!(((lambda_d - direct) / direct).abs() < 1e-10);
    finish(profile, trap, ion, temperature, lambda_d)
}

/// Quadrupole scaling with ω_x taken from the trap's Mathieu exponent.
pub fn scale_quadrupole(profile: ReducedProfile, trap: &LinearTrap, ion: &IonSpecies, temperature: f64) -> Result<ScaledCloud> {
    let omega_x = secular_frequencies(trap, ion)?.omega_x;
    scale_quadrupole_with_frequency(profile, omega_x, trap, ion, temperature)
}

/// Debye length fixed by α for a 2k-pole:
/// λ_D^(2k−2) = α·32k_B T𝓔_k r0^(2k−2)/((2k−2)²q²V0²).
pub fn multipole_debye_length(alpha: f64, trap: &LinearTrap, ion: &IonSpecies, temperature: f64) -> Result<f64> {
    trap.require_multipole()?;
    if trap.v0() <= 0.0 {
        return Err(Error::invalid("trap.v0", "must be > 0 for a multipole cloud"));
    }
    let k = trap.k() as f64;
    let ek = characteristic_energy(trap, ion).joules();
    let base = 32.0 * BOLTZMANN * temperature * ek * trap.r0().powf(2.0 * k - 2.0)
        / ((2.0 * k - 2.0).powi(2) * ion.charge().powi(2) * trap.v0().powi(2));
    Ok((alpha * base).powf(1.0 / (2.0 * k - 2.0)))
}

pub fn scale_multipole(profile: ReducedProfile, trap: &LinearTrap, ion: &IonSpecies, temperature: f64) -> Result<ScaledCloud> {
    check_temperature(temperature)?;
    if profile.kind != (ProfileKind::Multipole { k: trap.k() }) {
        return Err(Error::invalid("profile", "profile order does not match the trap"));
    }
    let lambda_d = multipole_debye_length(profile.shape, trap, ion, temperature)?;
    finish(profile, trap, ion, temperature, lambda_d)
}

/// Matches `linear_density` (m⁻¹) at `temperature` and scales the result.
/// For quadrupoles `omega_x` overrides the Mathieu-derived frequency.
pub fn solve_cloud(
    trap: &LinearTrap,
    ion: &IonSpecies,
    temperature: f64,
    linear_density: f64,
    omega_x: Option<f64>,
    opts: &ProfileOptions,
) -> Result<ScaledCloud> {
    if trap.is_quadrupole() {
        let w = match omega_x {
            Some(w) => w,
            None => secular_frequencies(trap, ion)?.omega_x,
        };
        let m = match_gamma(linear_density, temperature, ion, opts)?;
        scale_quadrupole_with_frequency(m.profile, w, trap, ion, temperature)
    } else {
        let m = match_alpha(linear_density, temperature, ion, trap.k(), opts)?;
        scale_multipole(m.profile, trap, ion, temperature)
    }
}

/// Cold-fluid radius of a quadrupole cloud,
/// R = √(N/2L)·√(q²/(2πε0))/(√m ω_x).
pub fn quadrupole_limit_radius(ion: &IonSpecies, omega_x: f64, linear_density: f64) -> f64 {
    (linear_density * ion.charge().powi(2) / (2.0 * PI * VACUUM_PERMITTIVITY)).sqrt()
        / (ion.mass().sqrt() * omega_x)
}

/// Cold-fluid (T → 0) radius R_m in meters. Quadrupoles use the Mathieu
/// ω_x; multipoles use R_m = r0·((N/2L)8𝓔_k/(πε0(k−1)V0²))^(1/(2k−2)).
pub fn cold_limit_radius(trap: &LinearTrap, ion: &IonSpecies, linear_density: f64) -> Result<f64> {
    if !(linear_density.is_finite() && linear_density > 0.0) {
        return Err(Error::invalid("linear_density", "must be finite and > 0"));
    }
    if trap.is_quadrupole() {
        let w = secular_frequencies(trap, ion)?.omega_x;
        return Ok(quadrupole_limit_radius(ion, w, linear_density));
    }
    if trap.v0() <= 0.0 {
        return Err(Error::invalid("trap.v0", "must be > 0"));
    }
    let k = trap.k() as f64;
    let ek = characteristic_energy(trap, ion).joules();
    let inner = linear_density * 8.0 * ek / (PI * VACUUM_PERMITTIVITY * (k - 1.0) * trap.v0().powi(2));
    Ok(trap.r0() * inner.powf(1.0 / (2.0 * (k - 1.0))))
}

/// Largest radius with η_ad ≤ η_lim,
/// r = r0·(η_lim·2k𝓔_k/((k−1)qV0))^(1/(k−2)).
///
/// For a quadrupole η_ad does not depend on r: the result is +∞ when the
/// whole trap is adiabatic and 0 otherwise.
pub fn adiabatic_radius(trap: &LinearTrap, ion: &IonSpecies, eta_lim: f64) -> Result<f64> {
    if !(eta_lim.is_finite() && eta_lim > 0.0) {
        return Err(Error::invalid("eta_lim", "must be finite and > 0"));
    }
    if trap.is_quadrupole() {
        return Ok(if adiabaticity(trap, ion, 0.0) <= eta_lim { f64::INFINITY } else { 0.0 });
    }
    let qv = (ion.charge() * trap.v0()).abs();
    if qv == 0.0 {
        return Ok(f64::INFINITY);
    }
    let k = trap.k() as f64;
    let ek = characteristic_energy(trap, ion).joules();
    let inner = eta_lim * 2.0 * k * ek / ((k - 1.0) * qv);
    Ok(trap.r0() * inner.powf(1.0 / (k - 2.0)))
}

/// R_m / r_max^ad; below 1 the cold cloud fits in the adiabatic region.
pub fn fit_ratio(trap: &LinearTrap, ion: &IonSpecies, linear_density: f64, eta_lim: f64) -> Result<f64> {
    trap.require_multipole()?;
    Ok(cold_limit_radius(trap, ion, linear_density)? / adiabatic_radius(trap, ion, eta_lim)?)
}

/// Cold-fluid density n(r) = ε0(k−1)²V0²/(8𝓔_k r0²)·(r/r0)^(2k−4).
pub fn cold_limit_density(trap: &LinearTrap, ion: &IonSpecies, r: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid("r", "must be finite and >= 0"));
    }
    let k = trap.k() as i32;
    let ek = characteristic_energy(trap, ion).joules();
    Ok(VACUUM_PERMITTIVITY * ((k - 1) as f64).powi(2) * trap.v0().powi(2)
        / (8.0 * ek * trap.r0().powi(2))
        * (r / trap.r0()).powi(2 * k - 4))
}
