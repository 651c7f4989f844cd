//! Closed-form trap and plasma quantities.

use serde::{Deserialize, Serialize};

use super::mathieu::{beta_from_aq, mathieu_parameters};
use super::{IonSpecies, LinearTrap};
use crate::constants::{BOLTZMANN, PI, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// 𝓔_k = mΩ²r0²/(2k²), in joules.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CharacteristicEnergy(pub f64);

impl CharacteristicEnergy {
    pub fn joules(self) -> f64 {
        self.0
    }
}

pub fn characteristic_energy(trap: &LinearTrap, ion: &IonSpecies) -> CharacteristicEnergy {
    let k = trap.k() as f64;
    CharacteristicEnergy(ion.mass() * (trap.omega() * trap.r0()).powi(2) / (2.0 * k * k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularFrequencies {
    /// Transverse secular frequency without axial deconfinement (rad/s).
    pub omega_x: f64,
    /// Transverse frequency including the axial deconfinement (rad/s).
    pub omega_r: f64,
    /// Axial frequency (rad/s); zero without axial confinement.
    pub omega_z: f64,
}

/// Squared axial frequency 2qκV_end/(m z0²), zero when no axial field.
pub fn axial_frequency_squared(trap: &LinearTrap, ion: &IonSpecies) -> f64 {
    trap.axial()
        .map(|ax| 2.0 * ion.charge() * ax.strength() / (ion.mass() * ax.z0 * ax.z0))
        .unwrap_or(0.0)
}

/// Quadrupole secular frequencies; ω_x = β_x Ω/2 from the continued fraction.
pub fn secular_frequencies(trap: &LinearTrap, ion: &IonSpecies) -> Result<SecularFrequencies> {
    let point = mathieu_parameters(trap, ion)?;
    let beta = beta_from_aq(point.a_x, point.q_x)?;
    let omega_x = beta * trap.omega() / 2.0;
    if omega_x <= 0.0 {
        return Err(Error::Deconfined { residual: 0.0 });
    }
    let wz2 = axial_frequency_squared(trap, ion);
    if wz2 < 0.0 {
        return Err(Error::invalid("axial.v_end", "axial potential repels this species"));
    }
    let residual = omega_x * omega_x - wz2 / 2.0;
    if residual <= 0.0 {
        return Err(Error::Deconfined { residual });
    }
    Ok(SecularFrequencies { omega_x, omega_r: residual.sqrt(), omega_z: wz2.sqrt() })
}

/// Harmonic pseudopotential frequency qV0/(√2 mΩr0²) of a quadrupole.
pub fn pseudopotential_frequency(trap: &LinearTrap, ion: &IonSpecies) -> Result<f64> {
    trap.require_quadrupole()?;
    Ok((ion.charge() * trap.v0()).abs()
        / (std::f64::consts::SQRT_2 * ion.mass() * trap.omega() * trap.r0().powi(2)))
}

/// Effective static potential energy (J) at cylindrical position (r, θ, z).
///
/// The static rod term carries the sign that matches the RF equations of
/// motion in [`crate::dynamics`], so that a positive U_s gives a negative
/// a_x as returned by [`mathieu_parameters`].
pub fn pseudopotential(trap: &LinearTrap, ion: &IonSpecies, r: f64, theta: f64, z: f64) -> f64 {
    let k = trap.k() as i32;
    let q = ion.charge();
    let ek = characteristic_energy(trap, ion).joules();
    let rho = r / trap.r0();
    let mut v = q * q * trap.v0().powi(2) / (32.0 * ek) * rho.powi(2 * k - 2);
    if trap.us() != 0.0 {
        v -= 0.5 * q * trap.us() * rho.powi(k) * (k as f64 * theta).cos();
    }
    if let Some(ax) = trap.axial() {
        v += q * ax.strength() * (2.0 * z * z - r * r) / (2.0 * ax.z0 * ax.z0);
    }
    v
}

/// Powers (x + iy)^n as (re, im).
pub(crate) fn complex_pow(x: f64, y: f64, n: u32) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..n {
        (re, im) = (re * x - im * y, re * y + im * x);
    }
    (re, im)
}

/// Cartesian gradient (J/m) of [`pseudopotential`].
pub fn pseudopotential_gradient(trap: &LinearTrap, ion: &IonSpecies, pos: [f64; 3]) -> [f64; 3] {
    let k = trap.k();
    let [x, y, z] = pos;
    let r0 = trap.r0();
    let q = ion.charge();
    let ek = characteristic_energy(trap, ion).joules();
    let r2 = (x * x + y * y) / (r0 * r0);
    // d/dx (r/r0)^(2k-2) = (2k-2) (r/r0)^(2k-4) x / r0²
    let radial = q * q * trap.v0().powi(2) / (32.0 * ek)
        * (2 * k - 2) as f64
        * r2.powi(k as i32 - 2)
        / (r0 * r0);
    let mut g = [radial * x, radial * y, 0.0];
    if trap.us() != 0.0 {
        // ∇ Re((x+iy)/r0)^k = (k/r0) (Re w^(k-1), -Im w^(k-1))
        let (re, im) = complex_pow(x / r0, y / r0, k - 1);
        let c = -0.5 * q * trap.us() * k as f64 / r0;
        g[0] += c * re;
        g[1] -= c * im;
    }
    if let Some(ax) = trap.axial() {
        let c = q * ax.strength() / (ax.z0 * ax.z0);
        g[0] -= c * x;
        g[1] -= c * y;
        g[2] += 2.0 * c * z;
    }
    g
}

/// Location of the transverse pseudopotential minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialMinimum {
    /// Quadrupole: the axial deconfinement only softens the harmonic well.
    NoShift,
    /// Minimum stays on the axis (no axial deconfinement).
    OnAxis,
    /// Minimum lies on a ring of the given radius (m).
    Ring(f64),
}

impl RadialMinimum {
    pub fn radius(&self) -> f64 {
        match *self {
            RadialMinimum::Ring(r) => r,
            _ => 0.0,
        }
    }
}

/// r_min^(2k−4) = (r0^(2k−2)/z0²)·16𝓔_kκV_end/((k−1)qV0²).
pub fn rf_minimum_radius(trap: &LinearTrap, ion: &IonSpecies) -> RadialMinimum {
    if trap.is_quadrupole() {
        return RadialMinimum::NoShift;
    }
    let Some(ax) = trap.axial() else {
        return RadialMinimum::OnAxis;
    };
    let k = trap.k() as f64;
    let q = ion.charge();
    let ek = characteristic_energy(trap, ion).joules();
    let rhs = trap.r0().powf(2.0 * k - 2.0) / (ax.z0 * ax.z0) * 16.0 * ek * ax.strength()
        / ((k - 1.0) * q * trap.v0().powi(2));
    if !(rhs > 0.0) || !rhs.is_finite() {
        return RadialMinimum::OnAxis;
    }
    RadialMinimum::Ring(rhs.powf(1.0 / (2.0 * k - 4.0)))
}

/// Local adiabaticity η_ad = k(k−1)·qV0 r^(k−2)/(mΩ² r0^k).
pub fn adiabaticity(trap: &LinearTrap, ion: &IonSpecies, r: f64) -> f64 {
    let k = trap.k() as i32;
    let kf = k as f64;
    kf * (kf - 1.0) * (ion.charge() * trap.v0()).abs() * r.powi(k - 2)
        / (ion.mass() * trap.omega().powi(2) * trap.r0().powi(k))
}

/// Uniform cold-fluid density n_c = 2mε0ω_x²/q² (m⁻³).
pub fn limit_density(ion: &IonSpecies, omega_x: f64) -> f64 {
    2.0 * ion.mass() * VACUUM_PERMITTIVITY * omega_x * omega_x / ion.charge().powi(2)
}

/// Debye length √(k_B T ε0/(q² n)) in meters.
pub fn debye_length(ion: &IonSpecies, temperature: f64, density: f64) -> f64 {
    (BOLTZMANN * temperature * VACUUM_PERMITTIVITY / (ion.charge().powi(2) * density)).sqrt()
}

/// Inverse of [`debye_length`]: the density with the given screening length.
pub fn density_for_debye_length(ion: &IonSpecies, temperature: f64, lambda_d: f64) -> f64 {
    BOLTZMANN * temperature * VACUUM_PERMITTIVITY / (ion.charge().powi(2) * lambda_d * lambda_d)
}

/// k_B T ε0 / q², the linear-density unit of the reduced profile (m⁻¹).
pub fn linear_density_unit(ion: &IonSpecies, temperature: f64) -> f64 {
    BOLTZMANN * temperature * VACUUM_PERMITTIVITY / ion.charge().powi(2)
}

/// Wigner–Seitz radius a with 4πna³/3 = 1.
pub fn wigner_seitz_radius(density: f64) -> f64 {
    (3.0 / (4.0 * PI * density)).cbrt()
}

/// Γ = q²/(4πε0 a k_B T) with the Wigner–Seitz radius a.
pub fn coupling_parameter(ion: &IonSpecies, temperature: f64, density: f64) -> f64 {
    ion.charge().powi(2)
        / (4.0 * PI * VACUUM_PERMITTIVITY * wigner_seitz_radius(density) * BOLTZMANN * temperature)
}

/// Γ_c = (q²/4πε0)^(2/3)(2mω_x²)^(1/3)/(k_B T).
///
/// This closed form corresponds to a = (4πn_c)^(−1/3), so it exceeds
/// [`coupling_parameter`] evaluated at n_c by exactly 3^(1/3).
pub fn coupling_limit(ion: &IonSpecies, omega_x: f64, temperature: f64) -> f64 {
    let coulomb = ion.charge().powi(2) / (4.0 * PI * VACUUM_PERMITTIVITY);
    coulomb.powf(2.0 / 3.0) * (2.0 * ion.mass() * omega_x * omega_x).cbrt()
        / (BOLTZMANN * temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::mhz_to_angular;
    use crate::model::AxialConfinement;

    fn ca() -> IonSpecies {
        IonSpecies::calcium40()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn characteristic_energy_values() {
        let t = LinearTrap::new(4, 0.01, 400.0, mhz_to_angular(1.0)).unwrap();
        let e = characteristic_energy(&t, &ca()).joules();
        assert!(rel(e, 8.20e-18) < 2e-3, "{e}");
        let e2 = characteristic_energy(&t.with_omega(mhz_to_angular(2.0)).unwrap(), &ca()).joules();
        assert!(rel(e2, 4.0 * e) < 1e-14);
        let e10 = characteristic_energy(&t.with_omega(mhz_to_angular(10.0)).unwrap(), &ca());
        assert!(rel(e10.joules(), 8.20e-16) < 2e-3);
    }

    #[test]
    fn secular_frequency_without_axial() {
        let ion = ca();
        let omega = mhz_to_angular(2.0);
        // V0 chosen so that q_x = 0.2
        let v0 = 0.2 * ion.mass() * omega * omega * 1e-4 / (2.0 * ion.charge());
        let t = LinearTrap::new(2, 0.01, v0, omega).unwrap();
        let s = secular_frequencies(&t, &ion).unwrap();
        assert_eq!(s.omega_r, s.omega_x);
        assert_eq!(s.omega_z, 0.0);
        let f = s.omega_x / (2.0 * PI * 1e6);
        assert!((f - 0.1414).abs() < 0.002, "{f}");
    }

    #[test]
    fn deconfinement_boundary() {
        let ion = ca();
        let omega = mhz_to_angular(2.0);
        let v0 = 0.2 * ion.mass() * omega * omega * 1e-4 / (2.0 * ion.charge());
        let t = LinearTrap::new(2, 0.01, v0, omega).unwrap();
        let wx = secular_frequencies(&t, &ion).unwrap().omega_x;
        // ω_z² = 2 ω_x² exactly at the boundary; choose V_end accordingly.
        let z0 = 0.01;
        let v_end = 2.0 * wx * wx * ion.mass() * z0 * z0 / (2.0 * ion.charge() * 0.5) * 1.000001;
        let ax = AxialConfinement::new(v_end, 0.5, z0).unwrap();
        assert!(matches!(
            secular_frequencies(&t.clone().with_axial(ax), &ion),
            Err(Error::Deconfined { .. })
        ));
        let ax = AxialConfinement::new(v_end * 0.5, 0.5, z0).unwrap();
        let s = secular_frequencies(&t.with_axial(ax), &ion).unwrap();
        assert!(rel(s.omega_r.powi(2), s.omega_x.powi(2) - s.omega_z.powi(2) / 2.0) < 1e-12);
    }

    #[test]
    fn pseudopotential_on_axis_is_zero() {
        let ax = AxialConfinement::new(10.0, 0.2, 0.01).unwrap();
        for k in 2..7 {
            let t = LinearTrap::new(k, 0.01, 300.0, 1e7).unwrap().with_axial(ax);
            assert_eq!(pseudopotential(&t, &ca(), 0.0, 0.3, 0.0), 0.0);
        }
    }

    #[test]
    fn quadrupole_curvature_matches_pseudopotential_frequency() {
        let ion = ca();
        let omega = mhz_to_angular(2.0);
        let t = LinearTrap::new(2, 0.01, 100.0, omega).unwrap();
        let w = pseudopotential_frequency(&t, &ion).unwrap();
        let r = 1e-4;
        let v = pseudopotential(&t, &ion, r, 0.0, 0.0);
        assert!(rel(v, 0.5 * ion.mass() * w * w * r * r) < 1e-12);
        let q = mathieu_parameters(&t, &ion).unwrap().q_x;
        let wx = secular_frequencies(&t, &ion).unwrap().omega_x;
        assert!(rel(w, wx) < q * q / 2.0, "{w} vs {wx}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ax = AxialConfinement::new(10.0, 0.2, 0.01).unwrap();
        let ion = ca();
        for k in 2..6 {
            let t = LinearTrap::new(k, 0.01, 300.0, 1e7)
                .unwrap()
                .with_static_offset(3.0)
                .unwrap()
                .with_axial(ax);
            let p = [1.3e-3, -0.7e-3, 0.4e-3];
            let f = |p: [f64; 3]| {
                let r = p[0].hypot(p[1]);
                pseudopotential(&t, &ion, r, p[1].atan2(p[0]), p[2])
            };
            let g = pseudopotential_gradient(&t, &ion, p);
            for i in 0..3 {
                let h = 1e-8;
                let mut pp = p;
                let mut pm = p;
                pp[i] += h;
                pm[i] -= h;
                let fd = (f(pp) - f(pm)) / (2.0 * h);
                assert!((g[i] - fd).abs() <= 1e-6 * g.iter().map(|v| v.abs()).fold(0.0, f64::max));
            }
        }
    }

    #[test]
    fn rf_minimum_conventions() {
        let ion = ca();
        let ax = AxialConfinement::new(10.0, 0.2, 0.01).unwrap();
        let quad = LinearTrap::new(2, 0.01, 300.0, 1e7).unwrap().with_axial(ax);
        assert_eq!(rf_minimum_radius(&quad, &ion), RadialMinimum::NoShift);
        let oct = LinearTrap::new(4, 0.01, 800.0, mhz_to_angular(10.0)).unwrap();
        assert_eq!(rf_minimum_radius(&oct, &ion).radius(), 0.0);
        let zero_end = oct.clone().with_axial(AxialConfinement::new(0.0, 0.2, 0.01).unwrap());
        assert_eq!(rf_minimum_radius(&zero_end, &ion).radius(), 0.0);
    }

    #[test]
    fn rf_minimum_matches_numeric_minimum() {
        let ion = ca();
        let ax = AxialConfinement::new(10.0, 0.2, 0.01).unwrap();
        let oct = LinearTrap::new(4, 0.01, 800.0, mhz_to_angular(10.0)).unwrap().with_axial(ax);
        let rmin = rf_minimum_radius(&oct, &ion).radius();
        // golden-section search on the radial potential
        let f = |r: f64| pseudopotential(&oct, &ion, r, 0.0, 0.0);
        let (mut a, mut b) = (0.0, oct.r0());
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        assert!(((a + b) / 2.0 - rmin).abs() < 1e-9, "{} vs {rmin}", (a + b) / 2.0);
    }

    #[test]
    fn adiabaticity_scaling() {
        let ion = ca();
        let quad = LinearTrap::new(2, 0.01, 100.0, mhz_to_angular(2.0)).unwrap();
        let q = mathieu_parameters(&quad, &ion).unwrap().q_x;
        for r in [0.0, 1e-4, 3e-3] {
            assert!(rel(adiabaticity(&quad, &ion, r), q.abs()) < 1e-14);
        }
        let oct = LinearTrap::new(4, 0.01, 400.0, mhz_to_angular(1.0)).unwrap();
        assert_eq!(adiabaticity(&oct, &ion, 0.0), 0.0);
        let e1 = adiabaticity(&oct, &ion, 1e-5);
        let e2 = adiabaticity(&oct, &ion, 1e-2);
        let slope = (e2 / e1).log10() / 3.0;
        assert!((slope - 2.0).abs() < 1e-10);
    }

    #[test]
    fn limit_density_values() {
        let n = limit_density(&ca(), mhz_to_angular(1.0));
        assert!(rel(n, 1.81e15) < 3e-3, "{n}");
        assert!(rel(limit_density(&ca(), mhz_to_angular(2.0)), 4.0 * n) < 1e-14);
        let r = (1e8 / (PI * n)).sqrt();
        // quoted Ca+ coefficient 1.31e-8 (per √(ions/m), MHz)
        assert!(rel(r, 1.31e-8 * 1e4) < 0.02, "{r}");
    }

    #[test]
    fn limit_density_dimensional_closure() {
        let ion = IonSpecies::new(2.0, 137.0, "Ba++").unwrap();
        let w = 1.234e6;
        let back = limit_density(&ion, w) * ion.charge().powi(2)
            / (2.0 * ion.mass() * VACUUM_PERMITTIVITY);
        assert!(rel(back, w * w) < 1e-15);
    }

    #[test]
    fn debye_length_values() {
        let ion = ca();
        assert!(rel(debye_length(&ion, 5.0, 3.2e10), 0.86e-3) < 0.01);
        assert!(rel(debye_length(&ion, 5.0, 1.2e10), 1.4e-3) < 0.02);
        let l = debye_length(&ion, 5.0, 1e12);
        assert!(rel(debye_length(&ion, 5.0, 4e12), l / 2.0) < 1e-14);
        assert!(rel(density_for_debye_length(&ion, 5.0, l), 1e12) < 1e-14);
    }

    #[test]
    fn coupling_values() {
        let ion = ca();
        let g = coupling_limit(&ion, mhz_to_angular(1.0), 1.0);
        assert!(rel(g, 4.8) < 0.02, "{g}");
        let g8 = coupling_limit(&ion, mhz_to_angular(8.0), 0.01);
        assert!(rel(g8, 4.8 * 8f64.powf(2.0 / 3.0) / 0.01) < 0.02, "{g8}");
    }

    #[test]
    fn coupling_limit_is_cube_root_three_above_wigner_seitz_value() {
        let ion = ca();
        let w = mhz_to_angular(1.7);
        let nc = limit_density(&ion, w);
        let ratio = coupling_limit(&ion, w, 0.3) / coupling_parameter(&ion, 0.3, nc);
        assert!(rel(ratio, 3f64.cbrt()) < 1e-12);
    }
}
