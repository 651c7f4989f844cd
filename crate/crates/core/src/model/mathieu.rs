//! Mathieu parameters and characteristic exponents of the linear quadrupole.

use serde::{Deserialize, Serialize};

use super::{IonSpecies, LinearTrap};
use crate::error::{Error, Result};

/// Continued-fraction truncation depth.
pub const CF_DEPTH: usize = 20;
/// Fixed-point convergence threshold on successive β iterates.
pub const CF_TOLERANCE: f64 = 1e-10;
/// Iteration cap per relaxation attempt.
pub const CF_MAX_ITER: usize = 200;

/// Operating point of a quadrupole in the Mathieu (a, q) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuPoint {
    pub a_x: f64,
    pub q_x: f64,
    pub a_y: f64,
    pub q_y: f64,
    pub beta_x: Option<f64>,
    pub beta_y: Option<f64>,
}

impl MathieuPoint {
    pub fn from_aq(a_x: f64, q_x: f64) -> Self {
        MathieuPoint { a_x, q_x, a_y: -a_x, q_y: -q_x, beta_x: None, beta_y: None }
    }

    /// Populates both characteristic exponents, failing if either axis is
    /// outside the lowest stability region.
    pub fn with_betas(mut self) -> Result<Self> {
        self.beta_x = Some(beta_from_aq(self.a_x, self.q_x)?);
        self.beta_y = Some(beta_from_aq(self.a_y, self.q_y)?);
        Ok(self)
    }

    pub fn is_stable(&self) -> bool {
        beta_from_aq(self.a_x, self.q_x).is_ok() && beta_from_aq(self.a_y, self.q_y).is_ok()
    }
}

/// q_x = 2qV0/(mΩ²r0²), a_x = −4qU_s/(mΩ²r0²); the y values flip sign.
pub fn mathieu_parameters(trap: &LinearTrap, ion: &IonSpecies) -> Result<MathieuPoint> {
    trap.require_quadrupole()?;
    let scale = ion.charge() / (ion.mass() * trap.omega().powi(2) * trap.r0().powi(2));
    let q_x = 2.0 * scale * trap.v0();
    let a_x = -4.0 * scale * trap.us();
    Ok(MathieuPoint::from_aq(a_x, q_x))
}

/// Sum of the two truncated continued fractions that enter the
/// characteristic equation β² = a + CF⁺(β) + CF⁻(β).
fn continued_fractions(a: f64, q: f64, beta: f64) -> f64 {
    let q2 = q * q;
    let mut plus = 0.0;
    let mut minus = 0.0;
    for j in (1..=CF_DEPTH).rev() {
        let shift = 2.0 * j as f64;
        plus = q2 / ((beta + shift).powi(2) - a - plus);
        minus = q2 / ((beta - shift).powi(2) - a - minus);
    }
    plus + minus
}

fn fixed_point(a: f64, q: f64, relax: f64) -> Option<f64> {
    let seed = a + 0.5 * q * q;
    if seed < 0.0 {
        return None;
    }
    let mut beta = seed.sqrt();
    for _ in 0..CF_MAX_ITER {
        let rad = a + continued_fractions(a, q, beta);
        if !rad.is_finite() || rad < 0.0 {
            return None;
        }
        let next = (1.0 - relax) * beta + relax * rad.sqrt();
        if (next - beta).abs() < CF_TOLERANCE {
            return Some(next);
        }
        beta = next;
    }
    None
}

/// Characteristic exponent β of the Mathieu equation in the lowest stability
/// region, by fixed-point iteration on the continued-fraction relation.
///
/// Plain iteration is tried first; under-relaxed iteration is used when the
/// plain map fails to contract (close to the region boundary).
pub fn beta_from_aq(a: f64, q: f64) -> Result<f64> {
    if !(a.is_finite() && q.is_finite()) {
        return Err(Error::UnstablePoint { a, q, reason: "non-finite input".into() });
    }
    if q == 0.0 {
        return if a >= 0.0 && a.sqrt() <= 1.0 {
            Ok(a.sqrt())
        } else {
            Err(Error::UnstablePoint { a, q, reason: "outside lowest region".into() })
        };
    }
    let beta = [1.0, 0.5, 0.2]
        .iter()
        .find_map(|&w| fixed_point(a, q, w))
        .ok_or_else(|| Error::UnstablePoint { a, q, reason: "no convergence".into() })?;
    if (0.0..=1.0).contains(&beta) && (beta * beta - a - continued_fractions(a, q, beta)).abs() < 1e-8
    {
        Ok(beta)
    } else {
        Err(Error::UnstablePoint { a, q, reason: format!("beta = {beta} outside [0, 1]") })
    }
}
