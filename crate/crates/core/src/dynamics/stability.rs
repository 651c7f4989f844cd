use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{propagate_rf, IntegratorControl, PhaseState};
use crate::error::{Error, Result};
use crate::model::{adiabaticity, beta_from_aq, mathieu_parameters, IonSpecies, LinearTrap};

/// A closed interval sampled at `n` equally spaced points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(Error::invalid("scan.axis", "bounds must be finite with min <= max"));
        }
        if n == 0 || (n == 1 && min != max) {
            return Err(Error::invalid("scan.axis", "need at least two points for a range"));
        }
        Ok(Axis { min, max, n })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.min
        } else if i + 1 == self.n {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

/// The scanned plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScanPlane {
    /// Dimensionless Mathieu parameters (a_x, q_x) of a quadrupole.
    Mathieu { a: Axis, q: Axis },
    /// RF amplitude V0 (V) and static offset U_s (V).
    Voltages { v0: Axis, us: Axis },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScan {
    pub rf_periods: f64,
    /// Launch radius in units of r0.
    pub launch_fraction: f64,
    pub control: IntegratorControl,
}

impl Default for TrajectoryScan {
    fn default() -> Self {
        TrajectoryScan {
            rf_periods: 1000.0,
            launch_fraction: 0.1,
            control: IntegratorControl { rtol: 1e-8, atol_r0: 1e-11, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScanMethod {
    /// Characteristic-exponent test (quadrupoles only).
    ContinuedFraction,
    /// Direct integration from rest near the axis.
    Trajectory(TrajectoryScan),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    /// The integrated ion reached r ≥ r0.
    Escaped,
    /// The integrator could not decide (step underflow).
    Unknown,
}

impl Verdict {
    pub fn is_stable(self) -> bool {
        self == Verdict::Stable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub v0: f64,
    pub us: f64,
    /// Mathieu coordinates, quadrupoles only.
    pub a: Option<f64>,
    pub q: Option<f64>,
    pub verdict: Verdict,
    pub beta_x: Option<f64>,
    pub beta_y: Option<f64>,
    /// Adiabaticity at the launch radius.
    pub eta: f64,
}

/// Verdicts on a rectangular grid, stored row-major with the first axis
/// of the plane (a or V0) as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    pub plane: ScanPlane,
    pub method: ScanMethod,
    pub cells: Vec<StabilityCell>,
}

impl StabilityMap {
    pub fn shape(&self) -> (usize, usize) {
        match self.plane {
            ScanPlane::Mathieu { a, q } => (a.n, q.n),
            ScanPlane::Voltages { v0, us } => (v0.n, us.n),
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> &StabilityCell {
        &self.cells[i * self.shape().1 + j]
    }

    pub fn stable_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| c.verdict.is_stable()).count() as f64 / self.cells.len() as f64
    }

    /// Fraction of cells with the same stable/unstable classification in
    /// both maps. Escaped counts as unstable.
    pub fn agreement(&self, other: &StabilityMap) -> Result<f64> {
        if self.cells.len() != other.cells.len() {
            return Err(Error::invalid("scan", "maps have different shapes"));
        }
        let same = self
            .cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| a.verdict.is_stable() == b.verdict.is_stable())
            .count();
        Ok(same as f64 / self.cells.len() as f64)
    }

    pub fn max_eta(&self) -> f64 {
        self.cells.iter().map(|c| c.eta).fold(0.0, f64::max)
    }
}

fn cell_trap(template: &LinearTrap, ion: &IonSpecies, plane: &ScanPlane, x: f64, y: f64) -> Result<LinearTrap> {
    match plane {
        ScanPlane::Mathieu { .. } => {
            let scale = ion.mass() * template.omega().powi(2) * template.r0().powi(2) / ion.charge();
            if y < 0.0 {
                return Err(Error::invalid("scan.q", "must be >= 0"));
            }
            template.with_v0(0.5 * y * scale)?.with_static_offset(-0.25 * x * scale)
        }
        ScanPlane::Voltages { .. } => template.with_v0(x)?.with_static_offset(y),
    }
}

fn trajectory_verdict(trap: &LinearTrap, ion: &IonSpecies, settings: &TrajectoryScan) -> Verdict {
    let r = settings.launch_fraction * trap.r0() / std::f64::consts::SQRT_2;
    let trap = trap.clone().with_rf_phase(0.0);
    let init = PhaseState::at_rest(r, r, 0.0);
    let t_end = settings.rf_periods * trap.rf_period();
    match propagate_rf(&trap, ion, &init, t_end, &settings.control) {
        Ok(_) => Verdict::Stable,
        Err(Error::Escaped { .. }) => Verdict::Escaped,
        Err(_) => Verdict::Unknown,
    }
}

/// Classifies every grid point of `plane` as stable or unstable.
///
/// The continued-fraction method requires a quadrupole template; the
/// trajectory method launches the ion at rest at `launch_fraction·r0` on
/// the diagonal with zero RF phase. Cells are evaluated in parallel.
pub fn stability_scan(
    template: &LinearTrap,
    ion: &IonSpecies,
    plane: ScanPlane,
    method: ScanMethod,
) -> Result<StabilityMap> {
    let (ax, ay) = match plane {
        ScanPlane::Mathieu { a, q } => {
            template.require_quadrupole()?;
            (a, q)
        }
        ScanPlane::Voltages { v0, us } => (v0, us),
    };
    if method == ScanMethod::ContinuedFraction {
        template.require_quadrupole()?;
    }
    let launch = match method {
        ScanMethod::Trajectory(s) => {
            if !(s.launch_fraction > 0.0 && s.launch_fraction < 1.0) {
                return Err(Error::invalid("scan.launch_fraction", "must lie in (0, 1)"));
            }
            if !(s.rf_periods > 0.0) {
                return Err(Error::invalid("scan.rf_periods", "must be > 0"));
            }
            s.launch_fraction
        }
        ScanMethod::ContinuedFraction => TrajectoryScan::default().launch_fraction,
    };
    // Validate all cells up front so errors are reported deterministically.
    let traps: Vec<LinearTrap> = (0..ax.n * ay.n)
        .map(|idx| cell_trap(template, ion, &plane, ax.value(idx / ay.n), ay.value(idx % ay.n)))
        .collect::<Result<_>>()?;
    let cells = traps
        .par_iter()
        .enumerate()
        .map(|(idx, trap)| {
            let (a, q) = match plane {
                ScanPlane::Mathieu { .. } => (Some(ax.value(idx / ay.n)), Some(ay.value(idx % ay.n))),
                ScanPlane::Voltages { .. } => match mathieu_parameters(trap, ion) {
                    Ok(p) => (Some(p.a_x), Some(p.q_x)),
                    Err(_) => (None, None),
                },
            };
            let (beta_x, beta_y) = match (a, q) {
                (Some(a), Some(q)) => (beta_from_aq(a, q).ok(), beta_from_aq(-a, -q).ok()),
                _ => (None, None),
            };
            let verdict = match method {
                ScanMethod::ContinuedFraction => {
                    if beta_x.is_some() && beta_y.is_some() {
                        Verdict::Stable
                    } else {
                        Verdict::Unstable
                    }
                }
                ScanMethod::Trajectory(s) => trajectory_verdict(trap, ion, &s),
            };
            StabilityCell {
                v0: trap.v0(),
                us: trap.us(),
                a,
                q,
                verdict,
                beta_x,
                beta_y,
                eta: adiabaticity(trap, ion, launch * trap.r0()),
            }
        })
        .collect();
    Ok(StabilityMap { plane, method, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template() -> LinearTrap {
        LinearTrap::new(2, 0.005, 0.0, 2.0 * std::f64::consts::PI * 2e6).unwrap()
    }

    #[test]
    fn axis_hits_endpoints_exactly() {
        let a = Axis::new(-0.3, 0.3, 7).unwrap();
        let v = a.values();
        assert_eq!(v[0], -0.3);
        assert_eq!(v[6], 0.3);
        assert!(Axis::new(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn continued_fraction_map_has_expected_region() {
        let plane = ScanPlane::Mathieu {
            a: Axis::new(-0.2, 0.2, 11).unwrap(),
            q: Axis::new(0.0, 1.0, 11).unwrap(),
        };
        let map =
            stability_scan(&template(), &IonSpecies::calcium40(), plane, ScanMethod::ContinuedFraction)
                .unwrap();
        // a = 0, q = 0.5 is stable; a = 0, q = 1.0 is not.
        assert!(map.cell(5, 5).verdict.is_stable());
        assert!(!map.cell(5, 10).verdict.is_stable());
        // Nonzero a with q = 0 is unstable in one direction.
        assert!(!map.cell(0, 0).verdict.is_stable());
        assert!(!map.cell(10, 0).verdict.is_stable());
    }

    #[test]
    fn multipole_rejects_continued_fraction() {
        let t = LinearTrap::new(4, 0.005, 0.0, 1e7).unwrap();
        let plane = ScanPlane::Voltages {
            v0: Axis::new(0.0, 100.0, 2).unwrap(),
            us: Axis::new(0.0, 0.0, 1).unwrap(),
        };
        assert!(stability_scan(&t, &IonSpecies::calcium40(), plane, ScanMethod::ContinuedFraction)
            .is_err());
    }
}
