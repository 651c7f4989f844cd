use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{DenseStep, StepError, Stepper, System, Tolerances};

/// Radius at which the near-axis series is handed to the integrator.
pub const RHO_START: f64 = 1e-6;
/// Smallest admissible step in ρ.
pub const STEP_FLOOR: f64 = 1e-12;
/// Ψ above this value is treated as a divergent multipole solution.
pub const PSI_CAP: f64 = 50.0;
pub const DEFAULT_EDGE_THRESHOLD: f64 = 1e-3;
const RESAMPLE_ROUNDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileKind {
    Quadrupole,
    Multipole { k: u32 },
}

/// Dimensionless radial solution Ψ(ρ) of the reduced Poisson–Boltzmann
/// equation, with density n/n0 = exp Ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedProfile {
    pub kind: ProfileKind,
    /// γ for quadrupoles, α for multipoles.
    pub shape: f64,
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    /// dΨ/dρ on the same grid.
    pub dpsi: Vec<f64>,
    pub rho_max: f64,
    pub edge_threshold: f64,
    /// Location and value of the density maximum.
    pub peak_rho: f64,
    pub peak_psi: f64,
    /// ∫exp(Ψ)2πρ dρ carried along as an ODE component.
    pub integral_ode: f64,
    /// True when the edge criterion was reached.
    pub complete: bool,
}

impl ReducedProfile {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.exp()).collect()
    }

    /// Peak density relative to the central density.
    pub fn peak_to_center(&self) -> f64 {
        self.peak_psi.exp()
    }

    /// Source term of ΔΨ = source(ρ, Ψ).
    pub fn source(&self, rho: f64, psi: f64) -> f64 {
        source(self.kind, self.shape, rho, psi)
    }

    /// Largest |(1/ρ)(ρΨ')' − source| over interior grid points, using the
    /// stored derivative and centred differences.
    pub fn poisson_residual(&self) -> f64 {
        let n = self.rho.len();
        let mut worst: f64 = 0.0;
        for i in 1..n.saturating_sub(1) {
            let (r0, r1, r2) = (self.rho[i - 1], self.rho[i], self.rho[i + 1]);
            let flux = |j: usize| self.rho[j] * self.dpsi[j];
            let (h0, h1) = (r1 - r0, r2 - r1);
            // Second-order derivative of the flux on a nonuniform grid.
            let dflux = (h0 * h0 * flux(i + 1) - h1 * h1 * flux(i - 1)
                + (h1 * h1 - h0 * h0) * flux(i))
                / (h0 * h1 * (h0 + h1));
            let lap = dflux / r1;
            worst = worst.max((lap - self.source(r1, self.psi[i])).abs());
        }
        worst
    }

    /// CSV with header `rho,psi,n_over_n0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,psi,n_over_n0\n");
        for (r, p) in self.rho.iter().zip(&self.psi) {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::io::fmt_number(*r),
                crate::io::fmt_number(*p),
                crate::io::fmt_number(p.exp())
            ));
        }
        out
    }
}

/// Integration settings for reduced profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Edge where exp(Ψ)/max exp(Ψ) falls to this value, in (0, 1).
    pub edge_threshold: f64,
    pub rtol: f64,
    pub step_floor: f64,
    /// Integrate in arc length of the (ρ, Ψ) curve instead of ρ.
    pub arc_length: bool,
    /// Minimum stored points per accepted step.
    pub points_per_step: usize,
    /// Largest spacing in ρ between stored points.
    pub max_spacing: f64,
    /// Give up beyond this radius.
    pub rho_limit: f64,
    /// Completed profiles whose Poisson residual exceeds this are resampled
    /// on a denser grid. Zero disables resampling.
    pub residual_target: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
            rtol: 1e-12,
            step_floor: STEP_FLOOR,
            arc_length: false,
            points_per_step: 16,
            max_spacing: 0.02,
            rho_limit: 1e7,
            residual_target: 1e-5,
        }
    }
}

impl ProfileOptions {
    pub fn with_edge_threshold(edge_threshold: f64) -> Self {
        ProfileOptions { edge_threshold, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.edge_threshold > 0.0 && self.edge_threshold < 1.0) {
            return Err(Error::invalid("edge_threshold", "must lie in (0, 1)"));
        }
        if !(self.rtol > 0.0 && self.rtol < 1e-3) {
            return Err(Error::invalid("rtol", "must lie in (0, 1e-3)"));
        }
        if self.points_per_step == 0 {
            return Err(Error::invalid("points_per_step", "must be >= 1"));
        }
        if !(self.residual_target.is_finite() && self.residual_target >= 0.0) {
            return Err(Error::invalid("residual_target", "must be finite and >= 0"));
        }
        if !(self.max_spacing > 0.0) {
            return Err(Error::invalid("max_spacing", "must be > 0"));
        }
        Ok(())
    }
}

fn source(kind: ProfileKind, shape: f64, rho: f64, psi: f64) -> f64 {
    match kind {
        ProfileKind::Quadrupole => psi.exp_m1() - shape,
        ProfileKind::Multipole { k } => psi.exp() - shape * rho.powi(2 * k as i32 - 4),
    }
}

/// State [ρ, Ψ, Ψ', I] against an independent variable that is either ρ
/// itself or the arc length of the (ρ, Ψ) curve.
struct RadialSystem {
    kind: ProfileKind,
    shape: f64,
    arc_length: bool,
    psi_atol: f64,
}

impl System<4> for RadialSystem {
    fn rhs(&self, _s: f64, y: &[f64; 4]) -> [f64; 4] {
        let [rho, psi, dpsi, _] = *y;
        let d = [
            1.0,
            dpsi,
            source(self.kind, self.shape, rho, psi) - dpsi / rho,
            psi.exp() * 2.0 * std::f64::consts::PI * rho,
        ];
        if self.arc_length {
            let speed = (1.0 + dpsi * dpsi).sqrt();
            d.map(|v| v / speed)
        } else {
            d
        }
    }

    fn atol(&self, i: usize, tol: &Tolerances) -> f64 {
        match i {
            1 | 2 => self.psi_atol,
            _ => tol.atol,
        }
    }
}

struct Builder {
    rho: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
}

impl Builder {
    fn push(&mut self, y: &[f64; 4]) {
        if self.rho.last().is_some_and(|&r| y[0] <= r) {
            return;
        }
        self.rho.push(y[0]);
        self.psi.push(y[1]);
        self.dpsi.push(y[2]);
    }

    fn push_step(&mut self, dense: &DenseStep<4>, until: f64, spacing: f64, points_per_step: usize) {
        let span = (dense.eval(dense.t1())[0] - dense.eval(dense.t0)[0]).abs();
        let points = points_per_step.max((span / spacing).ceil() as usize);
        for j in 1..=points {
            let s = dense.t0 + dense.h * j as f64 / points as f64;
            if s > until {
                break;
            }
            self.push(&dense.eval(s));
        }
    }
}

/// Integrates the reduced radial equation
/// Ψ'' + Ψ'/ρ = source(ρ, Ψ), Ψ(0) = Ψ'(0) = 0,
/// launched from the near-axis series Ψ ≈ cρ²/4 where c = source(0, 0).
pub fn integrate_profile(kind: ProfileKind, shape: f64, opts: &ProfileOptions) -> Result<ReducedProfile> {
    opts.validate()?;
    let mut opts = *opts;
    let mut profile = integrate_once(kind, shape, &opts)?;
    for _ in 0..RESAMPLE_ROUNDS {
        let residual = profile.poisson_residual();
        if opts.residual_target <= 0.0 || residual <= opts.residual_target {
            break;
        }
        // The stencil error falls as the square of the spacing.
        let factor = (1.2 * (residual / opts.residual_target).sqrt()).ceil().min(64.0);
        opts.points_per_step = (opts.points_per_step as f64 * factor) as usize;
        opts.max_spacing /= factor;
        profile = integrate_once(kind, shape, &opts)?;
    }
    Ok(profile)
}

fn integrate_once(kind: ProfileKind, shape: f64, opts: &ProfileOptions) -> Result<ReducedProfile> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::invalid("shape", "gamma/alpha must be finite and > 0"));
    }
    if let ProfileKind::Multipole { k } = kind {
        if k < 3 {
            return Err(Error::MultipoleOnly { k });
        }
    }
    let c = source(kind, shape, 0.0, 0.0);
    let r = RHO_START;
    let y0 = [r, c * r * r / 4.0, c * r / 2.0, std::f64::consts::PI * r * r];
    let psi_atol = match kind {
        ProfileKind::Quadrupole => 1e-12 * shape.clamp(1e-290, 1.0),
        ProfileKind::Multipole { .. } => 1e-12,
    };
    let sys = RadialSystem { kind, shape, arc_length: opts.arc_length, psi_atol };
    let tol = Tolerances { rtol: opts.rtol, atol: 1e-12, h_min: opts.step_floor, h_max: 1.0 };
    let mut st = Stepper::new(&sys, 0.0, y0, 1e-6, tol);
    let ln_thr = opts.edge_threshold.ln();
    let spacing = opts.max_spacing;

    let mut b = Builder { rho: Vec::new(), psi: Vec::new(), dpsi: Vec::new() };
    b.push(&[0.0, 0.0, 0.0, 0.0]);
    b.push(&y0);
    let (mut peak_rho, mut peak_psi) = (0.0, 0.0);
    // Quadrupole densities peak on axis; multipole ones rise first.
    let mut past_peak = kind == ProfileKind::Quadrupole || c <= 0.0;

    let partial = |b: &Builder, peak_rho, peak_psi| ReducedProfile {
        kind,
        shape,
        rho: b.rho.clone(),
        psi: b.psi.clone(),
        dpsi: b.dpsi.clone(),
        rho_max: *b.rho.last().unwrap_or(&0.0),
        edge_threshold: opts.edge_threshold,
        peak_rho,
        peak_psi,
        integral_ode: 0.0,
        complete: false,
    };

    loop {
        let prev = st.y;
        let dense = match st.step(f64::INFINITY) {
            Ok(d) => d,
            Err(StepError::Underflow) => {
                return Err(Error::ProfileStepUnderflow {
                    rho: st.y[0],
                    bracketed: past_peak,
                    partial: Box::new(partial(&b, peak_rho, peak_psi)),
                });
            }
            Err(StepError::NonFinite) => {
                return Err(Error::Divergence { rho: st.y[0], psi: st.y[1] });
            }
        };
        let y = st.y;
        let diverged = match kind {
            ProfileKind::Quadrupole => y[1] > 1.0,
            ProfileKind::Multipole { .. } => y[1] > PSI_CAP,
        };
        if diverged {
            return Err(Error::Divergence { rho: y[0], psi: y[1] });
        }
        if !past_peak && y[2] <= 0.0 && prev[2] > 0.0 {
            let s_peak = dense.locate(|_, v| v[2]);
            let at = dense.eval(s_peak);
            peak_rho = at[0];
            peak_psi = at[1];
            past_peak = true;
        }
        if !past_peak && y[1] > peak_psi {
            peak_rho = y[0];
            peak_psi = y[1];
        }
        let level = peak_psi + ln_thr;
        if past_peak && y[1] <= level {
            let s_edge = dense.locate(|_, v| v[1] - level);
            let edge = dense.eval(s_edge);
            b.push_step(&dense, s_edge, spacing, opts.points_per_step);
            b.push(&edge);
            let mut p = partial(&b, peak_rho, peak_psi);
            p.rho_max = edge[0];
            p.integral_ode = edge[3];
            p.complete = true;
            return Ok(p);
        }
        b.push_step(&dense, dense.t1(), spacing, opts.points_per_step);
        if y[0] > opts.rho_limit {
            return Err(Error::IncompleteProfile);
        }
    }
}

/// Quadrupole profile: Ψ'' + Ψ'/ρ = exp(Ψ) − γ − 1.
pub fn integrate_profile_quadrupole(gamma: f64, edge_threshold: f64) -> Result<ReducedProfile> {
    integrate_profile(
        ProfileKind::Quadrupole,
        gamma,
        &ProfileOptions::with_edge_threshold(edge_threshold),
    )
}

/// 2k-pole profile: Ψ'' + Ψ'/ρ = exp(Ψ) − αρ^(2k−4).
pub fn integrate_profile_multipole(alpha: f64, k: u32, edge_threshold: f64) -> Result<ReducedProfile> {
    integrate_profile(
        ProfileKind::Multipole { k },
        alpha,
        &ProfileOptions::with_edge_threshold(edge_threshold),
    )
}

/// ∫₀^ρmax exp(Ψ)·2πρ dρ by the endpoint-corrected trapezoid rule on the
/// stored grid, which is fourth order because the derivative is stored.
pub fn reduced_linear_density(profile: &ReducedProfile) -> Result<f64> {
    if !profile.complete || profile.len() < 2 {
        return Err(Error::IncompleteProfile);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let f = |i: usize| profile.psi[i].exp() * two_pi * profile.rho[i];
    let df = |i: usize| two_pi * profile.psi[i].exp() * (1.0 + profile.rho[i] * profile.dpsi[i]);
    let mut sum = 0.0;
    for i in 0..profile.len() - 1 {
        let h = profile.rho[i + 1] - profile.rho[i];
        sum += 0.5 * h * (f(i) + f(i + 1)) + h * h / 12.0 * (df(i) - df(i + 1));
    }
    Ok(sum)
}
