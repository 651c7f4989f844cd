use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::fluid::ReducedProfile;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("operation is defined for quadrupole traps only (k = 2), got k = {k}")]
    QuadrupoleOnly { k: u32 },

    #[error("operation requires a multipole trap (k >= 3), got k = {k}")]
    MultipoleOnly { k: u32 },

    #[error("unstable point (a = {a}, q = {q}): {reason}")]
    UnstablePoint { a: f64, q: f64, reason: String },

    #[error("transverse confinement lost: omega_x^2 - omega_z^2/2 = {residual:.6e} rad^2/s^2")]
    Deconfined { residual: f64 },

    #[error("ion escaped at t={t:.6e} s (r >= r0)")]
    Escaped { t: f64, partial: Box<Trajectory> },

    #[error("adaptive step fell below the floor at t={t:.6e}")]
    TrajectoryStepUnderflow { t: f64, partial: Box<Trajectory> },

    #[error(
        "profile integration hit the step floor at rho={rho:.6e} (edge {})",
        if *.bracketed { "bracketed" } else { "not bracketed" }
    )]
    ProfileStepUnderflow { rho: f64, bracketed: bool, partial: Box<ReducedProfile> },

    #[error("profile diverged at rho={rho:.6e} (psi={psi:.3e})")]
    Divergence { rho: f64, psi: f64 },

    #[error("profile does not reach its edge")]
    IncompleteProfile,

    #[error(
        "target linear density {target:.6e} /m is outside the reachable range \
         [{min:.6e}, {max:.6e}] /m"
    )]
    OutOfBracket { target: f64, min: f64, max: f64 },

    #[error("linear density is not monotone in the shape parameter near {shape:.6e}")]
    NonMonotone { shape: f64 },

    #[error(
        "target exceeds what double precision resolves near the critical shape {shape:.6e} \
         (largest resolved linear density {reached:.4e} m^-1); raise the temperature"
    )]
    IllConditioned { shape: f64, reached: f64 },

    #[error("matching did not converge within {iterations} bisection steps")]
    MatchNotConverged { iterations: usize },

    #[error("trajectory too short for spectral analysis: {reason}")]
    TooShort { reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
