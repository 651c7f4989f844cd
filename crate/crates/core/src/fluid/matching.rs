use serde::{Deserialize, Serialize};

use super::profile::{integrate_profile, reduced_linear_density, ProfileKind, ProfileOptions, ReducedProfile};
use crate::error::{Error, Result};
use crate::model::{linear_density_unit, IonSpecies};

/// log10 bracket searched for γ.
pub const GAMMA_BRACKET: (f64, f64) = (-300.0, 6.0);
/// log10 bracket searched for α.
pub const ALPHA_BRACKET: (f64, f64) = (-12.0, 8.0);
/// Relative tolerance on the matched linear density.
pub const MATCH_TOLERANCE: f64 = 1e-4;
pub const MATCH_MAX_ITER: usize = 200;
/// Relative integration noise tolerated before the monotonicity check fails.
const MONOTONE_SLACK: f64 = 1e-6;
/// log10 bracket width below which integration noise dominates the count.
const COLLAPSED_BRACKET: f64 = 1e-9;

/// A shape parameter together with the profile that reproduces the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedProfile {
    pub shape: f64,
    pub profile: ReducedProfile,
    /// Achieved N/2L (m⁻¹).
    pub linear_density: f64,
    pub iterations: usize,
}

/// Reduced linear density for a shape parameter. Multipole solutions that
/// blow up at finite radius hold an unbounded number of ions and map to
/// `None` (read as +∞).
fn reduced_count(kind: ProfileKind, shape: f64, opts: &ProfileOptions) -> Result<Option<(f64, ReducedProfile)>> {
    match integrate_profile(kind, shape, opts) {
        Ok(p) => Ok(Some((reduced_linear_density(&p)?, p))),
        Err(Error::Divergence { .. }) | Err(Error::ProfileStepUnderflow { bracketed: false, .. })
            if matches!(kind, ProfileKind::Multipole { .. }) =>
        {
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn validate(target: f64, temperature: f64) -> Result<()> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::invalid("linear_density", "must be finite and > 0"));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be finite and > 0"));
    }
    Ok(())
}

/// Bisection in log10 of the shape parameter. The linear density must be
/// strictly decreasing in the shape parameter; this is checked at every
/// probe.
pub fn match_shape(
    kind: ProfileKind,
    target: f64,
    temperature: f64,
    ion: &IonSpecies,
    bracket: (f64, f64),
    opts: &ProfileOptions,
) -> Result<MatchedProfile> {
    validate(target, temperature)?;
    let unit = linear_density_unit(ion, temperature);
    let goal = target / unit;
    let count = |lg: f64| -> Result<(f64, Option<ReducedProfile>)> {
        Ok(match reduced_count(kind, 10f64.powf(lg), opts)? {
            Some((n, p)) => (n, Some(p)),
            None => (f64::INFINITY, None),
        })
    };
    let (mut lo, mut hi) = bracket;
    let (mut n_lo, _) = count(lo)?;
    let (mut n_hi, _) = count(hi)?;
    if n_lo <= n_hi {
        return Err(Error::NonMonotone { shape: 10f64.powf(hi) });
    }
    if !(goal <= n_lo && goal >= n_hi) {
        return Err(Error::OutOfBracket { target, min: n_hi * unit, max: n_lo * unit });
    }
    for it in 1..=MATCH_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let (n_mid, profile) = count(mid)?;
        if n_mid > n_lo * (1.0 + MONOTONE_SLACK) || n_mid < n_hi * (1.0 - MONOTONE_SLACK) {
            if hi - lo < COLLAPSED_BRACKET {
                return Err(Error::IllConditioned {
                    shape: 10f64.powf(mid),
                    reached: n_hi.max(n_mid).min(n_lo) * unit,
                });
            }
            return Err(Error::NonMonotone { shape: 10f64.powf(mid) });
        }
        if let Some(profile) = profile {
            if ((n_mid - goal) / goal).abs() < MATCH_TOLERANCE {
                return Ok(MatchedProfile {
                    shape: 10f64.powf(mid),
                    profile,
                    linear_density: n_mid * unit,
                    iterations: it,
                });
            }
        }
        if n_mid > goal {
            lo = mid;
            n_lo = n_mid;
        } else {
            hi = mid;
            n_hi = n_mid;
        }
    }
    if n_lo.is_infinite() && hi - lo < COLLAPSED_BRACKET {
        return Err(Error::IllConditioned { shape: 10f64.powf(hi), reached: n_hi * unit });
    }
    Err(Error::MatchNotConverged { iterations: MATCH_MAX_ITER })
}

/// γ reproducing `target` ions per meter at `temperature` in a quadrupole.
pub fn match_gamma(target: f64, temperature: f64, ion: &IonSpecies, opts: &ProfileOptions) -> Result<MatchedProfile> {
    match_shape(ProfileKind::Quadrupole, target, temperature, ion, GAMMA_BRACKET, opts)
}

/// α reproducing `target` ions per meter at `temperature` in a 2k-pole.
pub fn match_alpha(
    target: f64,
    temperature: f64,
    ion: &IonSpecies,
    k: u32,
    opts: &ProfileOptions,
) -> Result<MatchedProfile> {
    if k < 3 {
        return Err(Error::MultipoleOnly { k });
    }
    match_shape(ProfileKind::Multipole { k }, target, temperature, ion, ALPHA_BRACKET, opts)
}
