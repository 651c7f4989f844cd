//! Cold-fluid equilibrium of a large ion cloud: reduced radial profiles,
//! linear-density matching and physical scaling.

mod matching;
mod profile;
mod scaling;

pub use matching::{
    match_alpha, match_gamma, match_shape, MatchedProfile, ALPHA_BRACKET, GAMMA_BRACKET,
    MATCH_MAX_ITER, MATCH_TOLERANCE,
};
pub use profile::{
    integrate_profile, integrate_profile_multipole, integrate_profile_quadrupole,
    reduced_linear_density, ProfileKind, ProfileOptions, ReducedProfile, DEFAULT_EDGE_THRESHOLD,
    PSI_CAP, RHO_START, STEP_FLOOR,
};
pub use scaling::{
    adiabatic_radius, cold_limit_density, cold_limit_radius, fit_ratio, multipole_debye_length,
    quadrupole_limit_radius, scale_multipole, scale_quadrupole, scale_quadrupole_with_frequency,
    solve_cloud, ScaledCloud,
};
