//! Modelling of linear radiofrequency multipole ion traps: single-ion
//! dynamics in the full RF field and in the pseudopotential, stability and
//! adiabaticity analysis, and the cold-fluid equilibrium of large clouds.
//!
//! All quantities are SI unless a name says otherwise.

// `!(x > 0.0)` is used throughout to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fluid;
pub mod io;
pub mod model;
pub mod ode;

pub use error::{Error, Result};
