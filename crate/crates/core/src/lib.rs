//! Intrinsic ultracontractivity rates for diffusion semigroups on
//! rotationally symmetric model manifolds, with a radial spectral and heat
//! solver that checks them numerically.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod heat;
pub mod numerics;
pub mod profiles;
pub mod spectral;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
