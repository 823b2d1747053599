//! Numerical engine for hidden-variable recurrent fractal interpolation
//! functions with function contractivity factors.
//!
//! The pipeline: validate interpolation data and a region/domain partition
//! ([`model`]), assemble the recurrent system with its connection matrix
//! ([`construction`]), compute the interpolant pair on a grid with
//! independent orbit and chaos-game oracles ([`evaluator`]), certify Holder
//! smoothness constants ([`smoothness`]), and certify sup-norm stability
//! bounds under data perturbations ([`stability`]). File formats live in
//! [`io`], curve rendering in [`svg`].

pub mod construction;
pub mod error;
pub mod evaluator;
pub mod io;
pub mod map;
pub mod model;
pub mod smoothness;
pub mod stability;
pub mod svg;
pub mod testing;

pub use error::{Error, Result};
