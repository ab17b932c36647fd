//! P1 finite elements for periodic advection-diffusion on the torus
//! `[0, L]^3`, with fixed, residual-adaptive and two-grid adaptive
//! POD-Galerkin reduced models.

// `!(x > 0.0)` rejects NaN; small element matrices read best with index loops.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adaptive;
pub mod assembly;
pub mod config;
pub mod error;
pub mod experiment;
pub mod field;
pub mod integrator;
pub mod mesh;
pub mod pod;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
