//! Arithmetic spherical harmonics: Hecke eigenfunctions on the quotient of
//! S^2 by the tetrahedral rotation group coming from the Hurwitz quaternions,
//! with cap averages, variances, discrepancy statistics, and the theta lift
//! to a classical modular form.

pub mod error;
pub mod harmonics;
pub mod hecke;
pub mod kernels;
pub mod stats;
pub mod persist;
pub mod pipeline;
pub mod theta;
pub mod hurwitz;
pub mod quad;

pub use error::{Error, Result};
