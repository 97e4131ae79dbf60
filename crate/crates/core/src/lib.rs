//! Invariant difference schemes for the Schwarz equation and a related
//! second-order ODE: residuals, exact solutions, discrete first integrals,
//! symmetry flows and the discrete Bäcklund transformation between them.

pub mod backlund;
pub mod cli;
pub mod continuous;
pub mod error;
pub mod integrals;
pub mod newton;
pub mod schemes;
pub mod stencil;
pub mod symmetry;

pub use error::{Error, Result};
