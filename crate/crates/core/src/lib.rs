//! Numerical toolkit for the adiabatic limit of Dirac eta invariants on
//! circle bundles over finite-area hyperbolic surfaces.

pub mod error;
pub mod eta;
pub mod heat;
pub mod quad;
pub mod selberg;
pub mod specfn;
pub mod spectrum;
pub mod surface;

pub use error::{Error, Result};
