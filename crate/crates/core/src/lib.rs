//! Direct scattering for the Zakharov-Shabat system of the NLS equation.
//!
//! Given a compactly supported initial potential, the crate computes the
//! auxiliary Volterra kernels, the left and right Marchenko kernels, the
//! scattering matrix with the Fourier transforms of its reflection
//! coefficients, and the bound states with their norming constants.

pub mod error;
pub mod marchenko;
pub mod pencil;
pub mod pipeline;
pub mod potential;
pub mod quadrature;
pub mod reference;
pub mod scattering;
pub mod volterra;

pub use error::{Error, Result};
pub use potential::{Case, Mesh, PotentialGrid};
