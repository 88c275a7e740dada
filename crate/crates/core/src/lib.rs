//! Transparent SU(2) connections on a flat torus.
//!
//! Fields on the unit tangent bundle are finite Fourier series in the fiber
//! angle with spectrally represented coefficients ([`thetafield`]). The
//! [`operators`] module supplies the frame fields and the correspondence
//! `A = −X(u)u⁻¹`, [`backlund`] the raising and lowering steps, and
//! [`transport`] an independent check of transparency by integrating
//! parallel transport around closed geodesics.

pub mod algebra;
pub mod backlund;
pub mod container;
pub mod descent;
pub mod error;
pub mod operators;
mod spectral;
pub mod thetafield;
pub mod transport;
pub mod weierstrass;

pub use algebra::{Mat2, Su2, Su2Algebra};
pub use num_complex::Complex64;
pub use error::{Error, Result};
pub use thetafield::{
    degree_of, multiply, parity_of, Connection, InvolutionField, Metric, Parity, ThetaField,
    TorusGrid,
};
