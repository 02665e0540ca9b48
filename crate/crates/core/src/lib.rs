//! Fast evaluation of beam fields scattered by quasi-cylindrical PEC
//! surfaces with a cylindrical Taylor-interpolation FFT.

pub mod error;
pub mod excitation;
pub mod farfield;
pub mod field;
pub mod geometry;
pub mod nearfield;
pub mod oracle;
pub mod scenario;
pub mod specfun;
pub mod spectral;
pub mod vector;

pub use error::{Error, Result};
