//! Numerical laboratory for Davies thermalization semigroups of 1D commuting
//! spin chains.
//!
//! The crate builds Gibbs states and Davies generators for finite-range
//! commuting Hamiltonians at exactly diagonalizable sizes, measures entropy
//! production, mixing operators, subalgebra indices and detectability
//! constants, and assembles the resulting relative-entropy decay certificate.

pub mod algebra;
pub mod config;
pub mod davies;
pub mod entropy;
pub mod error;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sites;
pub mod spectral;
pub mod superop;

pub use error::{Error, Result};
pub use matrix::Op;
pub use sites::{Interval, SiteSpace};
pub use superop::{Picture, SuperOp};
