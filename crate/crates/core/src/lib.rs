//! Numerical laboratory for the local semicircle law of Hermitian Wigner
//! matrices: closed-form semicircle quantities, seeded sampling, resolvent
//! identities, the minor expansion of resolvent entries and Monte Carlo
//! studies of fluctuation, counting, rigidity and edge scaling.

pub mod error;
pub mod semicircle;
pub mod ensemble;
pub mod spectral;
pub mod expansion;
pub mod experiments;
pub mod cli;

pub use error::{Error, Result};
