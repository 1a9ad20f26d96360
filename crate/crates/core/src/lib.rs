//! Numerical laboratory for Trotter-projection products `(e^{tA/n} P)^n`
//! on truncated sequence spaces.

pub mod cli;
pub mod config;
pub mod error;
pub mod hexfloat;
pub mod projections;
pub mod renorm;
pub mod sampling;
pub mod serial;
pub mod spaces;
pub mod trotter;
pub mod witness;

pub use error::{Error, Result};
