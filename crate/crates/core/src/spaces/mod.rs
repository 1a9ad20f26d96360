//! Truncated sequence-space model: vectors, functionals, generators and
//! the semigroup action.

pub mod expm;
mod functional;
mod generator;
pub mod scalar;
mod vector;

pub use expm::CMatrix;
pub use functional::{dual_norm, pairing, Functional};
pub use generator::{
    adjoint_defect, apply_generator, semigroup_apply, Generator, GrowthLaw, OVERFLOW_EXPONENT,
};
pub use vector::{norm, CVec, NormIndex};
