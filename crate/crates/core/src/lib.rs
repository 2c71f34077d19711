//! Computational tools for singular vectors on self-similar fractals.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod exponents;
pub mod exterior;
pub mod ifs;
pub mod linalg;
pub mod sampling;
pub mod transversality;

pub use error::{Budgeted, Error, Result};
