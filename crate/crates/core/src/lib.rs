//! Numerical laboratory for diagonal flows on the space of unimodular lattices.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlation;
pub mod error;
pub mod height;
pub mod homspace;
pub mod largedev;
pub mod quadrature;
pub mod returns;
pub mod rng;
pub mod rootsys;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
