//! Divided-difference Schur multipliers, symmetric operator norms, and
//! finite-stage certificates for commutator estimates that fail under C¹
//! functional calculus in ideals with trivial Boyd indices.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod construct;
pub mod error;
pub mod funcs;
pub mod matrix;
pub mod pipeline;
pub mod random;
pub mod schur;
pub mod svd;
pub mod symnorm;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
