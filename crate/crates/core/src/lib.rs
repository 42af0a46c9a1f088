//! Maximum-entropy copulas with a prescribed diagonal section.
//!
//! Given a diagonal section `δ` of a `d`-dimensional copula, this crate
//! builds the copula density of maximal entropy with that diagonal, computes
//! its entropy, samples from it exactly and checks the result numerically.
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod density;
pub mod diagonal;
pub mod entropy;
pub mod error;
pub mod kernel;
mod logit;
pub mod pchip;
pub mod qmc;
pub mod quad;
mod roots;
pub mod sampler;
pub mod special;
pub mod verify;

pub use density::{CdfValue, CopulaModel};
pub use diagonal::{
    make_family, rescale, validate, zero_set, Diagonal, DiagonalSection, Family, FamilySpec,
    IntervalDecomposition, SplicePiece, ValidationReport,
};
pub use error::{Error, Result};
pub use kernel::{KernelConfig, KernelTable};
