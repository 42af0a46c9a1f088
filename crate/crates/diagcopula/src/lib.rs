//! Command line front end, file formats and parallel drivers for
//! [`diagcopula_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod io;
pub mod par;

pub use diagcopula_core as core;
