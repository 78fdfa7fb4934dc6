//! Companion crate for `augdecomp-core`: text bundle and CSV formats, a
//! rayon block executor, the two benchmark experiments and the
//! `augdecomp` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod executor;
pub mod experiments;
pub mod io;

pub use augdecomp_core as core;
