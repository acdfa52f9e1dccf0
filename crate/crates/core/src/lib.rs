#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bbs;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod grid;
pub mod io;
pub mod operators;
pub mod precond;
pub mod run;

pub use error::{InpaintError, Result};
