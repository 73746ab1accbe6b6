#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod cli;
pub mod demand;
pub mod dynamics;
pub mod error;
pub mod illumination;
pub mod lagrangean;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
