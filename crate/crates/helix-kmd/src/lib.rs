#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod central;
pub mod error;
pub mod grid;
pub mod harness;
pub mod helical;
pub mod kmd;
pub mod lift;
pub mod linear;
pub mod numerics;
pub mod stream;

pub use error::{Error, Result};
