// `!(x > 0.0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod operators;
pub mod sparse;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
