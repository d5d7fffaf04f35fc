// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod infogeo;
pub mod io;
pub mod maxent;
pub mod operator;
pub mod random;

pub use error::{Error, Result};
