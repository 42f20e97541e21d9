// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod attacks;
pub mod cli;
pub mod devices;
pub mod error;
pub mod protocol;
pub mod rng;
pub mod states;
pub mod units;

pub use error::{Error, Result};
