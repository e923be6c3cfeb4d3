// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod postprocess;
pub mod protocol;
pub mod rates;
pub mod scheme;
pub mod sim;

pub use error::{Error, Result};
