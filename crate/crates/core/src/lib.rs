// `!(x > y)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bae;
pub mod config;
pub mod error;
pub mod floquet;
pub mod linfield;
pub mod model;
pub mod perturb;
pub mod quad;
pub mod run;
pub mod spectra;

pub use error::{Result, SimError};
