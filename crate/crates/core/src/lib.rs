// `!(x < bound)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod gse;
pub mod inference;
mod optim;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use gse::{estimate, GseConfig, GseFit, MemoryVector};
pub use spectral::{periodogram, Periodogram, TimeSeries};
