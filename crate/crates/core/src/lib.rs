#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN on purpose

pub mod cli;
pub mod datagen;
pub mod error;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod select;
pub mod stats;
pub mod train;

pub use error::{Error, Result};
