pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
mod io;
pub mod metric;
pub mod pipeline;
pub mod selfcheck;
pub mod solver;

pub use error::{ReidError, Result};
