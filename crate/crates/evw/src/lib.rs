//! File formats, parallel sweeps and the command line on top of `evw-core`.
//!
//! - [`formats`]: JSON network, parameter and scenario files.
//! - [`loadcsv`]: household load CSV files (wide or long layout).
//! - [`output`]: artifact formatting and input digests.
//! - [`parallel`]: sweeps over a thread pool sized by `EVW_THREADS`.
//! - [`cli`]: the `evw` executable.

pub mod cli;
pub mod error;
pub mod formats;
pub mod loadcsv;
pub mod output;
pub mod parallel;

pub use error::{EvwError, Result};
