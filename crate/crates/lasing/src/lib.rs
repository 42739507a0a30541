//! Parameter sweeps, table output and the acceptance checks for the
//! one-emitter laser model in [`lasing_core`].

pub mod acceptance;
mod error;
pub mod output;
pub mod sweep;

pub use error::{Error, Result};
pub use lasing_core as core;

/// Version string stamped into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
