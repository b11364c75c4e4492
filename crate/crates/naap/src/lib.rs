//! Dataset IO, experiment grids and report generation on top of
//! [`naap_core`].

pub mod error;
pub mod harness;
pub mod io;

pub use error::{DataError, Error, ExitCode, Result};
pub use naap_core as core;
