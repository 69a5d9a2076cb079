//! File formats, experiment drivers and the command-line front end for
//! [`qbayes_core`].

#![deny(missing_debug_implementations)]

pub mod config;
mod error;
pub mod harness;
pub mod io;

pub use error::{Error, Result};
