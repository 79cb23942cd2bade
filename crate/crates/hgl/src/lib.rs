//! File formats and the command-line pipeline around [`hgl_core`].
//!
//! [`formats`] reads and writes corpora, dictionaries, noise profiles,
//! trained models, instance tables and reports. [`cli`] wires them to the
//! core library as the `hgl` subcommands.

pub mod cli;
pub mod error;
pub mod formats;

pub use error::{Error, ParseError, Result};
