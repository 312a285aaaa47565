//! Configuration-driven front end for `fermi-rpa`.

pub mod config;
pub mod run;
pub mod table;

pub use config::{Format, Mode, RunConfig};
pub use run::{run, Output, RunError};
