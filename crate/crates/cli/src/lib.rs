//! Experiment runner for the RIS multiport model: single- and two-element
//! tables, spacing sweeps, Z/S file conversion and transfer evaluation.

pub mod blockfile;
pub mod error;
pub mod experiments;
pub mod scenario_file;
pub mod table;

pub use error::{CliError, Result};
pub use table::{Format, Table};
