//! Configuration, experiment dispatch and result artifacts of the batch front end.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Experiment, InitialState, RunConfig};
pub use output::{config_hash, Series, RESULT_FILE};
pub use run::{run, RunOutcome, RunRecord};
