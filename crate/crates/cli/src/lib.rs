//! Pipeline commands: explore → estimate → plan → execute, with every
//! artifact written under one output directory.

mod args;
mod config;
mod error;
mod pipeline;
mod records;

pub use args::{Cli, Command, CommonArgs, FixtureName};
pub use config::{parse_goal, GoalEntry, PipelineConfig};
pub use error::{CliError, CliResult};
pub use pipeline::{
    cmd_estimate, cmd_explore, cmd_fixture, cmd_plan, cmd_run_all, run, RunManifest,
};
pub use records::{load_records, save_records};
