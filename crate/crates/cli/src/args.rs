use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "artiscene",
    version,
    about = "Scene articulation discovery and interaction planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for every random stream of the run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
    /// JSON file with configuration overrides (sections `sim`,
    /// `exploration`, `estimation`, `planner`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Observation noise (meters); overrides the configured value.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Cap on candidate orders sampled for goals of more than 6 parts.
    #[arg(long)]
    pub max_candidates: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureName {
    MinimalDrawer,
    Kitchen,
    OrderingCorner,
    BlockedAisle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explore every annotated handle of a scene and record observations.
    Explore {
        /// Ground-truth scene to explore.
        #[arg(long)]
        scene: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate joint models from exploration records.
    Estimate {
        /// Output directory of `explore`.
        #[arg(long)]
        records: PathBuf,
        /// Ground-truth scene for error metrics.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Plan an interaction sequence reaching a goal.
    Plan {
        /// Scene model to plan in (e.g. an estimated scene).
        #[arg(long)]
        scene: PathBuf,
        /// Goal file, or inline JSON such as `[{"drawer_1": 0.15}]`.
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Explore, estimate, plan and execute in simulation.
    RunAll {
        /// Ground-truth scene; only its base map reaches the planner.
        #[arg(long)]
        scene: PathBuf,
        /// Goal file or inline JSON, as for `plan`.
        #[arg(long)]
        goal: String,
        /// Also run the model-free normal-following heuristic on every goal
        /// part.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a built-in scene to a JSON file.
    Fixture {
        #[arg(value_enum)]
        name: FixtureName,
        /// Destination file.
        #[arg(long)]
        out: PathBuf,
        /// Store a noise-free sensor configuration with the scene.
        #[arg(long)]
        noiseless: bool,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
}
