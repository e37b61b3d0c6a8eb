//! `ssiv` command-line front end: compile `.sz` models, check their formulas,
//! run library scenarios, emit NuSMV/Graphviz programs and replay reports.

mod commands;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ssiv_core::graph::DEFAULT_MAX_STATES;

pub use commands::run;

/// Every formula holds / every scenario matches its expectations.
pub const EXIT_OK: i32 = 0;
/// Some formula fails, a scenario mismatches or a trace does not replay.
pub const EXIT_FAIL: i32 = 1;
/// Diagnostics, IO errors or unusable input.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ssiv", version, about = "Model checker for .sz system-graph models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile `.sz` files and check the formulas of their main control system.
    Check(CheckArgs),
    /// Run library scenarios and compare verdicts with their expectations.
    Scenario(ScenarioArgs),
    /// Write the NuSMV or Graphviz program of a composition.
    Emit(EmitArgs),
    /// List the library scenarios.
    List(ListArgs),
    /// Re-execute every trace of a JSON report against its model.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExploreArgs {
    /// Abort exploration beyond this many reachable states.
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    pub max_states: usize,
    /// Worker threads for state-space exploration.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitFormat {
    Smv,
    Dot,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Source files, compiled together as one unit.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Additional formula, optionally prefixed with `ctl` or `ltl`.
    #[arg(long = "formula", short = 'f')]
    pub formulas: Vec<String>,
    #[command(flatten)]
    pub explore: ExploreArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub trace_format: TraceFormat,
    /// Write the JSON report here (`-` for stdout instead of the summary).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Where the NuSMV program for LTL formulas goes.
    #[arg(long)]
    pub smv_out: Option<PathBuf>,
    /// NuSMV binary used to decide LTL formulas (fallback: `SSIV_NUSMV`).
    #[arg(long)]
    pub nusmv_path: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario id (see `ssiv list`).
    #[arg(required_unless_present = "all", conflicts_with = "all")]
    pub id: Option<String>,
    /// Run every scenario.
    #[arg(long)]
    pub all: bool,
    /// Freeze the attacker instance and expect every formula to hold.
    #[arg(long)]
    pub baseline: bool,
    /// Also decide every formula with NuSMV and compare.
    #[arg(long)]
    pub cross_check: bool,
    /// NuSMV binary for `--cross-check` (fallback: `SSIV_NUSMV`).
    #[arg(long)]
    pub nusmv_path: Option<PathBuf>,
    /// Model library root instead of the built-in one.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Directory receiving one file per counterexample.
    #[arg(long, default_value = "traces")]
    pub trace_dir: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub trace_format: TraceFormat,
    /// Write the JSON report here (`-` for stdout instead of the summary).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub explore: ExploreArgs,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    /// Source files; omit when using `--scenario`.
    #[arg(required_unless_present = "scenario", conflicts_with = "scenario")]
    pub files: Vec<PathBuf>,
    /// Emit a library scenario instead of files.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: EmitFormat,
    /// Output path (default `main.smv` or `main.dot`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long)]
    pub models: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// JSON report written by `check` or `scenario`.
    pub report: PathBuf,
}
