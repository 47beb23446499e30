use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "bpa", version, about = "Breakpoint recommendations for MiniLang programs")]
pub struct Cli {
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Solution store (newline-delimited JSON).
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recommend breakpoints for a student program that fails a test.
    Advise(AdviseArgs),
    /// Obtain a fixed program from the store or the providers.
    Repair(RepairArgs),
    /// Run an evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Manage the solution store.
    #[command(subcommand)]
    Store(StoreCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Pretty,
    AnnotatedSource,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Test suite JSON.
    #[arg(long)]
    pub tests: PathBuf,
    /// Id of the failing test.
    #[arg(long)]
    pub failed: String,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Scripted provider fixture: JSON map of request digest to response.
    #[arg(long)]
    pub mock: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    pub student: PathBuf,
    /// Fixed program; when absent the fix is obtained by repair.
    #[arg(long)]
    pub fixed: Option<PathBuf>,
    #[command(flatten)]
    pub test: TestArgs,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub providers: ProviderArgs,
    /// Write the student's dependence graph in DOT format.
    #[arg(long)]
    pub emit_graph: Option<PathBuf>,
    #[arg(long)]
    pub max_breakpoints: Option<usize>,
    /// Whether heuristic 1 adds the statement after a changed construct.
    #[arg(long, value_name = "BOOL")]
    pub h1_include_exit: Option<bool>,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    pub student: PathBuf,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub providers: ProviderArgs,
    /// Execute the generated candidates and upload passing ones.
    #[arg(long)]
    pub validate: bool,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Breakpoint precision/recall over a labeled corpus.
    Breakpoints(EvalBreakpointsArgs),
    /// Classifier precision/recall over predicted/actual verdict pairs.
    Classifier(EvalClassifierArgs),
}

#[derive(Debug, Args)]
pub struct EvalOutput {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 when the micro-averaged F1 is below this value.
    #[arg(long)]
    pub assert_min_f1: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalBreakpointsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub max_breakpoints: Option<usize>,
    #[arg(long, value_name = "BOOL")]
    pub h1_include_exit: Option<bool>,
    #[command(flatten)]
    pub output: EvalOutput,
}

#[derive(Debug, Args)]
pub struct EvalClassifierArgs {
    /// JSON array of `{"predicted_pass", "actual_pass"}` objects.
    pub verdicts: PathBuf,
    #[command(flatten)]
    pub output: EvalOutput,
}

#[derive(Debug, Subcommand)]
pub enum StoreCommand {
    /// Create an empty store.
    Init,
    /// Execute a solution against its suite and store it if it passes.
    Add(StoreAddArgs),
    /// Print the best validated match for a program.
    Query(StoreQueryArgs),
    /// Print entry counts per task.
    Stats,
}

#[derive(Debug, Args)]
pub struct StoreAddArgs {
    pub solution: PathBuf,
    #[arg(long)]
    pub tests: PathBuf,
    /// Entry id; generated from the task id when absent.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Debug, Args)]
pub struct StoreQueryArgs {
    pub program: PathBuf,
    #[command(flatten)]
    pub test: TestArgs,
}
