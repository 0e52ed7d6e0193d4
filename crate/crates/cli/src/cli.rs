use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "beldim", version, about = "Bellman Eluder dimension toolkit: instances, dimension reports and agent runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a zoo instance to JSON and print its facts.
    Gen(GenArgs),
    /// Compute one complexity measure and print a JSON report.
    Dims(DimsArgs),
    /// Run an agent over a seed list; one CSV per seed plus summary.json.
    Run(RunArgs),
    /// Aggregate runs or fact checks over a grid of K or m.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Prop34,
    #[value(name = "appF_a")]
    AppFA,
    #[value(name = "appF_b")]
    AppFB,
    Random,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Prop34 => "prop34",
            Generator::AppFA => "appF_a",
            Generator::AppFB => "appF_b",
            Generator::Random => "random",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub generator: Generator,
    /// Size parameter of the prop34 and appF constructions.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long = "S")]
    pub num_states: Option<usize>,
    #[arg(long = "A")]
    pub num_actions: Option<usize>,
    #[arg(long = "H")]
    pub horizon: Option<usize>,
    /// Random seed tables per step for the closure class.
    #[arg(long = "seeds")]
    pub n_seeds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; defaults to `<name>.json` in the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where an instance comes from.
#[derive(Debug, Clone, Args, Default)]
pub struct InstanceArgs {
    /// Instance JSON written by `gen`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Built-in instance: prop34:m, appF_a:m, appF_b:m or random:S:A:H:n:seed.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureArg {
    Eluder,
    De,
    Be,
    Vbe,
    Rank,
    Vrank,
    Effdim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    #[value(name = "DF")]
    Df,
    #[value(name = "Ddelta")]
    Ddelta,
}

#[derive(Debug, Args)]
pub struct DimsArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    #[arg(long, value_enum)]
    pub measure: MeasureArg,
    /// Scale; required by every measure except rank and vrank.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Distribution family for be and vbe.
    #[arg(long, value_enum, default_value = "DF")]
    pub family: FamilyArg,
    /// Relative singular-value tolerance for rank and vrank.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Search-node budget; exhausted searches report `"exact": false`.
    #[arg(long)]
    pub node_cap: Option<u64>,
    /// JSON `{"functions": [[..]], "distributions": [[..]]}` for `de`.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// JSON `{"vectors": [[..]]}` for `effdim`.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Golf,
    Vgolf,
    Olive,
    Volive,
}

impl Agent {
    pub fn name(self) -> &'static str {
        match self {
            Agent::Golf => "golf",
            Agent::Vgolf => "vgolf",
            Agent::Olive => "olive",
            Agent::Volive => "volive",
        }
    }

    pub fn is_golf(self) -> bool {
        matches!(self, Agent::Golf | Agent::Vgolf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    MonteCarlo,
    Exact,
}

/// Agent parameters; every field may also come from the config file.
#[derive(Debug, Clone, Args, Default)]
pub struct AgentArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub agent: Option<Agent>,
    /// Seed list: `a..b` (half-open) or comma-separated.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Add the optimal Q-function to the class if it is missing.
    #[arg(long)]
    pub include_qstar: bool,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// GOLF episodes K.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// GOLF confidence width; default `2 ln(|F u G| K H / 0.01)`.
    #[arg(long)]
    pub beta: Option<f64>,
    /// OLIVE target accuracy for the default thresholds and sample sizes.
    #[arg(long)]
    pub eps: Option<f64>,
    /// OLIVE failure probability for the default sample sizes.
    #[arg(long)]
    pub delta: Option<f64>,
    /// OLIVE dimension parameter; computed from the instance when absent.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub zeta_act: Option<f64>,
    #[arg(long)]
    pub zeta_elim: Option<f64>,
    #[arg(long)]
    pub n_act: Option<usize>,
    #[arg(long)]
    pub n_elim: Option<usize>,
    #[arg(long)]
    pub max_phases: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub agent: AgentArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// GOLF episode count.
    #[value(name = "K")]
    K,
    /// Zoo size parameter.
    #[value(name = "m")]
    M,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub over: SweepParam,
    /// Comma-separated grid values.
    #[arg(long)]
    pub grid: String,
    /// Zoo construction for `--over m`.
    #[arg(long, value_enum)]
    pub generator: Option<Generator>,
    /// Scales at which fact tables are evaluated for `--over m` without an agent.
    #[arg(long)]
    pub fact_eps: Option<String>,
    #[command(flatten)]
    pub agent: AgentArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
