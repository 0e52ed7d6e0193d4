//! Run configuration: flags override the config file, which overrides the
//! built-in defaults. The resolved record is echoed into every summary.

use std::path::PathBuf;

use beldim::bellman::ExecutionMode;
use serde::{Deserialize, Serialize};

use crate::cli::{Agent, AgentArgs, ModeArg};
use crate::output::parse_seed_list;
use crate::{usage, CliError, CliResult};

pub const DEFAULT_EPISODES: usize = 1000;
pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.01;

/// Config-file form; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub instance: Option<PathBuf>,
    pub builtin: Option<String>,
    pub agent: Option<Agent>,
    pub seeds: Option<Vec<u64>>,
    pub include_qstar: Option<bool>,
    pub mode: Option<ExecutionMode>,
    pub episodes: Option<usize>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub d: Option<usize>,
    pub zeta_act: Option<f64>,
    pub zeta_elim: Option<f64>,
    pub n_act: Option<usize>,
    pub n_elim: Option<usize>,
    pub max_phases: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub instance: Option<PathBuf>,
    pub builtin: Option<String>,
    pub agent: Agent,
    pub seeds: Vec<u64>,
    pub include_qstar: bool,
    pub mode: ExecutionMode,
    pub episodes: usize,
    pub beta: Option<f64>,
    pub eps: f64,
    pub delta: f64,
    pub d: Option<usize>,
    pub zeta_act: Option<f64>,
    pub zeta_elim: Option<f64>,
    pub n_act: Option<usize>,
    pub n_elim: Option<usize>,
    pub max_phases: Option<usize>,
}

fn mode_of(arg: ModeArg) -> ExecutionMode {
    match arg {
        ModeArg::MonteCarlo => ExecutionMode::MonteCarlo,
        ModeArg::Exact => ExecutionMode::Exact,
    }
}

pub fn read_file_settings(args: &AgentArgs) -> CliResult<FileSettings> {
    let Some(path) = &args.config else {
        return Ok(FileSettings::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

/// Merges flags over the file over defaults; `default_agent` applies when
/// neither names an agent.
pub fn resolve(args: &AgentArgs, default_agent: Option<Agent>) -> CliResult<Settings> {
    let file = read_file_settings(args)?;
    // A source given on the command line replaces the file's source entirely.
    let (instance, builtin) = if args.source.instance.is_some() || args.source.builtin.is_some() {
        (args.source.instance.clone(), args.source.builtin.clone())
    } else {
        (file.instance, file.builtin)
    };
    let agent = match args.agent.or(file.agent).or(default_agent) {
        Some(a) => a,
        None => return usage("--agent is required (golf, vgolf, olive or volive)"),
    };
    let seeds = match &args.seeds {
        Some(text) => parse_seed_list(text)?,
        None => file.seeds.unwrap_or_else(|| vec![0]),
    };
    if seeds.is_empty() {
        return usage("seed list is empty");
    }
    let settings = Settings {
        instance,
        builtin,
        agent,
        seeds,
        include_qstar: args.include_qstar || file.include_qstar.unwrap_or(false),
        mode: args.mode.map(mode_of).or(file.mode).unwrap_or_default(),
        episodes: args.episodes.or(file.episodes).unwrap_or(DEFAULT_EPISODES),
        beta: args.beta.or(file.beta),
        eps: args.eps.or(file.eps).unwrap_or(DEFAULT_EPS),
        delta: args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA),
        d: args.d.or(file.d),
        zeta_act: args.zeta_act.or(file.zeta_act),
        zeta_elim: args.zeta_elim.or(file.zeta_elim),
        n_act: args.n_act.or(file.n_act),
        n_elim: args.n_elim.or(file.n_elim),
        max_phases: args.max_phases.or(file.max_phases),
    };
    settings.validate()?;
    Ok(settings)
}

impl Settings {
    pub fn validate(&self) -> CliResult<()> {
        if self.episodes == 0 {
            return usage("episodes must be positive");
        }
        if let Some(b) = self.beta {
            if b.is_nan() || b < 0.0 {
                return usage(format!("beta must be nonnegative, got {b}"));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return usage(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return usage(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.d == Some(0) {
            return usage("d must be positive");
        }
        Ok(())
    }

    pub fn source(&self) -> crate::cli::InstanceArgs {
        crate::cli::InstanceArgs { instance: self.instance.clone(), builtin: self.builtin.clone() }
    }
}
