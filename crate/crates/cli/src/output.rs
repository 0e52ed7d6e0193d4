//! Shared plumbing: thread pool, atomic file writes, seed lists, instance
//! loading and order statistics.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use beldim::io::load_instance;
use beldim::zoo::{builtin, NamedInstance};
use serde::Serialize;

use crate::cli::InstanceArgs;
use crate::{usage, CliError, CliResult};

pub const THREADS_ENV: &str = "BELDIM_THREADS";

/// Caps the global pool at `BELDIM_THREADS` when set. A pool that already
/// exists (repeated in-process calls) is left as is.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")),
    };
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Parses `a..b` (half-open) or `s1,s2,...`.
pub fn parse_seed_list(text: &str) -> CliResult<Vec<u64>> {
    let text = text.trim();
    let bad = || CliError::Usage(format!("bad seed list {text:?}; expected a..b or comma-separated integers"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if seeds.is_empty() {
        return usage("seed list is empty");
    }
    Ok(seeds)
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    let values: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Usage(format!("bad {what} value {s:?}"))))
        .collect::<CliResult<_>>()?;
    if values.is_empty() {
        return usage(format!("{what} is empty"));
    }
    Ok(values)
}

/// Exactly one of `--instance` and `--builtin` must be given.
pub fn load_source(source: &InstanceArgs) -> CliResult<NamedInstance> {
    match (&source.instance, &source.builtin) {
        (Some(path), None) => Ok(load_instance(path)?),
        (None, Some(name)) => Ok(builtin(name)?),
        (Some(_), Some(_)) => usage("give either --instance or --builtin, not both"),
        (None, None) => usage("an instance is required (--instance or --builtin)"),
    }
}

/// The agent named by the flags or the config file, if any.
pub fn read_settings_agent(args: &crate::cli::AgentArgs) -> CliResult<Option<crate::cli::Agent>> {
    Ok(args.agent.or(crate::settings::read_file_settings(args)?.agent))
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub count: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
}

pub fn spread(values: &[f64]) -> Spread {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Spread { count: 0, median: None, q1: None, q3: None, iqr: None };
    }
    let (q1, q3) = (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75));
    Spread { count: sorted.len(), median: Some(quantile_sorted(&sorted, 0.5)), q1: Some(q1), q3: Some(q3), iqr: Some(q3 - q1) }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
