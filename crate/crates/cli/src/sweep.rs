use std::fmt::Write as _;
use std::io::Write;

use beldim::dims::SearchOptions;
use beldim::zoo::builtin;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cli::{Agent, Generator, SweepArgs, SweepParam};
use crate::output::{fmt_opt, parse_list, read_settings_agent, spread, to_json_text, write_atomic};
use crate::run::{aggregate_json, metric_name, prepare, prepared_json, run_seed, SeedOutcome};
use crate::settings::resolve;
use crate::{usage, CliResult};

pub const DEFAULT_FACT_EPS: &str = "0.25";

pub fn cmd_sweep(args: &SweepArgs, log: &mut dyn Write) -> CliResult<()> {
    let grid: Vec<usize> = parse_list(&args.grid, "grid")?;
    if grid.contains(&0) {
        return usage("grid values must be positive");
    }
    let (csv, summary) = match args.over {
        SweepParam::K => sweep_episodes(args, &grid)?,
        SweepParam::M => {
            let generator = match args.generator {
                Some(Generator::Random) | None => return usage("--over m needs --generator prop34, appF_a or appF_b"),
                Some(g) => g,
            };
            if args.agent.source.instance.is_some() || args.agent.source.builtin.is_some() {
                return usage("--over m builds its own instances; drop --instance/--builtin");
            }
            match read_settings_agent(&args.agent)? {
                Some(_) => sweep_zoo_runs(args, generator, &grid)?,
                None => sweep_facts(args, generator, &grid)?,
            }
        }
    };
    write_atomic(&args.out.join("sweep.csv"), &csv)?;
    write_atomic(&args.out.join("sweep.json"), &to_json_text(&summary)?)?;
    writeln!(log, "{} grid point(s); wrote sweep.csv and sweep.json to {}", grid.len(), args.out.display())?;
    Ok(())
}

fn sweep_episodes(args: &SweepArgs, grid: &[usize]) -> CliResult<(String, Value)> {
    let settings = resolve(&args.agent, Some(Agent::Golf))?;
    if !settings.agent.is_golf() {
        return usage("--over K sweeps golf or vgolf");
    }
    let p = prepare(settings)?;
    let jobs: Vec<(usize, u64)> = grid.iter().flat_map(|&k| p.settings.seeds.iter().map(move |&s| (k, s))).collect();
    let outcomes: Vec<SeedOutcome> = jobs.par_iter().map(|&(k, seed)| run_seed(&p, seed, k)).collect();
    let per_point = p.settings.seeds.len();
    let mut csv = String::from("K,seeds,ok,median,q1,q3\n");
    let mut points = Vec::new();
    for (k, chunk) in grid.iter().zip(outcomes.chunks(per_point)) {
        let agg = aggregate_json(p.settings.agent, chunk);
        let values: Vec<f64> = chunk.iter().filter_map(|o| o.metric).collect();
        let sp = spread(&values);
        let ok = chunk.iter().filter(|o| o.status == "ok").count();
        let _ = writeln!(csv, "{k},{},{ok},{},{},{}", chunk.len(), fmt_opt(sp.median), fmt_opt(sp.q1), fmt_opt(sp.q3));
        points.push(json!({
            "K": k,
            "aggregate": agg,
            "per_seed": chunk.iter().map(|o| json!({ "seed": o.seed, "status": o.status, "value": o.metric })).collect::<Vec<_>>(),
        }));
    }
    let summary = json!({
        "command": "sweep",
        "over": "K",
        "grid": grid,
        "metric": metric_name(p.settings.agent),
        "config": p.settings,
        "prepared": prepared_json(&p),
        "points": points,
    });
    Ok((csv, summary))
}

fn sweep_zoo_runs(args: &SweepArgs, generator: Generator, grid: &[usize]) -> CliResult<(String, Value)> {
    let mut csv = String::from("m,d,phase_bound,seeds,ok,median,max,within_bound,audit_valid\n");
    let mut points = Vec::new();
    let mut metric = "";
    let mut config = Value::Null;
    for &m in grid {
        let mut agent_args = args.agent.clone();
        agent_args.source.builtin = Some(format!("{}:{m}", generator.name()));
        let settings = resolve(&agent_args, None)?;
        metric = metric_name(settings.agent);
        config = serde_json::to_value(&settings)?;
        let p = prepare(settings)?;
        let outcomes: Vec<SeedOutcome> = p.settings.seeds.par_iter().map(|&s| run_seed(&p, s, p.settings.episodes)).collect();
        let values: Vec<f64> = outcomes.iter().filter_map(|o| o.metric).collect();
        let sp = spread(&values);
        let ok = outcomes.iter().filter(|o| o.status == "ok").count();
        let (d, bound) = match &p.olive {
            Some(o) => (Some(o.d), Some(o.d * p.instance.mdp.horizon() + 1)),
            None => (None, None),
        };
        let flag = |key: &str| outcomes.iter().all(|o| o.summary.get(key).is_none_or(|v| v.as_bool().unwrap_or(true)));
        let within = flag("within_phase_bound");
        let audit_ok = outcomes
            .iter()
            .all(|o| o.summary.get("audit").and_then(|a| a.get("valid")).is_none_or(|v| v.as_bool() == Some(true)));
        let max = values.iter().copied().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        let _ = writeln!(
            csv,
            "{m},{},{},{},{ok},{},{},{within},{audit_ok}",
            d.map(|x| x.to_string()).unwrap_or_default(),
            bound.map(|x| x.to_string()).unwrap_or_default(),
            outcomes.len(),
            fmt_opt(sp.median),
            fmt_opt(max),
        );
        points.push(json!({
            "m": m,
            "prepared": prepared_json(&p),
            "aggregate": aggregate_json(p.settings.agent, &outcomes),
            "per_seed": outcomes.iter().map(|o| o.summary.clone()).collect::<Vec<_>>(),
        }));
    }
    let summary = json!({
        "command": "sweep",
        "over": "m",
        "generator": generator.name(),
        "grid": grid,
        "metric": metric,
        "config": config,
        "points": points,
    });
    Ok((csv, summary))
}

fn sweep_facts(args: &SweepArgs, generator: Generator, grid: &[usize]) -> CliResult<(String, Value)> {
    let eps_values: Vec<f64> = parse_list(args.fact_eps.as_deref().unwrap_or(DEFAULT_FACT_EPS), "fact-eps")?;
    if eps_values.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return usage("fact scales must be positive");
    }
    let mut csv = String::from("m,fact,eps,observed,exact,holds\n");
    let mut points = Vec::new();
    for &m in grid {
        let inst = builtin(&format!("{}:{m}", generator.name()))?;
        let checks = inst.verify(&eps_values, SearchOptions::default())?;
        for c in &checks {
            let _ = writeln!(
                csv,
                "{m},\"{}\",{},{},{},{}",
                c.fact.describe().replace('"', "'"),
                fmt_opt(c.eps),
                c.observed,
                c.exact,
                c.holds
            );
        }
        points.push(json!({ "m": m, "instance_name": inst.name, "checks": checks }));
    }
    let summary = json!({
        "command": "sweep",
        "over": "m",
        "generator": generator.name(),
        "grid": grid,
        "fact_eps": eps_values,
        "points": points,
    });
    Ok((csv, summary))
}
