use std::io::Write;

use beldim::bellman::{ErrorKind, ExecutionMode};
use beldim::dims::{be_dimension, Family, SearchOptions};
use beldim::function_class::{find_optimal, FunctionClass};
use beldim::golf::{run_golf, run_vgolf, GolfConfig};
use beldim::mdp::optimal_q;
use beldim::olive::{audit_independence, run_olive, run_volive, OliveConfig};
use beldim::zoo::NamedInstance;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cli::{Agent, RunArgs};
use crate::output::{load_source, spread, to_json_text, write_atomic};
use crate::settings::{resolve, Settings};
use crate::CliResult;

/// An instance ready to run: the class (possibly with `Q*` added) and, for
/// OLIVE, the dimension parameter and phase template.
pub struct Prepared {
    pub settings: Settings,
    pub instance: NamedInstance,
    pub class: FunctionClass,
    pub qstar_added: bool,
    pub qstar_index: Option<usize>,
    pub olive: Option<OliveSetup>,
}

pub struct OliveSetup {
    pub d: usize,
    /// `given`, `computed` or `computed-lower-bound`.
    pub d_source: &'static str,
    pub template: OliveConfig,
}

fn error_kind(agent: Agent) -> ErrorKind {
    match agent {
        Agent::Golf | Agent::Olive => ErrorKind::Q,
        Agent::Vgolf | Agent::Volive => ErrorKind::V,
    }
}

pub fn prepare(settings: Settings) -> CliResult<Prepared> {
    let instance = load_source(&settings.source())?;
    let (class, qstar_added) = if settings.include_qstar {
        let q = optimal_q(&instance.mdp);
        let before = instance.class.len();
        let (class, _) = instance.class.with_member(q)?;
        let added = class.len() > before;
        (class, added)
    } else {
        (instance.class.clone(), false)
    };
    let olive = if settings.agent.is_golf() {
        None
    } else {
        let horizon = instance.mdp.horizon();
        let (d, d_source) = match settings.d {
            Some(d) => (d, "given"),
            None => {
                let r = be_dimension(
                    &instance.mdp,
                    &class,
                    Family::Rollin,
                    error_kind(settings.agent),
                    settings.eps / horizon as f64,
                    SearchOptions::default(),
                )?;
                (r.value.max(1), if r.exact { "computed" } else { "computed-lower-bound" })
            }
        };
        let actions = (settings.agent == Agent::Volive).then(|| instance.mdp.num_actions());
        let base = OliveConfig::from_theory(settings.eps, d, horizon, class.len(), actions, settings.delta);
        let template = OliveConfig {
            zeta_act: settings.zeta_act.unwrap_or(base.zeta_act),
            zeta_elim: settings.zeta_elim.unwrap_or(base.zeta_elim),
            n_act: settings.n_act.unwrap_or(base.n_act),
            n_elim: settings.n_elim.unwrap_or(base.n_elim),
            max_phases: settings.max_phases.unwrap_or(base.max_phases),
            mode: settings.mode,
            seed: 0,
        };
        template.validate()?;
        Some(OliveSetup { d, d_source, template })
    };
    let qstar_index = find_optimal(&instance.mdp, &class);
    Ok(Prepared { settings, instance, class, qstar_added, qstar_index, olive })
}

/// One seed's outcome. Aborted runs carry their reason in `status`.
pub struct SeedOutcome {
    pub seed: u64,
    pub status: String,
    pub csv: Option<String>,
    pub summary: Value,
    /// Cumulative regret (GOLF), output suboptimality (V-type GOLF) or phase
    /// count (OLIVE).
    pub metric: Option<f64>,
    pub qstar_kept: Option<bool>,
}

pub fn metric_name(agent: Agent) -> &'static str {
    match agent {
        Agent::Golf => "cum_regret",
        Agent::Vgolf => "output_suboptimality",
        Agent::Olive | Agent::Volive => "phases",
    }
}

pub fn run_seed(p: &Prepared, seed: u64, episodes: usize) -> SeedOutcome {
    let s = &p.settings;
    let aborted = |e: beldim::Error| SeedOutcome {
        seed,
        status: format!("aborted: {e}"),
        csv: None,
        summary: json!({ "seed": seed, "status": format!("aborted: {e}") }),
        metric: None,
        // An empty version space cannot contain Q*.
        qstar_kept: p.qstar_index.map(|_| false),
    };
    if s.agent.is_golf() {
        let cfg = GolfConfig { beta: s.beta, mode: s.mode, ..GolfConfig::new(episodes, seed) };
        let out = match s.agent {
            Agent::Golf => run_golf(&p.instance.mdp, &p.class, &cfg),
            _ => run_vgolf(&p.instance.mdp, &p.class, &cfg),
        };
        match out {
            Ok(r) => {
                let metric = match s.agent {
                    Agent::Golf => r.cumulative_regret(),
                    _ => Some(r.optimal_value - r.output_value),
                };
                let kept = r.qstar_index.map(|_| r.episodes.iter().all(|e| e.qstar_in_b == Some(true)));
                let mut summary = r.summary_json();
                summary["status"] = json!("ok");
                SeedOutcome { seed, status: "ok".into(), csv: Some(r.to_csv()), summary, metric, qstar_kept: kept }
            }
            Err(e) => aborted(e),
        }
    } else {
        let setup = p.olive.as_ref().expect("olive setup prepared");
        let cfg = OliveConfig { seed, ..setup.template.clone() };
        let out = match s.agent {
            Agent::Olive => run_olive(&p.instance.mdp, &p.class, &cfg),
            _ => run_volive(&p.instance.mdp, &p.class, &cfg),
        };
        match out {
            Ok(r) => {
                let audit = audit_independence(&r, &p.instance.mdp, &p.class, error_kind(s.agent), None);
                let bound = setup.d * p.instance.mdp.horizon() + 1;
                let mut summary = r.summary_json();
                summary["status"] = json!("ok");
                summary["phase_bound"] = json!(bound);
                summary["within_phase_bound"] = json!(r.phases.len() <= bound);
                summary["audit"] = json!({
                    "eps_prime": audit.eps_prime,
                    "valid": audit.is_valid(),
                    "max_activations": audit.max_activations(),
                    "steps": audit.steps,
                });
                SeedOutcome {
                    seed,
                    status: "ok".into(),
                    csv: Some(r.to_csv()),
                    summary,
                    metric: Some(r.phases.len() as f64),
                    qstar_kept: r.qstar_survived,
                }
            }
            Err(e) => aborted(e),
        }
    }
}

/// Runs every seed in parallel; results come back in seed-list order.
pub fn run_all(p: &Prepared, episodes: usize) -> Vec<SeedOutcome> {
    p.settings.seeds.par_iter().map(|&seed| run_seed(p, seed, episodes)).collect()
}

pub fn prepared_json(p: &Prepared) -> Value {
    json!({
        "instance_name": p.instance.name,
        "class_size": p.class.len(),
        "qstar_added": p.qstar_added,
        "qstar_index": p.qstar_index,
        "horizon": p.instance.mdp.horizon(),
        "num_states": p.instance.mdp.num_states(),
        "num_actions": p.instance.mdp.num_actions(),
        "olive": p.olive.as_ref().map(|o| json!({ "d": o.d, "d_source": o.d_source, "config": o.template })),
    })
}

pub fn aggregate_json(agent: Agent, outcomes: &[SeedOutcome]) -> Value {
    let values: Vec<f64> = outcomes.iter().filter_map(|o| o.metric).collect();
    let kept: Vec<bool> = outcomes.iter().filter_map(|o| o.qstar_kept).collect();
    json!({
        "metric": metric_name(agent),
        "spread": spread(&values),
        "ok": outcomes.iter().filter(|o| o.status == "ok").count(),
        "aborted": outcomes.iter().filter(|o| o.status != "ok").count(),
        "qstar_kept": kept.iter().filter(|k| **k).count(),
        "qstar_tracked": kept.len(),
    })
}

pub fn seed_csv_name(agent: Agent, seed: u64) -> String {
    format!("{}_seed{seed}.csv", agent.name())
}

pub fn cmd_run(args: &RunArgs, log: &mut dyn Write) -> CliResult<()> {
    let settings = resolve(&args.agent, None)?;
    if settings.mode == ExecutionMode::Exact && settings.agent.is_golf() && settings.seeds.len() > 1 {
        writeln!(log, "note: exact-loss GOLF only uses the seed to draw the output episode")?;
    }
    let p = prepare(settings)?;
    let outcomes = run_all(&p, p.settings.episodes);
    for o in &outcomes {
        if let Some(csv) = &o.csv {
            write_atomic(&args.out.join(seed_csv_name(p.settings.agent, o.seed)), csv)?;
        }
        writeln!(log, "seed {}: {}", o.seed, o.status)?;
    }
    let summary = json!({
        "command": "run",
        "agent": p.settings.agent,
        "config": p.settings,
        "prepared": prepared_json(&p),
        "aggregate": aggregate_json(p.settings.agent, &outcomes),
        "seeds": outcomes.iter().map(|o| o.summary.clone()).collect::<Vec<_>>(),
    });
    write_atomic(&args.out.join("summary.json"), &to_json_text(&summary)?)?;
    writeln!(log, "wrote {} seed file(s) and summary.json to {}", outcomes.len(), args.out.display())?;
    Ok(())
}
