//! Estimate, activate, eliminate (OLIVE) and its V-type variant.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bellman::{avg_bellman_error, residual, v_avg_bellman_error, ErrorKind, ExecutionMode, TransitionCounts};
use crate::dims::{below, is_independent_dist};
use crate::error::{Error, Result};
use crate::golf::select_from;
use crate::function_class::{find_optimal, greedy_policy, state_maxima, FunctionClass, QTuple, VersionSpace, DEDUP_TOL};
use crate::mdp::{
    occupancy, optimal_q, policy_value, simulate_episode, simulate_with_uniform_action_at, state_occupancy, Policy,
    TabularMdp,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OliveConfig {
    pub zeta_act: f64,
    pub zeta_elim: f64,
    pub n_act: usize,
    pub n_elim: usize,
    pub mode: ExecutionMode,
    pub max_phases: usize,
    pub seed: u64,
}

impl OliveConfig {
    /// Thresholds `zeta_act = 2 eps / H`, `zeta_elim = eps / (2 H sqrt(d))`,
    /// samples `n_act = H^2 iota / eps^2` and
    /// `n_elim = H^2 d ln|F| iota / eps^2` (times `|A|` for the V-type
    /// variant) with `iota = ln(H d / (delta eps))`, and a `2 (d H + 1)`
    /// phase guard.
    pub fn from_theory(eps: f64, d: usize, horizon: usize, class_size: usize, num_actions: Option<usize>, delta: f64) -> Self {
        let (hf, df) = (horizon as f64, d.max(1) as f64);
        let iota = (hf * df / (delta * eps)).ln().max(1.0);
        let log_f = (class_size.max(2) as f64).ln();
        let a_factor = num_actions.unwrap_or(1) as f64;
        Self {
            zeta_act: 2.0 * eps / hf,
            zeta_elim: eps / (2.0 * hf * df.sqrt()),
            n_act: (hf * hf * iota / (eps * eps)).ceil() as usize,
            n_elim: (hf * hf * df * log_f * iota * a_factor / (eps * eps)).ceil() as usize,
            mode: ExecutionMode::MonteCarlo,
            max_phases: 2 * (d.max(1) * horizon + 1),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.zeta_act > 0.0 && self.zeta_elim > 0.0) {
            return bad("thresholds must be positive".into());
        }
        if self.zeta_elim > self.zeta_act {
            return bad(format!("zeta_elim {} exceeds zeta_act {}", self.zeta_elim, self.zeta_act));
        }
        if self.max_phases == 0 {
            return bad("max_phases must be at least 1".into());
        }
        if self.mode == ExecutionMode::MonteCarlo && (self.n_act == 0 || self.n_elim == 0) {
            return bad("sample counts must be positive in monte-carlo mode".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    /// 1-based phase number.
    pub phase: usize,
    pub f_index: usize,
    /// `E^(f^k, pi^k, h)` for every step.
    pub errors: Vec<f64>,
    pub sum_err: f64,
    pub terminated: bool,
    pub activated_step: Option<usize>,
    /// Set when no single step reached the activation threshold and the step
    /// with the largest estimate was used instead.
    pub anomaly: bool,
    pub eliminated: usize,
    pub survivors: usize,
    pub episodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OliveResult {
    pub config: OliveConfig,
    pub variant: String,
    pub output_f_index: usize,
    pub output_policy: Policy,
    pub output_value: f64,
    pub optimal_value: f64,
    pub qstar_index: Option<usize>,
    /// Whether `Q*` was still in the version space at termination.
    pub qstar_survived: Option<bool>,
    pub phases: Vec<PhaseRecord>,
    pub act_episodes: usize,
    pub elim_episodes: usize,
}

impl OliveResult {
    pub fn total_episodes(&self) -> usize {
        self.act_episodes + self.elim_episodes
    }

    /// CSV with header `phase,f_index,sum_err,activated_step,eliminated,survivors`;
    /// the activated step is empty on termination.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,f_index,sum_err,activated_step,eliminated,survivors\n");
        for p in &self.phases {
            let step = p.activated_step.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", p.phase, p.f_index, p.sum_err, step, p.eliminated, p.survivors);
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "variant": self.variant,
            "config": self.config,
            "seed": self.config.seed,
            "phases": self.phases.len(),
            "output_f_index": self.output_f_index,
            "output_value": self.output_value,
            "optimal_value": self.optimal_value,
            "suboptimality": self.optimal_value - self.output_value,
            "qstar_index": self.qstar_index,
            "qstar_survived": self.qstar_survived,
            "act_episodes": self.act_episodes,
            "elim_episodes": self.elim_episodes,
            "total_episodes": self.total_episodes(),
            "anomalies": self.phases.iter().filter(|p| p.anomaly).count(),
        })
    }
}

/// Sample mean of `f_h(s,a) - r - max_{a'} f_{h+1}(s',a')` over the step-`h`
/// counts, optionally importance weighted by `|A| 1[a = pi_f(s)]`.
fn mean_residual(mdp: &TabularMdp, counts: &TransitionCounts, f: &QTuple, h: usize, weighted: bool) -> Result<f64> {
    let n = counts.total(h);
    if n == 0.0 {
        return Err(Error::EmptyDataset { step: h });
    }
    let a_count = mdp.num_actions();
    let next_v = state_maxima(f.layer_or_zero(h + 1), mdp.num_states(), a_count);
    let reward = mdp.reward_layer(h);
    let layer = f.layer(h);
    let total: f64 = counts
        .moments(h, &next_v)
        .iter()
        .enumerate()
        .filter(|(sa, _)| !weighted || sa % a_count == f.greedy_action(h, sa / a_count))
        .map(|(sa, (cnt, m1, _))| cnt * (layer[sa] - reward[sa]) - m1)
        .sum();
    Ok(if weighted { a_count as f64 * total / n } else { total / n })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Q,
    V,
}

fn run(mdp: &TabularMdp, class: &FunctionClass, cfg: &OliveConfig, variant: Variant) -> Result<OliveResult> {
    class.check_compatible(mdp)?;
    cfg.validate()?;
    let horizon = class.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = class.initial_values(mdp);
    let qstar_index = find_optimal(mdp, class);
    let mut b = VersionSpace::full(class.len());
    let mut phases = Vec::new();
    let (mut act_episodes, mut elim_episodes) = (0, 0);

    for phase in 1..=cfg.max_phases {
        let f_index = select_from(&initial, &b, phase)?;
        let f = class.member(f_index);
        let pi = greedy_policy(f);

        let errors: Vec<f64> = match cfg.mode {
            ExecutionMode::Exact => (0..horizon)
                .map(|h| match variant {
                    Variant::Q => avg_bellman_error(mdp, f, &pi, h),
                    Variant::V => v_avg_bellman_error(mdp, f, &pi, h),
                })
                .collect(),
            ExecutionMode::MonteCarlo => {
                let mut counts = TransitionCounts::new(mdp);
                for _ in 0..cfg.n_act {
                    for t in simulate_episode(mdp, &pi, &mut rng).steps {
                        counts.add(&t);
                    }
                }
                act_episodes += cfg.n_act;
                (0..horizon).map(|h| mean_residual(mdp, &counts, f, h, false)).collect::<Result<_>>()?
            }
        };
        let sum_err: f64 = errors.iter().sum();
        let mut record = PhaseRecord {
            phase,
            f_index,
            errors,
            sum_err,
            terminated: false,
            activated_step: None,
            anomaly: false,
            eliminated: 0,
            survivors: b.len(),
            episodes: if cfg.mode == ExecutionMode::MonteCarlo { cfg.n_act } else { 0 },
        };

        if sum_err <= horizon as f64 * cfg.zeta_act {
            record.terminated = true;
            phases.push(record);
            return Ok(OliveResult {
                config: cfg.clone(),
                variant: match variant {
                    Variant::Q => "olive".into(),
                    Variant::V => "volive".into(),
                },
                output_f_index: f_index,
                output_value: policy_value(mdp, &pi),
                output_policy: pi,
                optimal_value: optimal_q(mdp).initial_value(mdp),
                qstar_index,
                qstar_survived: qstar_index.map(|q| b.contains(q)),
                phases,
                act_episodes,
                elim_episodes,
            });
        }

        let qualifies = |e: f64| match variant {
            Variant::Q => e >= cfg.zeta_act,
            Variant::V => e > cfg.zeta_act,
        };
        let t = match record.errors.iter().position(|e| qualifies(*e)) {
            Some(t) => t,
            None => {
                record.anomaly = true;
                (0..horizon).fold(0, |best, h| if record.errors[h] > record.errors[best] { h } else { best })
            }
        };
        record.activated_step = Some(t);

        let elim_errors: Vec<(usize, f64)> = match cfg.mode {
            ExecutionMode::Exact => b
                .iter()
                .map(|i| {
                    let g = class.member(i);
                    let e = match variant {
                        Variant::Q => avg_bellman_error(mdp, g, &pi, t),
                        Variant::V => v_avg_bellman_error(mdp, g, &pi, t),
                    };
                    (i, e)
                })
                .collect(),
            ExecutionMode::MonteCarlo => {
                let mut counts = TransitionCounts::new(mdp);
                for _ in 0..cfg.n_elim {
                    let trajectory = match variant {
                        Variant::Q => simulate_episode(mdp, &pi, &mut rng),
                        Variant::V => simulate_with_uniform_action_at(mdp, &pi, t, &mut rng),
                    };
                    counts.add(&trajectory.steps[t]);
                }
                elim_episodes += cfg.n_elim;
                record.episodes += cfg.n_elim;
                b.iter()
                    .map(|i| Ok((i, mean_residual(mdp, &counts, class.member(i), t, variant == Variant::V)?)))
                    .collect::<Result<_>>()?
            }
        };
        for (i, e) in elim_errors {
            if e.abs() > cfg.zeta_elim {
                b.remove(i);
                record.eliminated += 1;
            }
        }
        record.survivors = b.len();
        phases.push(record);
        if b.is_empty() {
            return Err(Error::EmptyVersionSpace { round: phase, context: "elimination" });
        }
    }
    Err(Error::MaxPhasesExceeded { max_phases: cfg.max_phases })
}

/// Runs phases until the summed estimated error of the optimistic member
/// is at most `H zeta_act`.
pub fn run_olive(mdp: &TabularMdp, class: &FunctionClass, cfg: &OliveConfig) -> Result<OliveResult> {
    run(mdp, class, cfg, Variant::Q)
}

/// V-type variant: elimination data acts uniformly at the activated step and
/// errors are importance weighted.
pub fn run_volive(mdp: &TabularMdp, class: &FunctionClass, cfg: &OliveConfig) -> Result<OliveResult> {
    run(mdp, class, cfg, Variant::V)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub step: usize,
    /// Phases that activated at this step, in order.
    pub phases: Vec<usize>,
    /// Per activation, the residual index certifying independence from the
    /// earlier activations, or `None` when none does.
    pub certifiers: Vec<Option<usize>>,
}

impl StepAudit {
    pub fn activations(&self) -> usize {
        self.phases.len()
    }

    pub fn is_independent(&self) -> bool {
        self.certifiers.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceAudit {
    pub kind: ErrorKind,
    pub eps_prime: f64,
    pub steps: Vec<StepAudit>,
}

impl IndependenceAudit {
    pub fn is_valid(&self) -> bool {
        self.steps.iter().all(StepAudit::is_independent)
    }

    pub fn max_activations(&self) -> usize {
        self.steps.iter().map(StepAudit::activations).max().unwrap_or(0)
    }
}

/// Checks that, at each step, the roll-in distributions of the phases that
/// activated there form an `eps'`-independent sequence with respect to the
/// class's residuals (`kind` selects state-action or state roll-ins). The
/// default `eps'` sits just below `zeta_act`, since activation only
/// guarantees an error of at least `zeta_act`.
pub fn audit_independence(
    result: &OliveResult,
    mdp: &TabularMdp,
    class: &FunctionClass,
    kind: ErrorKind,
    eps_prime: Option<f64>,
) -> IndependenceAudit {
    let eps_prime = eps_prime.unwrap_or_else(|| below(result.config.zeta_act));
    let steps = (0..class.horizon())
        .map(|h| {
            let mut functions: Vec<Vec<f64>> = Vec::new();
            for i in 0..class.len() {
                let g = residual(mdp, class.member(i), h, kind).values;
                if !functions.iter().any(|e| crate::function_class::max_norm_distance(e, &g) < DEDUP_TOL) {
                    functions.push(g);
                }
            }
            let phases: Vec<usize> =
                result.phases.iter().filter(|p| p.activated_step == Some(h)).map(|p| p.phase).collect();
            let rollins: Vec<Vec<f64>> = phases
                .iter()
                .map(|&k| {
                    let pi = greedy_policy(class.member(result.phases[k - 1].f_index));
                    match kind {
                        ErrorKind::Q => occupancy(mdp, &pi)[h].weights.clone(),
                        ErrorKind::V => state_occupancy(mdp, &pi)[h].clone(),
                    }
                })
                .collect();
            let certifiers = (0..rollins.len())
                .map(|j| {
                    let prefix: Vec<&[f64]> = rollins[..j].iter().map(Vec::as_slice).collect();
                    is_independent_dist(&rollins[j], &prefix, &functions, eps_prime)
                })
                .collect();
            StepAudit { step: h, phases, certifiers }
        })
        .collect();
    IndependenceAudit { kind, eps_prime, steps }
}
