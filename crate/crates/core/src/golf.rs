//! Optimistic planning over a squared-loss confidence set (GOLF) and its
//! V-type variant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bellman::{ExecutionMode, TransitionCounts};
use crate::error::{Error, Result};
use crate::function_class::{find_optimal, greedy_policy, state_maxima, FunctionClass, VersionSpace};
use crate::mdp::{
    occupancy, optimal_q, policy_value, simulate_episode, simulate_with_uniform_action_at, state_occupancy, Policy,
    Support, StepDistribution, TabularMdp,
};

/// Relative slack on the confidence-set comparison, absorbing rounding in
/// losses that are equal in exact arithmetic.
const LOSS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GolfConfig {
    /// Number of episodes `K`.
    pub episodes: usize,
    /// Confidence width; `None` selects [`default_beta`]. May be `+inf`.
    pub beta: Option<f64>,
    /// Per-step auxiliary tables `G_h` (flat `S * A` layers); `None` uses the
    /// class's own distinct layers.
    pub aux: Option<Vec<Vec<Vec<f64>>>>,
    pub mode: ExecutionMode,
    pub seed: u64,
}

impl GolfConfig {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self { episodes, beta: None, aux: None, mode: ExecutionMode::MonteCarlo, seed }
    }
}

/// `2 ln(|F u G| K H / delta)` with `delta = 0.01`.
pub fn default_beta(union_size: usize, episodes: usize, horizon: usize) -> f64 {
    2.0 * (union_size.max(1) as f64 * episodes.max(1) as f64 * horizon.max(1) as f64 * 100.0).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based episode number.
    pub k: usize,
    pub f_index: usize,
    /// `E_{s_1}[max_a f_1(s_1, a)]` of the selected member.
    pub opt_value: f64,
    pub policy_value: f64,
    /// `None` for the V-type variant.
    pub regret: Option<f64>,
    pub cum_regret: Option<f64>,
    /// Version-space size after this episode's update.
    pub b_size: usize,
    /// Whether `Q*` was in the version space the member was selected from
    /// (`None` when `Q*` is not in the class).
    pub qstar_selectable: Option<bool>,
    /// Whether `Q*` survived this episode's update.
    pub qstar_in_b: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GolfResult {
    pub config: GolfConfig,
    pub beta: f64,
    pub variant: String,
    pub optimal_value: f64,
    pub qstar_index: Option<usize>,
    pub episodes: Vec<EpisodeRecord>,
    /// Episode whose policy is output, drawn uniformly with the run's RNG.
    pub output_episode: usize,
    pub output_value: f64,
    /// Episode whose policy has the best exact value (ties to the earliest).
    pub best_episode: usize,
    pub best_value: f64,
}

impl GolfResult {
    pub fn output_policy(&self, class: &FunctionClass) -> Policy {
        greedy_policy(class.member(self.episodes[self.output_episode - 1].f_index))
    }

    pub fn best_policy(&self, class: &FunctionClass) -> Policy {
        greedy_policy(class.member(self.episodes[self.best_episode - 1].f_index))
    }

    pub fn cumulative_regret(&self) -> Option<f64> {
        self.episodes.last().and_then(|e| e.cum_regret)
    }

    /// CSV with header `k,f_index,opt_value,policy_value,regret,cum_regret,b_size`;
    /// untracked regret fields are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,f_index,opt_value,policy_value,regret,cum_regret,b_size\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.episodes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.k,
                e.f_index,
                e.opt_value,
                e.policy_value,
                opt(e.regret),
                opt(e.cum_regret),
                e.b_size
            );
        }
        out
    }

    /// Run summary without the per-episode table.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "variant": self.variant,
            "config": self.config,
            "seed": self.config.seed,
            "beta": self.beta,
            "optimal_value": self.optimal_value,
            "qstar_index": self.qstar_index,
            "episodes": self.episodes.len(),
            "cum_regret": self.cumulative_regret(),
            "output_episode": self.output_episode,
            "output_value": self.output_value,
            "best_episode": self.best_episode,
            "best_value": self.best_value,
            "final_b_size": self.episodes.last().map(|e| e.b_size),
            "qstar_always_in_b": self.qstar_index.map(|_| self.episodes.iter().all(|e| e.qstar_in_b == Some(true))),
        })
    }
}

/// Resolves `G_h`, checking shapes against the class.
pub fn resolve_aux(class: &FunctionClass, aux: Option<&[Vec<Vec<f64>>]>) -> Result<Vec<Vec<Vec<f64>>>> {
    let width = class.num_states() * class.num_actions();
    match aux {
        None => Ok((0..class.horizon()).map(|h| class.layers(h).to_vec()).collect()),
        Some(g) => {
            if g.len() != class.horizon() {
                return Err(Error::DimensionMismatch { context: "auxiliary class steps", expected: class.horizon(), found: g.len() });
            }
            for (h, layer) in g.iter().enumerate() {
                if layer.is_empty() {
                    return Err(Error::InvalidClass(format!("auxiliary class is empty at step {h}")));
                }
                for table in layer {
                    if table.len() != width {
                        return Err(Error::DimensionMismatch { context: "auxiliary table", expected: width, found: table.len() });
                    }
                    if table.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidClass(format!("non-finite auxiliary value at step {h}")));
                    }
                }
            }
            Ok(g.to_vec())
        }
    }
}

/// `|F| + #{auxiliary tables not already a layer of F at their step}`.
pub fn union_size(class: &FunctionClass, aux: &[Vec<Vec<f64>>]) -> usize {
    let extra: usize = aux
        .iter()
        .enumerate()
        .map(|(h, g)| g.iter().filter(|t| !class.layers(h).iter().any(|l| l == *t)).count())
        .sum();
    class.len() + extra
}

/// Members `f` with `L_h(f_h, f_{h+1}) <= min_{g in G_h} L_h(g, f_{h+1}) + beta`
/// at every step, losses taken over `counts`.
pub fn confidence_set(
    mdp: &TabularMdp,
    class: &FunctionClass,
    aux: &[Vec<Vec<f64>>],
    counts: &TransitionCounts,
    beta: f64,
) -> VersionSpace {
    let (s_count, a_count, horizon) = (class.num_states(), class.num_actions(), class.horizon());
    let mut keep = VersionSpace::full(class.len());
    for h in 0..horizon {
        let next_id = |i: usize| if h + 1 < horizon { class.layer_id(i, h + 1) } else { 0 };
        let mut pairs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in keep.iter() {
            pairs.entry(next_id(i)).or_default().push(class.layer_id(i, h));
        }
        let mut accepted: BTreeMap<(usize, usize), bool> = BTreeMap::new();
        for (j, mut current) in pairs {
            current.sort_unstable();
            current.dedup();
            let next = (h + 1 < horizon).then(|| class.layers(h + 1)[j].as_slice());
            let moments = counts.moments(h, &state_maxima(next, s_count, a_count));
            let reward = mdp.reward_layer(h);
            let best = aux[h]
                .iter()
                .map(|g| TransitionCounts::loss_from_moments(&moments, reward, g))
                .fold(f64::INFINITY, f64::min);
            let limit = best + beta + LOSS_SLACK * (1.0 + best.abs());
            for i in current {
                let loss = TransitionCounts::loss_from_moments(&moments, reward, &class.layers(h)[i]);
                accepted.insert((i, j), loss <= limit);
            }
        }
        let members: Vec<usize> = keep.iter().collect();
        for m in members {
            if !accepted[&(class.layer_id(m, h), next_id(m))] {
                keep.remove(m);
            }
        }
    }
    keep
}

/// Member of `b` with the largest initial value; ties to the lowest index.
pub fn optimistic_select(mdp: &TabularMdp, class: &FunctionClass, b: &VersionSpace) -> Result<usize> {
    let values = class.initial_values(mdp);
    select_from(&values, b, 0)
}

pub(crate) fn select_from(values: &[f64], b: &VersionSpace, round: usize) -> Result<usize> {
    b.iter()
        .fold(None, |best: Option<usize>, i| match best {
            Some(j) if values[j] >= values[i] => Some(j),
            _ => Some(i),
        })
        .ok_or(Error::EmptyVersionSpace { round, context: "optimistic selection" })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Q,
    V,
}

/// Adds one episode's worth of data for policy `pi`.
fn collect<R: Rng>(mdp: &TabularMdp, pi: &Policy, variant: Variant, mode: ExecutionMode, counts: &mut TransitionCounts, rng: &mut R) {
    match (variant, mode) {
        (Variant::Q, ExecutionMode::MonteCarlo) => {
            for t in simulate_episode(mdp, pi, rng).steps {
                counts.add(&t);
            }
        }
        (Variant::Q, ExecutionMode::Exact) => {
            for (h, dist) in occupancy(mdp, pi).iter().enumerate() {
                counts.add_expected(mdp, h, dist);
            }
        }
        (Variant::V, ExecutionMode::MonteCarlo) => {
            for h in 0..mdp.horizon() {
                let trajectory = simulate_with_uniform_action_at(mdp, pi, h, rng);
                counts.add(&trajectory.steps[h]);
            }
        }
        (Variant::V, ExecutionMode::Exact) => {
            let a_count = mdp.num_actions();
            for (h, states) in state_occupancy(mdp, pi).iter().enumerate() {
                let weights = states.iter().flat_map(|w| std::iter::repeat_n(w / a_count as f64, a_count)).collect();
                counts.add_expected(mdp, h, &StepDistribution { kind: Support::StateAction, weights });
            }
        }
    }
}

fn run(mdp: &TabularMdp, class: &FunctionClass, cfg: &GolfConfig, variant: Variant) -> Result<GolfResult> {
    class.check_compatible(mdp)?;
    if cfg.episodes == 0 {
        return Err(Error::InvalidArgument("episode count must be positive".into()));
    }
    let aux = resolve_aux(class, cfg.aux.as_deref())?;
    let beta = cfg.beta.unwrap_or_else(|| default_beta(union_size(class, &aux), cfg.episodes, class.horizon()));
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be nonnegative, got {beta}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = class.initial_values(mdp);
    let optimal_value = optimal_q(mdp).initial_value(mdp);
    let qstar_index = find_optimal(mdp, class);
    let mut counts = TransitionCounts::new(mdp);
    let mut b = VersionSpace::full(class.len());
    let mut episodes = Vec::with_capacity(cfg.episodes);
    let mut cum = 0.0;

    for k in 1..=cfg.episodes {
        let f_index = select_from(&initial, &b, k)?;
        let qstar_selectable = qstar_index.map(|q| b.contains(q));
        let pi = greedy_policy(class.member(f_index));
        let value = policy_value(mdp, &pi);
        collect(mdp, &pi, variant, cfg.mode, &mut counts, &mut rng);
        b = confidence_set(mdp, class, &aux, &counts, beta);
        if b.is_empty() {
            return Err(Error::EmptyVersionSpace { round: k, context: "confidence set" });
        }
        let regret = (variant == Variant::Q).then_some(optimal_value - value);
        if let Some(r) = regret {
            cum += r;
        }
        episodes.push(EpisodeRecord {
            k,
            f_index,
            opt_value: initial[f_index],
            policy_value: value,
            regret,
            cum_regret: regret.map(|_| cum),
            b_size: b.len(),
            qstar_selectable,
            qstar_in_b: qstar_index.map(|q| b.contains(q)),
        });
    }

    let output_episode = rng.gen_range(1..=cfg.episodes);
    let best_episode = episodes
        .iter()
        .fold(&episodes[0], |best, e| if e.policy_value > best.policy_value { e } else { best })
        .k;
    Ok(GolfResult {
        config: cfg.clone(),
        beta,
        variant: match variant {
            Variant::Q => "golf".into(),
            Variant::V => "vgolf".into(),
        },
        optimal_value,
        qstar_index,
        output_value: episodes[output_episode - 1].policy_value,
        best_value: episodes[best_episode - 1].policy_value,
        episodes,
        output_episode,
        best_episode,
    })
}

/// Runs `cfg.episodes` episodes of select, roll out, record, and rebuild.
pub fn run_golf(mdp: &TabularMdp, class: &FunctionClass, cfg: &GolfConfig) -> Result<GolfResult> {
    run(mdp, class, cfg, Variant::Q)
}

/// As [`run_golf`], but each episode gathers one step-`h` tuple per `h` from
/// a roll-in that acts uniformly at step `h`; regret is not tracked.
pub fn run_vgolf(mdp: &TabularMdp, class: &FunctionClass, cfg: &GolfConfig) -> Result<GolfResult> {
    run(mdp, class, cfg, Variant::V)
}
