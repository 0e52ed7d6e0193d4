//! Bellman operator, residuals, exact and sampled average Bellman errors,
//! and the squared regression loss used to build GOLF's confidence sets.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::function_class::{state_maxima, FunctionClass, QTuple};
use crate::mdp::{occupancy, state_occupancy, Policy, StepDistribution, TabularMdp, Transition};

/// `(T_h g)(s, a) = r_h(s, a) + E_{s'} max_{a'} g(s', a')`, with `g = 0`
/// when `next` is `None`.
pub fn apply_bellman(mdp: &TabularMdp, next: Option<&[f64]>, h: usize) -> Vec<f64> {
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let next_v = state_maxima(next, s_count, a_count);
    let mut out = Vec::with_capacity(s_count * a_count);
    for s in 0..s_count {
        for a in 0..a_count {
            out.push(mdp.reward(h, s, a) + mdp.expected_next(h, s, a, &next_v));
        }
    }
    out
}

/// Which residual an analysis uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ErrorKind {
    /// Residual on state-action pairs, `f_h - T_h f_{h+1}`.
    Q,
    /// Residual on states, evaluated at `f`'s own greedy action.
    V,
}

/// One element of `(I - T_h)F` or its V-type analogue.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualFunction {
    pub kind: ErrorKind,
    pub values: Vec<f64>,
}

/// `f_h - T_h f_{h+1}` on state-action pairs.
pub fn residual_q(mdp: &TabularMdp, f: &QTuple, h: usize) -> Vec<f64> {
    residual_from_layers(mdp, f.layer(h), f.layer_or_zero(h + 1), h)
}

pub(crate) fn residual_from_layers(mdp: &TabularMdp, layer: &[f64], next: Option<&[f64]>, h: usize) -> Vec<f64> {
    apply_bellman(mdp, next, h)
        .into_iter()
        .zip(layer)
        .map(|(t, f)| f - t)
        .collect()
}

/// `s -> (f_h - T_h f_{h+1})(s, pi_{f_h}(s))`.
pub fn residual_v(mdp: &TabularMdp, f: &QTuple, h: usize) -> Vec<f64> {
    let q = residual_q(mdp, f, h);
    let a_count = mdp.num_actions();
    (0..mdp.num_states()).map(|s| q[s * a_count + f.greedy_action(h, s)]).collect()
}

pub fn residual(mdp: &TabularMdp, f: &QTuple, h: usize, kind: ErrorKind) -> ResidualFunction {
    let values = match kind {
        ErrorKind::Q => residual_q(mdp, f, h),
        ErrorKind::V => residual_v(mdp, f, h),
    };
    ResidualFunction { kind, values }
}

/// Residuals of every member at every step, shared between members with
/// the same `(f_h, f_{h+1})` layers.
#[derive(Debug, Clone)]
pub struct ResidualTable {
    kind: ErrorKind,
    per_step: Vec<StepResiduals>,
}

#[derive(Debug, Clone)]
struct StepResiduals {
    distinct: Vec<Vec<f64>>,
    member_to_residual: Vec<usize>,
}

impl ResidualTable {
    pub fn build(mdp: &TabularMdp, class: &FunctionClass, kind: ErrorKind) -> Self {
        let per_step = (0..class.horizon())
            .map(|h| {
                let mut by_pair: std::collections::HashMap<(usize, usize), usize> = Default::default();
                let mut distinct = Vec::new();
                let member_to_residual = (0..class.len())
                    .map(|i| {
                        let next_id = if h + 1 < class.horizon() { class.layer_id(i, h + 1) } else { 0 };
                        let key = (class.layer_id(i, h), next_id);
                        *by_pair.entry(key).or_insert_with(|| {
                            distinct.push(residual(mdp, class.member(i), h, kind).values);
                            distinct.len() - 1
                        })
                    })
                    .collect();
                StepResiduals { distinct, member_to_residual }
            })
            .collect();
        Self { kind, per_step }
    }

    pub fn kind(&self) -> ErrorKind {
        self.kind
    }

    pub fn member(&self, i: usize, h: usize) -> &[f64] {
        let step = &self.per_step[h];
        &step.distinct[step.member_to_residual[i]]
    }

    /// Distinct residual tables at step `h` (pairs of layers are deduplicated,
    /// equal tables from different pairs are not).
    pub fn distinct(&self, h: usize) -> &[Vec<f64>] {
        &self.per_step[h].distinct
    }

    pub fn member_to_distinct(&self, i: usize, h: usize) -> usize {
        self.per_step[h].member_to_residual[i]
    }
}

/// Q-type average Bellman error `E_{pi}[(f_h - T_h f_{h+1})(s_h, a_h)]`.
pub fn avg_bellman_error(mdp: &TabularMdp, f: &QTuple, pi: &Policy, h: usize) -> f64 {
    occupancy(mdp, pi)[h].expect(&residual_q(mdp, f, h))
}

/// V-type average Bellman error: roll in with `pi` to `s_h`, then act with
/// `pi_f`.
pub fn v_avg_bellman_error(mdp: &TabularMdp, f: &QTuple, pi: &Policy, h: usize) -> f64 {
    state_occupancy(mdp, pi)[h]
        .iter()
        .zip(residual_v(mdp, f, h))
        .map(|(p, g)| p * g)
        .sum()
}

/// Exact error of a residual table under a roll-in distribution, with
/// the distribution's support matching the residual kind.
pub fn error_under(dist: &StepDistribution, residual: &[f64]) -> f64 {
    dist.expect(residual)
}

fn tuple_residual(f: &QTuple, t: &Transition) -> f64 {
    let next = f.layer_or_zero(t.h + 1).map_or(0.0, |l| {
        let a_count = f.num_actions();
        l[t.s_next * a_count..(t.s_next + 1) * a_count]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    });
    f.value(t.h, t.s, t.a) - t.r - next
}

/// Sample mean of `g_h(s,a) - r - max_{a'} g_{h+1}(s',a')` over `data`.
pub fn estimate_bellman_error(data: &[Transition], f: &QTuple, h: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset { step: h });
    }
    let total: f64 = data.iter().map(|t| tuple_residual(f, t)).sum();
    Ok(total / data.len() as f64)
}

/// Importance-weighted mean with weight `1[a = pi_f(s)] * |A|`, for data
/// whose step-`h` action was drawn uniformly.
pub fn iw_estimate_bellman_error(data: &[Transition], f: &QTuple, h: usize, num_actions: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset { step: h });
    }
    let total: f64 = data
        .iter()
        .filter(|t| t.a == f.greedy_action(h, t.s))
        .map(|t| num_actions as f64 * tuple_residual(f, t))
        .sum();
    Ok(total / data.len() as f64)
}

/// `sum_{(s,a,r,s') in data} [xi(s,a) - r - max_{a'} zeta_next(s',a')]^2`
/// (a sum, not a mean). `zeta_next = None` stands for the zero layer.
pub fn squared_loss(data: &[Transition], xi: &[f64], zeta_next: Option<&[f64]>, num_actions: usize) -> f64 {
    data.iter()
        .map(|t| {
            let next = zeta_next.map_or(0.0, |l| {
                l[t.s_next * num_actions..(t.s_next + 1) * num_actions]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            });
            let diff = xi[t.s * num_actions + t.a] - t.r - next;
            diff * diff
        })
        .sum()
}

/// How learners observe the MDP: sampled episodes, or exact expectations in
/// place of every sample-based quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionMode {
    #[default]
    MonteCarlo,
    Exact,
}

/// Append-only (GOLF) or refreshed-per-round (OLIVE) transition data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetMode {
    Append,
    Refresh,
}

/// Per-step lists of observed transitions.
#[derive(Debug, Clone)]
pub struct Dataset {
    mode: DatasetMode,
    steps: Vec<Vec<Transition>>,
}

impl Dataset {
    pub fn new(horizon: usize, mode: DatasetMode) -> Self {
        Self { mode, steps: vec![Vec::new(); horizon] }
    }

    pub fn mode(&self) -> DatasetMode {
        self.mode
    }

    pub fn layer(&self, h: usize) -> &[Transition] {
        &self.steps[h]
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Adds one tuple to step `t.h`.
    pub fn push(&mut self, t: Transition) {
        self.steps[t.h].push(t);
    }

    /// Replaces every step with the tuples in `tuples` (refresh mode) or
    /// appends them (append mode).
    pub fn absorb(&mut self, tuples: impl IntoIterator<Item = Transition>) {
        if self.mode == DatasetMode::Refresh {
            self.steps.iter_mut().for_each(Vec::clear);
        }
        for t in tuples {
            self.push(t);
        }
    }

    /// Checks that every tuple's reward matches the MDP's reward table.
    pub fn is_consistent_with(&self, mdp: &TabularMdp) -> bool {
        self.steps.iter().flatten().all(|t| mdp.reward(t.h, t.s, t.a) == t.r)
    }

    /// CSV with header `h,s,a,r,s_next`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,s,a,r,s_next\n");
        for t in self.steps.iter().flatten() {
            let _ = writeln!(out, "{},{},{},{},{}", t.h, t.s, t.a, t.r, t.s_next);
        }
        out
    }
}

/// Per-step counts `N_h(s, a, s')`, possibly fractional (expected counts).
///
/// Losses and mean errors computed from counts equal the tuple-list versions
/// because rewards are a deterministic function of `(h, s, a)`.
#[derive(Debug, Clone)]
pub struct TransitionCounts {
    num_states: usize,
    num_actions: usize,
    counts: Vec<Vec<f64>>,
    totals: Vec<f64>,
}

impl TransitionCounts {
    pub fn new(mdp: &TabularMdp) -> Self {
        let per_step = mdp.num_pairs() * mdp.num_states();
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            counts: vec![vec![0.0; per_step]; mdp.horizon()],
            totals: vec![0.0; mdp.horizon()],
        }
    }

    pub fn add(&mut self, t: &Transition) {
        let idx = (t.s * self.num_actions + t.a) * self.num_states + t.s_next;
        self.counts[t.h][idx] += 1.0;
        self.totals[t.h] += 1.0;
    }

    /// Adds one expected sample at step `h` drawn from `dist` (a state-action
    /// distribution) followed by the MDP's transition.
    pub fn add_expected(&mut self, mdp: &TabularMdp, h: usize, dist: &StepDistribution) {
        for (sa, &w) in dist.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (s, a) = (sa / self.num_actions, sa % self.num_actions);
            let row = &mut self.counts[h][sa * self.num_states..(sa + 1) * self.num_states];
            for (c, p) in row.iter_mut().zip(mdp.transition(h, s, a)) {
                *c += w * p;
            }
        }
        self.totals[h] += 1.0;
    }

    pub fn total(&self, h: usize) -> f64 {
        self.totals[h]
    }

    /// Summary of step `h` against fixed next-state values: per state-action
    /// `(n, sum n v, sum n v^2)`.
    pub fn moments(&self, h: usize, next_v: &[f64]) -> Vec<(f64, f64, f64)> {
        self.counts[h]
            .chunks(self.num_states)
            .map(|row| {
                row.iter().zip(next_v).fold((0.0, 0.0, 0.0), |(n, m1, m2), (c, v)| {
                    (n + c, m1 + c * v, m2 + c * v * v)
                })
            })
            .collect()
    }

    /// Squared loss of `xi` against target `r + v(s')` from precomputed
    /// [`TransitionCounts::moments`].
    pub fn loss_from_moments(moments: &[(f64, f64, f64)], reward: &[f64], xi: &[f64]) -> f64 {
        moments
            .iter()
            .zip(reward)
            .zip(xi)
            .filter(|(((n, _, _), _), _)| *n > 0.0)
            .map(|(((n, m1, m2), r), x)| {
                let c = x - r;
                (n * c * c - 2.0 * c * m1 + m2).max(0.0)
            })
            .sum()
    }

    /// Squared loss at step `h` of layer `xi` against `zeta_next`.
    pub fn squared_loss(&self, mdp: &TabularMdp, h: usize, xi: &[f64], zeta_next: Option<&[f64]>) -> f64 {
        let next_v = state_maxima(zeta_next, self.num_states, self.num_actions);
        Self::loss_from_moments(&self.moments(h, &next_v), mdp.reward_layer(h), xi)
    }
}
