//! Finite-horizon tabular MDPs: validation, exact dynamic programming and
//! seeded simulation.
//!
//! Steps are indexed `0..horizon`. Transition rows, rewards and per-step
//! tables are stored flat; a state-action table has `num_states * num_actions`
//! entries laid out as `s * num_actions + a`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_class::QTuple;

/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-12;

/// A finite episodic MDP with deterministic rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    initial: Vec<f64>,
    warnings: Vec<String>,
}

fn check_distribution(weights: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidMdp(format!("{} has a negative or non-finite entry", what())));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidMdp(format!("{} sums to {total}", what())));
    }
    Ok(())
}

impl TabularMdp {
    /// Builds and validates an MDP from flat arrays.
    ///
    /// `transitions` has `H*S*A*S` entries indexed `((h*S + s)*A + a)*S + s'`,
    /// `rewards` has `H*S*A` entries and `initial` has `S` entries.
    pub fn new(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if horizon == 0 || num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidMdp("H, S and A must be positive".into()));
        }
        let sa = num_states * num_actions;
        let expect = |context, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { context, expected, found })
            }
        };
        expect("transition table", horizon * sa * num_states, transitions.len())?;
        expect("reward table", horizon * sa, rewards.len())?;
        expect("initial distribution", num_states, initial.len())?;

        for h in 0..horizon {
            for s in 0..num_states {
                for a in 0..num_actions {
                    let start = ((h * num_states + s) * num_actions + a) * num_states;
                    check_distribution(&transitions[start..start + num_states], || {
                        format!("P[{h}][{s}][{a}]")
                    })?;
                }
            }
        }
        if let Some(i) = rewards.iter().position(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidMdp(format!("reward entry {i} outside [0, 1]")));
        }
        check_distribution(&initial, || "initial distribution".to_string())?;

        let mut mdp = Self {
            horizon,
            num_states,
            num_actions,
            transitions,
            rewards,
            initial,
            warnings: Vec::new(),
        };
        let max_return = mdp.max_return();
        if max_return > 1.0 + 1e-12 {
            mdp.warnings.push(format!(
                "maximum achievable reward sum {max_return} exceeds 1"
            ));
        }
        Ok(mdp)
    }

    /// Builds an MDP from nested `P[h][s][a][s']`, `r[h][s][a]` arrays.
    pub fn from_nested(
        transitions: &[Vec<Vec<Vec<f64>>>],
        rewards: &[Vec<Vec<f64>>],
        initial: Vec<f64>,
    ) -> Result<Self> {
        let horizon = transitions.len();
        let num_states = initial.len();
        let num_actions = transitions
            .first()
            .and_then(|layer| layer.first())
            .map_or(0, |row| row.len());
        let mut flat_p = Vec::with_capacity(horizon * num_states * num_actions * num_states);
        for (h, layer) in transitions.iter().enumerate() {
            if layer.len() != num_states {
                return Err(Error::InvalidMdp(format!("P[{h}] has {} states", layer.len())));
            }
            for (s, row) in layer.iter().enumerate() {
                if row.len() != num_actions {
                    return Err(Error::InvalidMdp(format!("P[{h}][{s}] has {} actions", row.len())));
                }
                for (a, next) in row.iter().enumerate() {
                    if next.len() != num_states {
                        return Err(Error::InvalidMdp(format!(
                            "P[{h}][{s}][{a}] has length {}",
                            next.len()
                        )));
                    }
                    flat_p.extend_from_slice(next);
                }
            }
        }
        if rewards.len() != horizon {
            return Err(Error::InvalidMdp(format!("r has {} steps, P has {horizon}", rewards.len())));
        }
        let mut flat_r = Vec::with_capacity(horizon * num_states * num_actions);
        for (h, layer) in rewards.iter().enumerate() {
            if layer.len() != num_states {
                return Err(Error::InvalidMdp(format!("r[{h}] has {} states", layer.len())));
            }
            for (s, row) in layer.iter().enumerate() {
                if row.len() != num_actions {
                    return Err(Error::InvalidMdp(format!("r[{h}][{s}] has {} actions", row.len())));
                }
                flat_r.extend_from_slice(row);
            }
        }
        Self::new(horizon, num_states, num_actions, flat_p, flat_r, initial)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Number of state-action pairs.
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    /// Next-state distribution `P_h(. | s, a)`.
    pub fn transition(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = ((h * self.num_states + s) * self.num_actions + a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[(h * self.num_states + s) * self.num_actions + a]
    }

    /// Reward table of step `h` as a flat state-action table.
    pub fn reward_layer(&self, h: usize) -> &[f64] {
        let sa = self.num_pairs();
        &self.rewards[h * sa..(h + 1) * sa]
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    /// Validator warnings (e.g. reward sums above one).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Largest reward sum collectable along any trajectory with positive
    /// probability of its transitions, starting from a state in the support
    /// of the initial distribution.
    pub fn max_return(&self) -> f64 {
        let (s_count, a_count) = (self.num_states, self.num_actions);
        let mut next = vec![0.0; s_count];
        for h in (0..self.horizon).rev() {
            let mut current = vec![f64::NEG_INFINITY; s_count];
            for (s, value) in current.iter_mut().enumerate() {
                for a in 0..a_count {
                    let best_next = self
                        .transition(h, s, a)
                        .iter()
                        .zip(&next)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(_, v)| *v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    *value = value.max(self.reward(h, s, a) + best_next);
                }
            }
            next = current;
        }
        self.initial
            .iter()
            .zip(&next)
            .filter(|(p, _)| **p > 0.0)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nested copies of the tables, `P[h][s][a][s']` and `r[h][s][a]`.
    pub fn nested_tables(&self) -> (Vec<Vec<Vec<Vec<f64>>>>, Vec<Vec<Vec<f64>>>) {
        let p = (0..self.horizon)
            .map(|h| {
                (0..self.num_states)
                    .map(|s| {
                        (0..self.num_actions)
                            .map(|a| self.transition(h, s, a).to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let r = (0..self.horizon)
            .map(|h| {
                (0..self.num_states)
                    .map(|s| (0..self.num_actions).map(|a| self.reward(h, s, a)).collect())
                    .collect()
            })
            .collect();
        (p, r)
    }

    /// Expected next-state value `sum_{s'} P_h(s'|s,a) v(s')`.
    pub fn expected_next(&self, h: usize, s: usize, a: usize, next_values: &[f64]) -> f64 {
        self.transition(h, s, a)
            .iter()
            .zip(next_values)
            .map(|(p, v)| p * v)
            .sum()
    }
}

/// Deterministic non-stationary policy `pi[h][s]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    num_states: usize,
    actions: Vec<usize>,
}

impl Policy {
    /// Builds a policy from nested per-step action lists.
    pub fn new(actions: Vec<Vec<usize>>, num_actions: usize) -> Result<Self> {
        let num_states = actions.first().map_or(0, Vec::len);
        if actions.iter().any(|layer| layer.len() != num_states) {
            return Err(Error::InvalidArgument("ragged policy table".into()));
        }
        let flat: Vec<usize> = actions.into_iter().flatten().collect();
        if let Some(a) = flat.iter().find(|a| **a >= num_actions) {
            return Err(Error::InvalidArgument(format!("action {a} out of range")));
        }
        Ok(Self { num_states, actions: flat })
    }

    pub(crate) fn from_flat(num_states: usize, actions: Vec<usize>) -> Self {
        Self { num_states, actions }
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.num_states + s]
    }

    pub fn horizon(&self) -> usize {
        if self.num_states == 0 {
            0
        } else {
            self.actions.len() / self.num_states
        }
    }

    /// Enumerates every deterministic policy when there are at most `cap`
    /// of them.
    pub fn enumerate_all(mdp: &TabularMdp, cap: usize) -> Option<Vec<Policy>> {
        let slots = mdp.horizon() * mdp.num_states();
        let count = (mdp.num_actions() as u128).checked_pow(slots as u32)?;
        if count > cap as u128 {
            return None;
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0usize; slots];
        loop {
            out.push(Policy::from_flat(mdp.num_states(), digits.clone()));
            let mut i = 0;
            loop {
                if i == slots {
                    return Some(out);
                }
                digits[i] += 1;
                if digits[i] < mdp.num_actions() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
}

/// What a [`StepDistribution`] is defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Support {
    StateAction,
    State,
}

/// Probability vector over state-action pairs or states at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution {
    pub kind: Support,
    pub weights: Vec<f64>,
}

impl StepDistribution {
    pub fn point_mass(kind: Support, len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { kind, weights }
    }

    /// `E[g]` for a table `g` over the same support.
    pub fn expect(&self, table: &[f64]) -> f64 {
        self.weights.iter().zip(table).map(|(w, g)| w * g).sum()
    }

    /// Sums a state-action distribution over actions.
    pub fn state_marginal(&self, num_actions: usize) -> StepDistribution {
        match self.kind {
            Support::State => self.clone(),
            Support::StateAction => StepDistribution {
                kind: Support::State,
                weights: self.weights.chunks(num_actions).map(|c| c.iter().sum()).collect(),
            },
        }
    }

    pub fn l1_distance(&self, other: &StepDistribution) -> f64 {
        self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// One observed transition at step `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub h: usize,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|t| t.r).sum()
    }
}

/// Returns `Q*` by backward induction with a zero terminal layer.
pub fn optimal_q(mdp: &TabularMdp) -> QTuple {
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let mut layers = vec![Vec::new(); mdp.horizon()];
    let mut next_v = vec![0.0; s_count];
    for h in (0..mdp.horizon()).rev() {
        let mut layer = vec![0.0; s_count * a_count];
        for s in 0..s_count {
            for a in 0..a_count {
                layer[s * a_count + a] = mdp.reward(h, s, a) + mdp.expected_next(h, s, a, &next_v);
            }
        }
        next_v = layer
            .chunks(a_count)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        layers[h] = layer;
    }
    QTuple::from_layers_unchecked(s_count, a_count, layers)
}

/// Per-step state values `V^pi_h`, with `V_{H}` (past the horizon) omitted.
pub fn policy_state_values(mdp: &TabularMdp, pi: &Policy) -> Vec<Vec<f64>> {
    let s_count = mdp.num_states();
    let mut values = vec![Vec::new(); mdp.horizon()];
    let mut next_v = vec![0.0; s_count];
    for h in (0..mdp.horizon()).rev() {
        let current: Vec<f64> = (0..s_count)
            .map(|s| {
                let a = pi.action(h, s);
                mdp.reward(h, s, a) + mdp.expected_next(h, s, a, &next_v)
            })
            .collect();
        values[h] = current.clone();
        next_v = current;
    }
    values
}

/// `E_{s_1 ~ init}[V^pi_1(s_1)]` by exact backward induction.
pub fn policy_value(mdp: &TabularMdp, pi: &Policy) -> f64 {
    let values = policy_state_values(mdp, pi);
    mdp.initial_distribution()
        .iter()
        .zip(&values[0])
        .map(|(p, v)| p * v)
        .sum()
}

/// State distribution at every step under `pi` (forward pass).
pub fn state_occupancy(mdp: &TabularMdp, pi: &Policy) -> Vec<Vec<f64>> {
    let s_count = mdp.num_states();
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut current = mdp.initial_distribution().to_vec();
    for h in 0..mdp.horizon() {
        let mut next = vec![0.0; s_count];
        for (s, &mass) in current.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let a = pi.action(h, s);
            for (n, p) in next.iter_mut().zip(mdp.transition(h, s, a)) {
                *n += mass * p;
            }
        }
        out.push(current);
        current = next;
    }
    out
}

/// `Pr^pi(s_h = s, a_h = a)` for every step.
pub fn occupancy(mdp: &TabularMdp, pi: &Policy) -> Vec<StepDistribution> {
    let a_count = mdp.num_actions();
    state_occupancy(mdp, pi)
        .into_iter()
        .enumerate()
        .map(|(h, states)| {
            let mut weights = vec![0.0; mdp.num_pairs()];
            for (s, mass) in states.into_iter().enumerate() {
                weights[s * a_count + pi.action(h, s)] = mass;
            }
            StepDistribution { kind: Support::StateAction, weights }
        })
        .collect()
}

/// Draws an index from `weights` by inverse CDF on one uniform `f64` draw.
///
/// This is the only categorical sampler in the crate, so together with
/// `ChaCha8Rng::seed_from_u64` it fixes every simulated trajectory.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
            cumulative += w;
            if u < cumulative {
                return i;
            }
        }
    }
    last_positive
}

fn simulate_with<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    mut choose: impl FnMut(usize, usize, &mut R) -> usize,
    rng: &mut R,
) -> Trajectory {
    let mut s = sample_index(mdp.initial_distribution(), rng);
    let mut steps = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let a = choose(h, s, rng);
        let s_next = sample_index(mdp.transition(h, s, a), rng);
        steps.push(Transition { h, s, a, r: mdp.reward(h, s, a), s_next });
        s = s_next;
    }
    Trajectory { steps }
}

/// Samples one episode following `pi`.
pub fn simulate_episode<R: Rng + ?Sized>(mdp: &TabularMdp, pi: &Policy, rng: &mut R) -> Trajectory {
    simulate_with(mdp, |h, s, _| pi.action(h, s), rng)
}

/// Samples one episode following `pi` except at step `step`, where the
/// action is uniform over all actions. With a single action no randomness is
/// drawn, so the stream matches `simulate_episode`.
pub fn simulate_with_uniform_action_at<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    pi: &Policy,
    step: usize,
    rng: &mut R,
) -> Trajectory {
    let a_count = mdp.num_actions();
    simulate_with(
        mdp,
        |h, s, rng| {
            if h == step && a_count > 1 {
                rng.gen_range(0..a_count)
            } else if h == step {
                0
            } else {
                pi.action(h, s)
            }
        },
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// 3 states, 2 actions, H = 2, deterministic.
    /// Step 0: from s0, a0 -> s1 (r 0.1), a1 -> s2 (r 0.0); other states self-loop.
    /// Step 1: r(s1,a0) = 0.3, r(s1,a1) = 0.2, r(s2,a0) = 0.0, r(s2,a1) = 0.8.
    pub(crate) fn chain() -> TabularMdp {
        let point = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v
        };
        let p0 = vec![
            vec![point(1), point(2)],
            vec![point(1), point(1)],
            vec![point(2), point(2)],
        ];
        let p1 = vec![
            vec![point(0), point(0)],
            vec![point(1), point(1)],
            vec![point(2), point(2)],
        ];
        let r = vec![
            vec![vec![0.1, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.3, 0.2], vec![0.0, 0.8]],
        ];
        TabularMdp::from_nested(&[p0, p1], &r, point(0)).unwrap()
    }

    #[test]
    fn chain_optimal_q_matches_hand_backward_induction() {
        let q = optimal_q(&chain());
        // Step 1 is the reward table itself.
        assert_eq!(q.layer(1), &[0.0, 0.0, 0.3, 0.2, 0.0, 0.8]);
        // Step 0: Q(s0,a0) = 0.1 + 0.3, Q(s0,a1) = 0 + 0.8, Q(s1,.) = 0.3, Q(s2,.) = 0.8.
        let expected = [0.4, 0.8, 0.3, 0.3, 0.8, 0.8];
        for (got, want) in q.layer(0).iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn chain_policy_value_by_hand() {
        let mdp = chain();
        let pi = Policy::new(vec![vec![0, 0, 0], vec![0, 0, 0]], 2).unwrap();
        assert!((policy_value(&mdp, &pi) - 0.4).abs() < 1e-15);
        let pi = Policy::new(vec![vec![1, 0, 0], vec![0, 0, 1]], 2).unwrap();
        assert!((policy_value(&mdp, &pi) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_reward_gives_zero_q() {
        let p = vec![vec![vec![vec![0.5, 0.5]; 2]; 2]; 3];
        let r = vec![vec![vec![0.0; 2]; 2]; 3];
        let mdp = TabularMdp::from_nested(&p, &r, vec![1.0, 0.0]).unwrap();
        let q = optimal_q(&mdp);
        for h in 0..3 {
            assert!(q.layer(h).iter().all(|v| *v == 0.0));
        }
        let pi = Policy::new(vec![vec![0, 1]; 3], 2).unwrap();
        assert_eq!(policy_value(&mdp, &pi), 0.0);
    }

    #[test]
    fn single_step_q_is_reward() {
        let p = vec![vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; 2]];
        let r = vec![vec![vec![0.2, 0.7], vec![0.9, 0.1]]];
        let mdp = TabularMdp::from_nested(&p, &r, vec![0.5, 0.5]).unwrap();
        assert_eq!(optimal_q(&mdp).layer(0), &[0.2, 0.7, 0.9, 0.1]);
    }

    #[test]
    fn validator_rejects_bad_rows_and_warns_on_large_returns() {
        let p = vec![vec![vec![vec![0.6, 0.6]]; 2]];
        let r = vec![vec![vec![0.0]; 2]];
        assert!(TabularMdp::from_nested(&p, &r, vec![1.0, 0.0]).is_err());

        let p = vec![vec![vec![vec![1.0, 0.0]]; 2]; 2];
        let r = vec![vec![vec![0.8]; 2]; 2];
        let mdp = TabularMdp::from_nested(&p, &r, vec![1.0, 0.0]).unwrap();
        assert!((mdp.max_return() - 1.6).abs() < 1e-12);
        assert_eq!(mdp.warnings().len(), 1);

        assert!(TabularMdp::from_nested(&p, &r, vec![0.7, 0.2]).is_err());
    }

    #[test]
    fn uniform_start_occupancy_splits_mass() {
        let p = vec![vec![vec![vec![1.0, 0.0]; 3]; 2]];
        let r = vec![vec![vec![0.0; 3]; 2]];
        let mdp = TabularMdp::from_nested(&p, &r, vec![0.5, 0.5]).unwrap();
        let pi = Policy::new(vec![vec![2, 1]], 3).unwrap();
        let occ = occupancy(&mdp, &pi);
        assert_eq!(occ[0].weights, vec![0.0, 0.0, 0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn deterministic_mdp_has_unique_trajectory() {
        let mdp = chain();
        let pi = Policy::new(vec![vec![1, 0, 0], vec![0, 0, 1]], 2).unwrap();
        let a = simulate_episode(&mdp, &pi, &mut ChaCha8Rng::seed_from_u64(1));
        let b = simulate_episode(&mdp, &pi, &mut ChaCha8Rng::seed_from_u64(999));
        assert_eq!(a, b);
        assert_eq!(a.steps[0], Transition { h: 0, s: 0, a: 1, r: 0.0, s_next: 2 });
        assert_eq!(a.steps[1], Transition { h: 1, s: 2, a: 1, r: 0.8, s_next: 2 });
    }

    #[test]
    fn enumerate_all_policies_counts() {
        let mdp = chain();
        assert_eq!(Policy::enumerate_all(&mdp, 1 << 10).unwrap().len(), 64);
        assert!(Policy::enumerate_all(&mdp, 10).is_none());
    }
}
