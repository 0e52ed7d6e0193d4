//! Finite hypothesis classes of candidate optimal Q-functions.

use std::collections::HashMap;

use crate::bellman::apply_bellman;
use crate::error::{Error, Result};
use crate::mdp::{occupancy, optimal_q, Policy, StepDistribution, Support, TabularMdp};

/// Tolerance under which two tables or distributions are considered equal.
pub const DEDUP_TOL: f64 = 1e-12;

/// Default upper limit on the number of members of a product class.
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

pub(crate) fn max_norm_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Index of the first maximal entry.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn row_max(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `max_a layer(s, a)` for every state; zero when `layer` is `None`
/// (the layer past the horizon).
pub(crate) fn state_maxima(layer: Option<&[f64]>, num_states: usize, num_actions: usize) -> Vec<f64> {
    match layer {
        Some(table) => table.chunks(num_actions).map(row_max).collect(),
        None => vec![0.0; num_states],
    }
}

/// A candidate Q-function `f = (f_1, ..., f_H)` stored as one flat
/// state-action table per step. The layer past the horizon is zero and is
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct QTuple {
    num_states: usize,
    num_actions: usize,
    layers: Vec<Vec<f64>>,
}

impl QTuple {
    pub fn new(num_states: usize, num_actions: usize, layers: Vec<Vec<f64>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidClass("a Q-tuple needs at least one layer".into()));
        }
        for (h, layer) in layers.iter().enumerate() {
            if layer.len() != num_states * num_actions {
                return Err(Error::DimensionMismatch {
                    context: "Q-tuple layer",
                    expected: num_states * num_actions,
                    found: layer.len(),
                });
            }
            if layer.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidClass(format!("layer {h} has a non-finite entry")));
            }
        }
        Ok(Self::from_layers_unchecked(num_states, num_actions, layers))
    }

    pub(crate) fn from_layers_unchecked(num_states: usize, num_actions: usize, layers: Vec<Vec<f64>>) -> Self {
        Self { num_states, num_actions, layers }
    }

    /// Builds a tuple from nested `q[h][s][a]` tables.
    pub fn from_nested(tables: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_states = tables.first().map_or(0, Vec::len);
        let num_actions = tables.first().and_then(|t| t.first()).map_or(0, Vec::len);
        let layers = tables
            .iter()
            .map(|t| t.iter().flatten().copied().collect())
            .collect();
        Self::new(num_states, num_actions, layers)
    }

    pub fn zero(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Self::from_layers_unchecked(num_states, num_actions, vec![vec![0.0; num_states * num_actions]; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.layers.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn layer(&self, h: usize) -> &[f64] {
        &self.layers[h]
    }

    /// The layer at `h`, or `None` past the horizon.
    pub fn layer_or_zero(&self, h: usize) -> Option<&[f64]> {
        self.layers.get(h).map(Vec::as_slice)
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn value(&self, h: usize, s: usize, a: usize) -> f64 {
        self.layers.get(h).map_or(0.0, |l| l[s * self.num_actions + a])
    }

    pub fn greedy_action(&self, h: usize, s: usize) -> usize {
        argmax(&self.layers[h][s * self.num_actions..(s + 1) * self.num_actions])
    }

    /// `max_a f_h(s, a)` for every state (zero past the horizon).
    pub fn state_values(&self, h: usize) -> Vec<f64> {
        state_maxima(self.layer_or_zero(h), self.num_states, self.num_actions)
    }

    /// Optimistic initial value `E_{s_1 ~ init}[max_a f_1(s_1, a)]`.
    pub fn initial_value(&self, mdp: &TabularMdp) -> f64 {
        mdp.initial_distribution()
            .iter()
            .zip(self.state_values(0))
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn in_unit_range(&self) -> bool {
        self.layers.iter().flatten().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn max_norm_distance(&self, other: &QTuple) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| max_norm_distance(a, b))
            .fold(0.0, f64::max)
    }

    /// Nested copy `q[h][s][a]`.
    pub fn nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.layers
            .iter()
            .map(|l| l.chunks(self.num_actions).map(<[f64]>::to_vec).collect())
            .collect()
    }
}

/// Greedy policy `pi_f(s) = argmax_a f_h(s, a)`, ties to the lowest action.
pub fn greedy_policy(f: &QTuple) -> Policy {
    let actions = (0..f.horizon())
        .flat_map(|h| (0..f.num_states()).map(move |s| (h, s)))
        .map(|(h, s)| f.greedy_action(h, s))
        .collect();
    Policy::from_flat(f.num_states(), actions)
}

/// Finite class of Q-tuples, stored as an explicit member list together with
/// the distinct layer tables appearing at each step.
#[derive(Debug, Clone)]
pub struct FunctionClass {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    members: Vec<QTuple>,
    layers: Vec<Vec<Vec<f64>>>,
    layer_ids: Vec<Vec<usize>>,
    factored: bool,
}

fn intern_layer(pool: &mut Vec<Vec<f64>>, layer: &[f64]) -> usize {
    if let Some(i) = pool.iter().position(|l| max_norm_distance(l, layer) < DEDUP_TOL) {
        return i;
    }
    pool.push(layer.to_vec());
    pool.len() - 1
}

impl FunctionClass {
    /// Builds a class from explicit members, dropping duplicates.
    pub fn from_members(members: Vec<QTuple>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidClass("class must be non-empty".into()))?;
        let (num_states, num_actions, horizon) = (first.num_states, first.num_actions, first.horizon());
        let mut layers = vec![Vec::new(); horizon];
        let mut seen = HashMap::new();
        let mut kept = Vec::new();
        let mut layer_ids = Vec::new();
        for q in members {
            if q.num_states != num_states || q.num_actions != num_actions || q.horizon() != horizon {
                return Err(Error::InvalidClass("members disagree on S, A or H".into()));
            }
            let ids: Vec<usize> = (0..horizon).map(|h| intern_layer(&mut layers[h], q.layer(h))).collect();
            if seen.contains_key(&ids) {
                continue;
            }
            seen.insert(ids.clone(), kept.len());
            kept.push(q);
            layer_ids.push(ids);
        }
        Ok(Self { num_states, num_actions, horizon, members: kept, layers, layer_ids, factored: false })
    }

    /// Builds the product class `F_1 x ... x F_H` from per-step table lists.
    /// Members are enumerated with the last step varying fastest.
    pub fn from_factored(
        num_states: usize,
        num_actions: usize,
        per_step: Vec<Vec<Vec<f64>>>,
        cap: usize,
    ) -> Result<Self> {
        let horizon = per_step.len();
        if horizon == 0 {
            return Err(Error::InvalidClass("factored class needs at least one step".into()));
        }
        let mut layers = vec![Vec::new(); horizon];
        for (h, tables) in per_step.iter().enumerate() {
            for t in tables {
                if t.len() != num_states * num_actions {
                    return Err(Error::DimensionMismatch {
                        context: "factored layer",
                        expected: num_states * num_actions,
                        found: t.len(),
                    });
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidClass(format!("step {h} has a non-finite entry")));
                }
                intern_layer(&mut layers[h], t);
            }
            if layers[h].is_empty() {
                return Err(Error::InvalidClass(format!("F_{h} is empty")));
            }
        }
        let size = layers.iter().fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128));
        if size > cap as u128 {
            return Err(Error::EnumerationCap { size, cap });
        }
        let mut members = Vec::with_capacity(size as usize);
        let mut layer_ids = Vec::with_capacity(size as usize);
        let mut digits = vec![0usize; horizon];
        'outer: loop {
            let tables = digits.iter().enumerate().map(|(h, &i)| layers[h][i].clone()).collect();
            members.push(QTuple::from_layers_unchecked(num_states, num_actions, tables));
            layer_ids.push(digits.clone());
            for h in (0..horizon).rev() {
                digits[h] += 1;
                if digits[h] < layers[h].len() {
                    continue 'outer;
                }
                digits[h] = 0;
            }
            break;
        }
        Ok(Self { num_states, num_actions, horizon, members, layers, layer_ids, factored: true })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_factored(&self) -> bool {
        self.factored
    }

    pub fn member(&self, i: usize) -> &QTuple {
        &self.members[i]
    }

    pub fn members(&self) -> &[QTuple] {
        &self.members
    }

    /// Distinct layer tables appearing at step `h`.
    pub fn layers(&self, h: usize) -> &[Vec<f64>] {
        &self.layers[h]
    }

    /// Index into [`FunctionClass::layers`] of member `i`'s layer at `h`.
    pub fn layer_id(&self, i: usize, h: usize) -> usize {
        self.layer_ids[i][h]
    }

    /// First member within `tol` of `q` in max norm.
    pub fn find(&self, q: &QTuple, tol: f64) -> Option<usize> {
        self.members.iter().position(|m| m.max_norm_distance(q) <= tol)
    }

    pub fn all_in_unit_range(&self) -> bool {
        self.members.iter().all(QTuple::in_unit_range)
    }

    /// The class with `q` appended (no-op when already present); also
    /// returns the index of `q`.
    pub fn with_member(&self, q: QTuple) -> Result<(Self, usize)> {
        if let Some(i) = self.find(&q, DEDUP_TOL) {
            return Ok((self.clone(), i));
        }
        let mut members = self.members.clone();
        members.push(q);
        let class = Self::from_members(members)?;
        let index = class.len() - 1;
        Ok((class, index))
    }

    pub fn check_compatible(&self, mdp: &TabularMdp) -> Result<()> {
        let pairs = [
            ("class states", mdp.num_states(), self.num_states),
            ("class actions", mdp.num_actions(), self.num_actions),
            ("class horizon", mdp.horizon(), self.horizon),
        ];
        for (context, expected, found) in pairs {
            if expected != found {
                return Err(Error::DimensionMismatch { context, expected, found });
            }
        }
        Ok(())
    }

    /// `E_init[max_a f_1(s, a)]` for every member.
    pub fn initial_values(&self, mdp: &TabularMdp) -> Vec<f64> {
        let per_layer: Vec<f64> = self.layers[0]
            .iter()
            .map(|l| {
                mdp.initial_distribution()
                    .iter()
                    .zip(state_maxima(Some(l), self.num_states, self.num_actions))
                    .map(|(p, v)| p * v)
                    .sum()
            })
            .collect();
        (0..self.len()).map(|i| per_layer[self.layer_id(i, 0)]).collect()
    }
}

/// Subset of class members, as a bitset over member indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionSpace {
    universe: usize,
    blocks: Vec<u64>,
}

impl VersionSpace {
    pub fn full(universe: usize) -> Self {
        let mut blocks = vec![u64::MAX; universe.div_ceil(64)];
        if !universe.is_multiple_of(64) {
            if let Some(last) = blocks.last_mut() {
                *last = (1u64 << (universe % 64)) - 1;
            }
        }
        Self { universe, blocks }
    }

    pub fn empty(universe: usize) -> Self {
        Self { universe, blocks: vec![0; universe.div_ceil(64)] }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.universe, "member {i} outside version space universe");
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.universe {
            self.blocks[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|b| *b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe).filter(move |i| self.contains(*i))
    }

    pub fn is_subset_of(&self, other: &VersionSpace) -> bool {
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }
}

impl FromIterator<usize> for VersionSpace {
    /// Collects member indices; the universe is one past the largest index.
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let items: Vec<usize> = iter.into_iter().collect();
        let universe = items.iter().max().map_or(0, |m| m + 1);
        let mut vs = Self::empty(universe);
        for i in items {
            vs.insert(i);
        }
        vs
    }
}

/// A deduplicated list of step distributions plus the map from the objects
/// that generated them (members, or state-action pairs) to list entries.
#[derive(Debug, Clone)]
pub struct DistributionFamily {
    pub distributions: Vec<StepDistribution>,
    pub source_to_distribution: Vec<usize>,
}

impl DistributionFamily {
    pub(crate) fn dedup(raw: Vec<StepDistribution>) -> Self {
        let mut distributions: Vec<StepDistribution> = Vec::new();
        let mut source_to_distribution = Vec::with_capacity(raw.len());
        for d in raw {
            match distributions.iter().position(|e| e.l1_distance(&d) < DEDUP_TOL) {
                Some(i) => source_to_distribution.push(i),
                None => {
                    source_to_distribution.push(distributions.len());
                    distributions.push(d);
                }
            }
        }
        Self { distributions, source_to_distribution }
    }

    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }

    /// First source generating distribution `d`.
    pub fn representative(&self, d: usize) -> usize {
        self.source_to_distribution
            .iter()
            .position(|x| *x == d)
            .expect("every distribution has a source")
    }
}

/// Roll-in distributions at step `h` of the greedy policies of all members.
/// With `Support::State` the state marginals are returned instead.
pub fn rollin_family(mdp: &TabularMdp, class: &FunctionClass, h: usize, kind: Support) -> DistributionFamily {
    // The roll-in at step h depends only on layers 0..=h.
    let mut by_prefix: HashMap<&[usize], StepDistribution> = HashMap::new();
    let raw = (0..class.len())
        .map(|i| {
            let prefix = &class.layer_ids[i][..=h];
            by_prefix
                .entry(prefix)
                .or_insert_with(|| {
                    let dist = occupancy(mdp, &greedy_policy(class.member(i))).swap_remove(h);
                    match kind {
                        Support::StateAction => dist,
                        Support::State => dist.state_marginal(mdp.num_actions()),
                    }
                })
                .clone()
        })
        .collect();
    DistributionFamily::dedup(raw)
}

/// All point masses over state-action pairs (or states).
pub fn dirac_family(mdp: &TabularMdp, _h: usize, kind: Support) -> Vec<StepDistribution> {
    let len = match kind {
        Support::StateAction => mdp.num_pairs(),
        Support::State => mdp.num_states(),
    };
    (0..len).map(|i| StepDistribution::point_mass(kind, len, i)).collect()
}

/// Outcome of [`closure_class`].
#[derive(Debug, Clone)]
pub struct Closure {
    pub class: FunctionClass,
    /// Set when some Bellman image left `[0, 1]` and was clamped, which can
    /// break completeness.
    pub clamped: bool,
}

/// Builds `F_h = seeds_h ∪ T_h F_{h+1}` from the last step down, starting
/// from `F_{H+1} = {0}` when `include_qstar` is set (so `T_H 0 = r_H` joins
/// `F_H` and `Q*` is a member) and from the seeds alone otherwise.
pub fn closure_class(
    mdp: &TabularMdp,
    seeds: &[Vec<Vec<f64>>],
    include_qstar: bool,
    cap: usize,
) -> Result<Closure> {
    let horizon = mdp.horizon();
    if seeds.len() != horizon {
        return Err(Error::DimensionMismatch { context: "seed steps", expected: horizon, found: seeds.len() });
    }
    let mut per_step: Vec<Vec<Vec<f64>>> = vec![Vec::new(); horizon];
    let mut clamped = false;
    for h in (0..horizon).rev() {
        let mut pool: Vec<Vec<f64>> = Vec::new();
        for seed in &seeds[h] {
            if seed.len() != mdp.num_pairs() {
                return Err(Error::DimensionMismatch {
                    context: "seed table",
                    expected: mdp.num_pairs(),
                    found: seed.len(),
                });
            }
            if seed.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidClass(format!("seed at step {h} leaves [0, 1]")));
            }
            intern_layer(&mut pool, seed);
        }
        let images: Vec<Vec<f64>> = if h + 1 == horizon {
            if include_qstar {
                vec![apply_bellman(mdp, None, h)]
            } else {
                Vec::new()
            }
        } else {
            per_step[h + 1].iter().map(|next| apply_bellman(mdp, Some(next), h)).collect()
        };
        for mut image in images {
            for v in image.iter_mut() {
                if *v > 1.0 {
                    *v = 1.0;
                    clamped = true;
                }
            }
            intern_layer(&mut pool, &image);
        }
        if pool.is_empty() {
            return Err(Error::InvalidClass(format!("closure step {h} is empty")));
        }
        per_step[h] = pool;
    }
    let class = FunctionClass::from_factored(mdp.num_states(), mdp.num_actions(), per_step, cap)?;
    Ok(Closure { class, clamped })
}

/// Largest distance, over steps and next-step layers, between `T_h f_{h+1}`
/// and its nearest layer in `F_h`. Zero (up to rounding) iff the class is
/// closed under the Bellman operator.
pub fn completeness_gap(mdp: &TabularMdp, class: &FunctionClass) -> f64 {
    let mut worst: f64 = 0.0;
    for h in 0..class.horizon() {
        let next_layers: Vec<Option<&[f64]>> = if h + 1 == class.horizon() {
            vec![None]
        } else {
            class.layers(h + 1).iter().map(|l| Some(l.as_slice())).collect()
        };
        for next in next_layers {
            let image = apply_bellman(mdp, next, h);
            let nearest = class
                .layers(h)
                .iter()
                .map(|g| max_norm_distance(g, &image))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    worst
}

/// Index of `Q*` in the class, if present within `1e-10`.
pub fn find_optimal(mdp: &TabularMdp, class: &FunctionClass) -> Option<usize> {
    class.find(&optimal_q(mdp), 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step_mdp() -> TabularMdp {
        let p = vec![vec![vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![0.3, 0.7]]]; 2];
        let r = vec![vec![vec![0.1, 0.2], vec![0.0, 0.3]], vec![vec![0.25, 0.0], vec![0.4, 0.1]]];
        TabularMdp::from_nested(&p, &r, vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn greedy_ties_go_to_lowest_action() {
        let f = QTuple::zero(3, 4, 2);
        let pi = greedy_policy(&f);
        for h in 0..2 {
            for s in 0..3 {
                assert_eq!(pi.action(h, s), 0);
            }
        }
    }

    #[test]
    fn greedy_matches_optimal_policy_on_two_step_mdp() {
        let mdp = two_step_mdp();
        let q = optimal_q(&mdp);
        let pi = greedy_policy(&q);
        // Step 1 (last): argmax of the reward rows.
        assert_eq!((pi.action(1, 0), pi.action(1, 1)), (0, 0));
        // Step 0: V_1 = (0.25, 0.4).
        // Q(s0,a0) = 0.1 + 0.5*0.25 + 0.5*0.4 = 0.425, Q(s0,a1) = 0.2 + 0.25 = 0.45.
        // Q(s1,a0) = 0.0 + 0.4 = 0.4, Q(s1,a1) = 0.3 + 0.3*0.25 + 0.7*0.4 = 0.655.
        assert_eq!((pi.action(0, 0), pi.action(0, 1)), (1, 1));
    }

    #[test]
    fn empty_seeds_give_singleton_qstar() {
        let mdp = two_step_mdp();
        let closure = closure_class(&mdp, &[vec![], vec![]], true, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(closure.class.len(), 1);
        assert!(closure.class.member(0).max_norm_distance(&optimal_q(&mdp)) < 1e-15);
        assert!(!closure.clamped);
    }

    #[test]
    fn one_extra_seed_doubles_last_layers() {
        let mdp = two_step_mdp();
        let seeds = vec![vec![vec![0.5, 0.5, 0.5, 0.5]], vec![vec![0.0, 0.1, 0.2, 0.3]]];
        let closure = closure_class(&mdp, &seeds, true, DEFAULT_ENUMERATION_CAP).unwrap();
        let class = closure.class;
        assert_eq!(class.layers(1).len(), 2);
        assert_eq!(class.layers(0).len(), 1 + 2);
        assert_eq!(class.len(), 6);
        // Exhaustive completeness: every T_h f_{h+1} lies in F_h.
        for f in class.members() {
            for h in 0..2 {
                let image = apply_bellman(&mdp, f.layer_or_zero(h + 1), h);
                assert!(class.layers(h).iter().any(|g| max_norm_distance(g, &image) <= 1e-10));
            }
        }
        assert!(completeness_gap(&mdp, &class) <= 1e-10);
        assert!(find_optimal(&mdp, &class).is_some());
    }

    #[test]
    fn closure_without_terminal_image_can_miss_qstar() {
        let mdp = two_step_mdp();
        let seeds = vec![vec![], vec![vec![0.0, 0.1, 0.2, 0.3]]];
        let class = closure_class(&mdp, &seeds, false, DEFAULT_ENUMERATION_CAP).unwrap().class;
        assert_eq!(class.len(), 1);
        assert!(find_optimal(&mdp, &class).is_none());
        assert!(completeness_gap(&mdp, &class) > 0.0);
    }

    #[test]
    fn factored_cap_is_enforced() {
        let tables = vec![vec![vec![0.0], vec![0.5], vec![1.0]]; 3];
        assert!(matches!(
            FunctionClass::from_factored(1, 1, tables, 20),
            Err(Error::EnumerationCap { size: 27, cap: 20 })
        ));
    }

    #[test]
    fn duplicate_members_are_dropped() {
        let a = QTuple::new(1, 2, vec![vec![0.1, 0.2]]).unwrap();
        let b = QTuple::new(1, 2, vec![vec![0.1, 0.2 + 1e-14]]).unwrap();
        let c = QTuple::new(1, 2, vec![vec![0.3, 0.2]]).unwrap();
        let class = FunctionClass::from_members(vec![a, b, c]).unwrap();
        assert_eq!(class.len(), 2);
        assert!(FunctionClass::from_members(vec![]).is_err());
    }

    #[test]
    fn singleton_class_has_singleton_rollin() {
        let mdp = two_step_mdp();
        let class = FunctionClass::from_members(vec![optimal_q(&mdp)]).unwrap();
        for h in 0..2 {
            let fam = rollin_family(&mdp, &class, h, Support::StateAction);
            assert_eq!(fam.len(), 1);
            assert!((fam.distributions[0].total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_family_has_one_mass_per_pair() {
        let mdp = two_step_mdp();
        let fam = dirac_family(&mdp, 0, Support::StateAction);
        assert_eq!(fam.len(), mdp.num_pairs());
        for (i, d) in fam.iter().enumerate() {
            assert_eq!(d.weights[i], 1.0);
            assert_eq!(d.total(), 1.0);
        }
        assert_eq!(dirac_family(&mdp, 0, Support::State).len(), 2);
    }

    #[test]
    fn version_space_bit_ops() {
        let mut vs = VersionSpace::full(70);
        assert_eq!(vs.len(), 70);
        vs.remove(3);
        vs.remove(69);
        assert_eq!(vs.len(), 68);
        assert!(!vs.contains(69) && vs.contains(68));
        let sub: VersionSpace = [1usize, 5].into_iter().collect();
        assert_eq!(sub.universe(), 6);
        let mut small = VersionSpace::empty(70);
        small.insert(1);
        small.insert(5);
        assert!(small.is_subset_of(&vs));
        small.insert(3);
        assert!(!small.is_subset_of(&vs));
    }
}
