//! Instances with known dimension facts: the linear bandit separating BE
//! dimension from Eluder dimension and Bellman rank, the two contextual
//! bandits separating the roll-in and Dirac families, and random
//! realizable, complete tabular instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::bellman::ErrorKind;
use crate::dims::{be_dimension, bellman_rank, class_eluder_dimension, Family, SearchOptions};
use crate::error::{Error, Result};
use crate::function_class::{closure_class, completeness_gap, find_optimal, FunctionClass, QTuple, DEFAULT_ENUMERATION_CAP};
use crate::mdp::TabularMdp;

/// Relative tolerance for the Bellman-rank singular-value cutoff.
pub const RANK_TOL: f64 = 1e-8;
/// Completeness gaps below this count as zero.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `max_h dim_E(F_h, eps)` over state-action points.
    Eluder,
    Be,
    Vbe,
    Rank,
    Vrank,
    /// [`completeness_gap`] of the class.
    CompletenessGap,
    /// 1 when `Q*` is a member, else 0.
    Realizable,
}

impl Measure {
    pub fn uses_eps(self) -> bool {
        matches!(self, Measure::Eluder | Measure::Be | Measure::Vbe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// `measure(family, eps) relation value` for every `eps` in
/// `(eps_low, eps_high]` (or `(eps_low, eps_high)` when `!high_inclusive`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub measure: Measure,
    pub family: Option<Family>,
    pub eps_low: f64,
    pub eps_high: f64,
    pub high_inclusive: bool,
    pub relation: Relation,
    pub value: f64,
}

impl Fact {
    fn dim(measure: Measure, family: Option<Family>, eps_high: f64, high_inclusive: bool, relation: Relation, value: usize) -> Self {
        Self { measure, family, eps_low: 0.0, eps_high, high_inclusive, relation, value: value as f64 }
    }

    pub fn applies_at(&self, eps: f64) -> bool {
        !self.measure.uses_eps() || (eps > self.eps_low && (eps < self.eps_high || (self.high_inclusive && eps == self.eps_high)))
    }

    pub fn describe(&self) -> String {
        let family = self.family.map(|f| format!("[{}]", f.name())).unwrap_or_default();
        let rel = match self.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let range = if self.measure.uses_eps() {
            format!(" for eps in ({}, {}{}", self.eps_low, self.eps_high, if self.high_inclusive { "]" } else { ")" })
        } else {
            String::new()
        };
        format!("{:?}{family} {rel} {}{range}", self.measure, self.value).to_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactCheck {
    pub fact: Fact,
    pub eps: Option<f64>,
    pub observed: f64,
    /// Whether the computation behind `observed` was exhaustive.
    pub exact: bool,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub name: String,
    pub mdp: TabularMdp,
    pub class: FunctionClass,
    pub facts: Vec<Fact>,
    /// Construction parameters and generator-specific data.
    pub metadata: serde_json::Value,
}

impl NamedInstance {
    /// Evaluates one fact. Non-exhaustive searches give lower bounds, which
    /// can establish `>=` facts only.
    pub fn check(&self, fact: &Fact, eps: f64, opts: SearchOptions) -> Result<FactCheck> {
        let (observed, exact) = match fact.measure {
            Measure::Eluder => {
                let r = class_eluder_dimension(&self.class, eps, opts);
                (r.value as f64, r.exact)
            }
            Measure::Be | Measure::Vbe => {
                let kind = if fact.measure == Measure::Be { ErrorKind::Q } else { ErrorKind::V };
                let family = fact.family.ok_or_else(|| Error::InvalidArgument("dimension fact needs a family".into()))?;
                let r = be_dimension(&self.mdp, &self.class, family, kind, eps, opts)?;
                (r.value as f64, r.exact)
            }
            Measure::Rank | Measure::Vrank => {
                let kind = if fact.measure == Measure::Rank { ErrorKind::Q } else { ErrorKind::V };
                (bellman_rank(&self.mdp, &self.class, kind, RANK_TOL)?.value as f64, true)
            }
            Measure::CompletenessGap => {
                let gap = completeness_gap(&self.mdp, &self.class);
                (if gap < COMPLETENESS_TOL { 0.0 } else { gap }, true)
            }
            Measure::Realizable => (if find_optimal(&self.mdp, &self.class).is_some() { 1.0 } else { 0.0 }, true),
        };
        let holds = match fact.relation {
            Relation::Le => exact && observed <= fact.value,
            Relation::Ge => observed >= fact.value,
            Relation::Eq => exact && observed == fact.value,
        };
        Ok(FactCheck { fact: fact.clone(), eps: fact.measure.uses_eps().then_some(eps), observed, exact, holds })
    }

    /// Checks every fact at every listed `eps` inside its range (facts that
    /// do not depend on `eps` are checked once).
    pub fn verify(&self, eps_values: &[f64], opts: SearchOptions) -> Result<Vec<FactCheck>> {
        let mut out = Vec::new();
        for fact in &self.facts {
            if fact.measure.uses_eps() {
                for &eps in eps_values.iter().filter(|e| fact.applies_at(**e)) {
                    out.push(self.check(fact, eps, opts)?);
                }
            } else {
                out.push(self.check(fact, f64::NAN, opts)?);
            }
        }
        Ok(out)
    }
}

fn bandit_mdp(num_states: usize, num_actions: usize, init: Vec<f64>) -> Result<TabularMdp> {
    let mut p = vec![0.0; num_states * num_actions * num_states];
    for sa in 0..num_states * num_actions {
        p[sa * num_states] = 1.0;
    }
    TabularMdp::new(1, num_states, num_actions, p, vec![0.0; num_states * num_actions], init)
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be at least 2, got {m}")));
    }
    Ok(())
}

/// Linear bandit with actions `(1; e_j)` and parameters `(1; e_i)`, so
/// `f_i(a_j) = 1 + 1[i = j]`; zero reward, one step, one state.
pub fn make_prop34(m: usize) -> Result<NamedInstance> {
    check_m(m)?;
    let mdp = bandit_mdp(1, m, vec![1.0])?;
    let members = (0..m)
        .map(|i| QTuple::new(1, m, vec![(0..m).map(|j| if i == j { 2.0 } else { 1.0 }).collect()]))
        .collect::<Result<Vec<_>>>()?;
    let class = FunctionClass::from_members(members)?;
    let thetas: Vec<Vec<f64>> = (0..m)
        .map(|i| std::iter::once(1.0).chain((0..m).map(|j| if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let facts = vec![
        Fact::dim(Measure::Eluder, None, 1.0, false, Relation::Ge, m - 1),
        Fact::dim(Measure::Rank, None, 1.0, true, Relation::Eq, m),
        Fact::dim(Measure::Be, Some(Family::Rollin), 1.0, true, Relation::Le, 5),
        Fact::dim(Measure::Be, Some(Family::Dirac), 1.0, true, Relation::Le, 5),
    ];
    Ok(NamedInstance {
        name: format!("prop34:{m}"),
        mdp,
        class,
        facts,
        metadata: serde_json::json!({ "generator": "prop34", "m": m, "thetas": thetas, "actions": thetas }),
    })
}

/// `m` states with the start fixed at state 0, two actions, zero reward,
/// `f_i(s, a) = 1[s = i] + 1[a = 0]`.
#[allow(non_snake_case)]
pub fn make_appF_a(m: usize) -> Result<NamedInstance> {
    check_m(m)?;
    let mut init = vec![0.0; m];
    init[0] = 1.0;
    let mdp = bandit_mdp(m, 2, init)?;
    let members = (0..m)
        .map(|i| {
            let layer = (0..m)
                .flat_map(|s| (0..2).map(move |a| f64::from(u8::from(s == i)) + f64::from(u8::from(a == 0))))
                .collect();
            QTuple::new(m, 2, vec![layer])
        })
        .collect::<Result<Vec<_>>>()?;
    let facts = vec![
        Fact::dim(Measure::Be, Some(Family::Rollin), 0.5, true, Relation::Le, 1),
        Fact::dim(Measure::Be, Some(Family::Dirac), 0.5, true, Relation::Ge, m),
    ];
    Ok(NamedInstance {
        name: format!("appF_a:{m}"),
        mdp,
        class: FunctionClass::from_members(members)?,
        facts,
        metadata: serde_json::json!({ "generator": "appF_a", "m": m }),
    })
}

/// Two states with a uniform start, `m` actions, zero reward,
/// `f_i(s, a) = (2 * 1[s = 0] - 1) + 0.5 * 1[a = i]`.
#[allow(non_snake_case)]
pub fn make_appF_b(m: usize) -> Result<NamedInstance> {
    check_m(m)?;
    let mdp = bandit_mdp(2, m, vec![0.5, 0.5])?;
    let members = (0..m)
        .map(|i| {
            let layer = (0..2)
                .flat_map(|s| (0..m).map(move |a| if s == 0 { 1.0 } else { -1.0 } + if a == i { 0.5 } else { 0.0 }))
                .collect();
            QTuple::new(2, m, vec![layer])
        })
        .collect::<Result<Vec<_>>>()?;
    let facts = vec![
        Fact::dim(Measure::Be, Some(Family::Dirac), 0.5, true, Relation::Le, 10),
        Fact::dim(Measure::Be, Some(Family::Rollin), 0.5, false, Relation::Ge, m),
    ];
    Ok(NamedInstance {
        name: format!("appF_b:{m}"),
        mdp,
        class: FunctionClass::from_members(members)?,
        facts,
        metadata: serde_json::json!({ "generator": "appF_b", "m": m }),
    })
}

/// Uniform draw from the simplex (normalized unit exponentials).
fn dirichlet_ones<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Random MDP with uniform-simplex transition rows, rewards uniform on
/// `[0, 1/H]`, start state 0, and the Bellman closure of `n_seeds` random
/// tables per step (step-`h` seeds uniform on `[0, (H - h)/H]`, so every
/// Bellman image stays in `[0, 1]`).
pub fn make_random_realizable(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    n_seeds: usize,
    seed: u64,
) -> Result<NamedInstance> {
    make_random_realizable_capped(num_states, num_actions, horizon, n_seeds, seed, DEFAULT_ENUMERATION_CAP)
}

pub fn make_random_realizable_capped(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    n_seeds: usize,
    seed: u64,
    cap: usize,
) -> Result<NamedInstance> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("S, A and H must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = num_states * num_actions;
    let p: Vec<f64> = (0..horizon * pairs).flat_map(|_| dirichlet_ones(num_states, &mut rng)).collect();
    let r: Vec<f64> = (0..horizon * pairs).map(|_| rng.gen::<f64>() / horizon as f64).collect();
    let mut init = vec![0.0; num_states];
    init[0] = 1.0;
    let mdp = TabularMdp::new(horizon, num_states, num_actions, p, r, init)?;
    let seeds: Vec<Vec<Vec<f64>>> = (0..horizon)
        .map(|h| {
            let top = (horizon - h) as f64 / horizon as f64;
            (0..n_seeds).map(|_| (0..pairs).map(|_| rng.gen::<f64>() * top).collect()).collect()
        })
        .collect();
    let closure = closure_class(&mdp, &seeds, true, cap)?;
    if closure.clamped {
        return Err(Error::InvalidClass("a Bellman image left [0, 1]".into()));
    }
    let facts = vec![
        Fact { measure: Measure::Realizable, family: None, eps_low: 0.0, eps_high: 0.0, high_inclusive: true, relation: Relation::Eq, value: 1.0 },
        Fact { measure: Measure::CompletenessGap, family: None, eps_low: 0.0, eps_high: 0.0, high_inclusive: true, relation: Relation::Le, value: 0.0 },
    ];
    let instance = NamedInstance {
        name: format!("random:{num_states}:{num_actions}:{horizon}:{n_seeds}:{seed}"),
        mdp,
        class: closure.class,
        facts,
        metadata: serde_json::json!({
            "generator": "random", "S": num_states, "A": num_actions, "H": horizon, "n_seeds": n_seeds, "seed": seed,
        }),
    };
    for check in instance.verify(&[], SearchOptions::default())? {
        if !check.holds {
            return Err(Error::InvalidClass(format!("constructed class violates {}", check.fact.describe())));
        }
    }
    Ok(instance)
}

/// Parses `prop34:m`, `appF_a:m`, `appF_b:m` or `random:S:A:H:n:seed`.
pub fn builtin(name: &str) -> Result<NamedInstance> {
    let parts: Vec<&str> = name.split(':').collect();
    let num = |s: &str| -> Result<u64> {
        s.parse().map_err(|_| Error::InvalidArgument(format!("bad number {s:?} in instance name {name:?}")))
    };
    match parts.as_slice() {
        ["prop34", m] => make_prop34(num(m)? as usize),
        ["appF_a", m] => make_appF_a(num(m)? as usize),
        ["appF_b", m] => make_appF_b(num(m)? as usize),
        ["random", s, a, h, n, seed] => {
            make_random_realizable(num(s)? as usize, num(a)? as usize, num(h)? as usize, num(n)? as usize, num(seed)?)
        }
        _ => Err(Error::InvalidArgument(format!(
            "unknown instance {name:?}; expected prop34:m, appF_a:m, appF_b:m or random:S:A:H:n:seed"
        ))),
    }
}
