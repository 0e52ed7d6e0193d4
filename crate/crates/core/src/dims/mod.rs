//! Exact, search-based complexity measures.
//!
//! Eluder-type dimensions quantify over a continuum of thresholds
//! `eps' >= eps`. For finite instances only finitely many values `|E_nu g|`
//! exist and independence needs `|E_nu g| > eps'`, so it suffices to test
//! just below each achievable value (plus `eps` itself). For a fixed
//! threshold the longest independent sequence is found by depth-first search
//! over used-element sets: the prefix sums of squares depend only on the set,
//! so each set is expanded once, and an element that stops being appendable
//! never becomes appendable again, which gives the pruning bound.

mod bellman_dims;
mod effective;
mod search;

pub use bellman_dims::{
    be_dimension, bellman_error_matrix, bellman_rank, class_eluder_dimension, rank_of, BeReport, EluderReport,
    Family, RankReport, StepDimension, StepEluder, StepRank,
};
pub use effective::{effective_dimension, log_det_gain, EffectiveDimension, EffectiveOptions};

use serde::{Deserialize, Serialize};

use search::{longest_sequence, Scoring};

/// Default search budget in expanded nodes, shared across thresholds.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub node_cap: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { node_cap: DEFAULT_NODE_CAP }
    }
}

/// Which function(s) certify one element of a witness sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Certifier {
    Function(usize),
    Pair(usize, usize),
}

/// A dimension value with the sequence witnessing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub value: usize,
    pub witness: Vec<usize>,
    pub eps: f64,
    pub eps_prime: f64,
    pub certifiers: Vec<Certifier>,
    /// `false` when the node budget ran out; `value` is then a lower bound.
    pub exact: bool,
    pub nodes: u64,
}

/// Relative slack used when placing a threshold just below a value.
pub(crate) fn below(v: f64) -> f64 {
    v - 1e-9 * (1.0 + v.abs())
}

/// `z` is `eps'`-independent of `prefix` w.r.t. `functions` (tables over
/// point indices) if two functions are within `eps'` in root-sum-square on
/// the prefix but differ by more than `eps'` at `z`. Returns the certifying
/// ordered pair.
pub fn is_independent_point(
    z: usize,
    prefix: &[usize],
    functions: &[Vec<f64>],
    eps_prime: f64,
) -> Option<(usize, usize)> {
    for (i, g1) in functions.iter().enumerate() {
        for (j, g2) in functions.iter().enumerate() {
            if g1[z] - g2[z] <= eps_prime {
                continue;
            }
            let sq: f64 = prefix.iter().map(|&x| (g1[x] - g2[x]).powi(2)).sum();
            if sq.sqrt() <= eps_prime {
                return Some((i, j));
            }
        }
    }
    None
}

/// `nu` is `eps'`-independent of `prefix` w.r.t. `functions` if some `g`
/// has root-sum-square expectation at most `eps'` on the prefix but
/// `|E_nu g| > eps'`. Returns the certifying function.
pub fn is_independent_dist(nu: &[f64], prefix: &[&[f64]], functions: &[Vec<f64>], eps_prime: f64) -> Option<usize> {
    let expect = |d: &[f64], g: &[f64]| -> f64 { d.iter().zip(g).map(|(w, v)| w * v).sum() };
    functions.iter().position(|g| {
        if expect(nu, g).abs() <= eps_prime {
            return false;
        }
        let sq: f64 = prefix.iter().map(|mu| expect(mu, g).powi(2)).sum();
        sq.sqrt() <= eps_prime
    })
}

fn threshold_candidates(values: impl Iterator<Item = f64>, eps: f64) -> Vec<f64> {
    let mut above: Vec<f64> = values.filter(|v| *v > eps).collect();
    above.sort_by(f64::total_cmp);
    above.dedup();
    let mut out = vec![eps];
    out.extend(above.into_iter().map(|v| below(v).max(eps)));
    out.dedup();
    out
}

/// Runs the threshold sweep over a score matrix (`rows` x columns).
fn sweep(rows: &[Vec<f64>], num_cols: usize, scoring: Scoring, eps: f64, opts: SearchOptions) -> (SweepBest, u64, bool) {
    let score = |v: f64| match scoring {
        Scoring::Absolute => v.abs(),
        Scoring::Signed => v,
    };
    let candidates = threshold_candidates(rows.iter().flatten().map(|v| score(*v)), eps);
    let col_best: Vec<f64> = (0..num_cols)
        .map(|c| rows.iter().map(|r| score(r[c])).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut best = SweepBest { eps_prime: eps, sequence: Vec::new(), certifiers: Vec::new() };
    let mut nodes = 0u64;
    let mut exact = true;
    for eps_prime in candidates {
        let upper = col_best.iter().filter(|b| **b > eps_prime).count();
        if upper <= best.sequence.len() {
            continue;
        }
        let budget = opts.node_cap.saturating_sub(nodes);
        if budget == 0 {
            exact = false;
            break;
        }
        let outcome = longest_sequence(rows, num_cols, scoring, eps_prime, budget);
        nodes += outcome.nodes;
        if !outcome.complete {
            exact = false;
        }
        if outcome.sequence.len() > best.sequence.len() {
            best = SweepBest { eps_prime, sequence: outcome.sequence, certifiers: outcome.certifiers };
        }
    }
    (best, nodes, exact)
}

struct SweepBest {
    eps_prime: f64,
    sequence: Vec<usize>,
    certifiers: Vec<usize>,
}

/// Distributional Eluder dimension of `functions` (tables) against the
/// distributions `family` (weight vectors over the same domain).
pub fn de_dimension(functions: &[Vec<f64>], family: &[Vec<f64>], eps: f64, opts: SearchOptions) -> DimensionCertificate {
    let rows: Vec<Vec<f64>> = functions
        .iter()
        .map(|g| family.iter().map(|d| d.iter().zip(g).map(|(w, v)| w * v).sum()).collect())
        .collect();
    let (best, nodes, exact) = sweep(&rows, family.len(), Scoring::Absolute, eps, opts);
    DimensionCertificate {
        value: best.sequence.len(),
        witness: best.sequence,
        eps,
        eps_prime: best.eps_prime,
        certifiers: best.certifiers.into_iter().map(Certifier::Function).collect(),
        exact,
        nodes,
    }
}

/// Eluder dimension of `functions` (tables over point indices) restricted
/// to the candidate points `points`. Witness entries are point indices.
pub fn eluder_dimension(functions: &[Vec<f64>], points: &[usize], eps: f64, opts: SearchOptions) -> DimensionCertificate {
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (i, g1) in functions.iter().enumerate() {
        for (j, g2) in functions.iter().enumerate() {
            if i != j {
                pairs.push((i, j));
                rows.push(points.iter().map(|&x| g1[x] - g2[x]).collect::<Vec<f64>>());
            }
        }
    }
    let (best, nodes, exact) = sweep(&rows, points.len(), Scoring::Signed, eps, opts);
    DimensionCertificate {
        value: best.sequence.len(),
        witness: best.sequence.iter().map(|&c| points[c]).collect(),
        eps,
        eps_prime: best.eps_prime,
        certifiers: best.certifiers.into_iter().map(|r| Certifier::Pair(pairs[r].0, pairs[r].1)).collect(),
        exact,
        nodes,
    }
}

/// Re-checks a distributional certificate element by element.
pub fn verify_de_certificate(cert: &DimensionCertificate, functions: &[Vec<f64>], family: &[Vec<f64>]) -> bool {
    if cert.value != cert.witness.len() || cert.certifiers.len() != cert.witness.len() || cert.eps_prime < cert.eps {
        return false;
    }
    cert.witness.iter().enumerate().all(|(i, &nu)| {
        let prefix: Vec<&[f64]> = cert.witness[..i].iter().map(|&p| family[p].as_slice()).collect();
        is_independent_dist(&family[nu], &prefix, functions, cert.eps_prime).is_some()
    })
}

/// Re-checks a point-Eluder certificate element by element.
pub fn verify_eluder_certificate(cert: &DimensionCertificate, functions: &[Vec<f64>]) -> bool {
    if cert.value != cert.witness.len() || cert.certifiers.len() != cert.witness.len() || cert.eps_prime < cert.eps {
        return false;
    }
    cert.witness
        .iter()
        .enumerate()
        .all(|(i, &z)| is_independent_point(z, &cert.witness[..i], functions, cert.eps_prime).is_some())
}

/// Tables of all differences `g1 - g2` over ordered pairs (including `g - g`).
pub fn pairwise_differences(functions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    functions
        .iter()
        .flat_map(|g1| functions.iter().map(move |g2| g1.iter().zip(g2).map(|(a, b)| a - b).collect()))
        .collect()
}

/// Point masses on the given points of a domain of size `len`.
pub fn diracs(points: &[usize], len: usize) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|&p| {
            let mut w = vec![0.0; len];
            w[p] = 1.0;
            w
        })
        .collect()
}
