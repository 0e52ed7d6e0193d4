use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{de_dimension, DimensionCertificate, SearchOptions};
use crate::bellman::{ErrorKind, ResidualTable};
use crate::error::Result;
use crate::function_class::{dirac_family, max_norm_distance, rollin_family, FunctionClass, DEDUP_TOL};
use crate::mdp::{Support, TabularMdp};

/// Distribution family used by the Bellman-Eluder dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Roll-ins of the greedy policies of class members (`D_F`).
    #[serde(rename = "DF")]
    Rollin,
    /// Point masses (`D_Delta`).
    #[serde(rename = "Ddelta")]
    Dirac,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Rollin => "DF",
            Family::Dirac => "Ddelta",
        }
    }
}

fn support_of(kind: ErrorKind) -> Support {
    match kind {
        ErrorKind::Q => Support::StateAction,
        ErrorKind::V => Support::State,
    }
}

/// Distinct residual tables at step `h`, deduplicated by value.
fn residual_functions(table: &ResidualTable, h: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in table.distinct(h) {
        if !out.iter().any(|e| max_norm_distance(e, r) < DEDUP_TOL) {
            out.push(r.clone());
        }
    }
    out
}

/// The family at step `h` plus, for each entry, the member index (roll-ins)
/// or the point index (Diracs) it comes from.
fn family_at(mdp: &TabularMdp, class: &FunctionClass, h: usize, family: Family, kind: ErrorKind) -> (Vec<Vec<f64>>, Vec<usize>) {
    match family {
        Family::Rollin => {
            let fam = rollin_family(mdp, class, h, support_of(kind));
            let labels = (0..fam.len()).map(|d| fam.representative(d)).collect();
            (fam.distributions.into_iter().map(|d| d.weights).collect(), labels)
        }
        Family::Dirac => {
            let fam = dirac_family(mdp, h, support_of(kind));
            let labels = (0..fam.len()).collect();
            (fam.into_iter().map(|d| d.weights).collect(), labels)
        }
    }
}

/// Per-step distributional Eluder computation inside a BE dimension.
#[derive(Debug, Clone)]
pub struct StepDimension {
    pub certificate: DimensionCertificate,
    /// Residual functions the search ran over.
    pub functions: Vec<Vec<f64>>,
    /// Distributions the search ran over; witness entries index this list.
    pub distributions: Vec<Vec<f64>>,
    /// Generating member (roll-ins) or point index (Diracs) per distribution.
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BeReport {
    pub family: Family,
    pub kind: ErrorKind,
    pub eps: f64,
    pub value: usize,
    pub argmax_step: usize,
    pub exact: bool,
    pub per_step: Vec<StepDimension>,
}

impl BeReport {
    pub fn certificate(&self) -> &DimensionCertificate {
        &self.per_step[self.argmax_step].certificate
    }

    /// Re-verifies every per-step certificate.
    pub fn verify(&self) -> bool {
        self.per_step
            .iter()
            .all(|s| super::verify_de_certificate(&s.certificate, &s.functions, &s.distributions))
    }
}

/// `max_h dim_DE((I - T_h)F, Pi_h, eps)` with Q-type residuals over
/// state-action pairs, or V-type residuals over states.
pub fn be_dimension(
    mdp: &TabularMdp,
    class: &FunctionClass,
    family: Family,
    kind: ErrorKind,
    eps: f64,
    opts: SearchOptions,
) -> Result<BeReport> {
    class.check_compatible(mdp)?;
    let table = ResidualTable::build(mdp, class, kind);
    let mut per_step = Vec::with_capacity(class.horizon());
    let mut remaining = opts.node_cap;
    for h in 0..class.horizon() {
        let functions = residual_functions(&table, h);
        let (distributions, labels) = family_at(mdp, class, h, family, kind);
        let certificate = de_dimension(&functions, &distributions, eps, SearchOptions { node_cap: remaining.max(1) });
        remaining = remaining.saturating_sub(certificate.nodes);
        per_step.push(StepDimension { certificate, functions, distributions, labels });
    }
    let argmax_step = (0..per_step.len())
        .max_by(|&a, &b| per_step[a].certificate.value.cmp(&per_step[b].certificate.value).then(b.cmp(&a)))
        .unwrap_or(0);
    Ok(BeReport {
        family,
        kind,
        eps,
        value: per_step[argmax_step].certificate.value,
        argmax_step,
        exact: per_step.iter().all(|s| s.certificate.exact),
        per_step,
    })
}

/// Full matrices `M_h[f][f'] = E(f, pi_{f'}, h)` over all members.
pub fn bellman_error_matrix(mdp: &TabularMdp, class: &FunctionClass, kind: ErrorKind) -> Vec<DMatrix<f64>> {
    let table = ResidualTable::build(mdp, class, kind);
    (0..class.horizon())
        .map(|h| {
            let fam = rollin_family(mdp, class, h, support_of(kind));
            DMatrix::from_fn(class.len(), class.len(), |f, g| {
                fam.distributions[fam.source_to_distribution[g]].expect(table.member(f, h))
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRank {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Largest row 2-norm of the balanced SVD factors `U sqrt(S)`, `V sqrt(S)`.
    pub zeta: f64,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankReport {
    pub kind: ErrorKind,
    pub tol: f64,
    pub value: usize,
    pub per_step: Vec<StepRank>,
}

/// Numeric rank (singular values above `tol * sigma_max`), the descending
/// spectrum, and the balanced-factor norm.
pub fn rank_of(m: &DMatrix<f64>, tol: f64) -> StepRank {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return StepRank { rank: 0, singular_values: Vec::new(), zeta: 0.0, rows, cols };
    }
    let svd = m.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let spectrum: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = spectrum.first().copied().unwrap_or(0.0);
    let rank = if sigma_max > 0.0 { spectrum.iter().filter(|s| **s > tol * sigma_max).count() } else { 0 };
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut zeta: f64 = 0.0;
    for r in 0..rows {
        let n: f64 = order[..rank].iter().map(|&k| u[(r, k)].powi(2) * svd.singular_values[k]).sum();
        zeta = zeta.max(n.sqrt());
    }
    for c in 0..cols {
        let n: f64 = order[..rank].iter().map(|&k| v_t[(k, c)].powi(2) * svd.singular_values[k]).sum();
        zeta = zeta.max(n.sqrt());
    }
    StepRank { rank, singular_values: spectrum, zeta, rows, cols }
}

/// Bellman rank of a finite class: the rank of each average-Bellman-error
/// matrix, computed on distinct residuals x distinct roll-ins (duplicated
/// rows and columns do not change the rank).
pub fn bellman_rank(mdp: &TabularMdp, class: &FunctionClass, kind: ErrorKind, tol: f64) -> Result<RankReport> {
    class.check_compatible(mdp)?;
    let table = ResidualTable::build(mdp, class, kind);
    let per_step: Vec<StepRank> = (0..class.horizon())
        .map(|h| {
            let functions = residual_functions(&table, h);
            let fam = rollin_family(mdp, class, h, support_of(kind));
            let m = DMatrix::from_fn(functions.len(), fam.len(), |f, d| fam.distributions[d].expect(&functions[f]));
            rank_of(&m, tol)
        })
        .collect();
    let value = per_step.iter().map(|s| s.rank).max().unwrap_or(0);
    Ok(RankReport { kind, tol, value, per_step })
}

#[derive(Debug, Clone)]
pub struct StepEluder {
    pub certificate: DimensionCertificate,
    /// Distinct layers `F_h` the search ran over, as tables on state-action
    /// pairs.
    pub functions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct EluderReport {
    pub eps: f64,
    /// `max_h dim_E(F_h, eps)`.
    pub value: usize,
    pub argmax_step: usize,
    pub exact: bool,
    pub per_step: Vec<StepEluder>,
}

impl EluderReport {
    pub fn certificate(&self) -> &DimensionCertificate {
        &self.per_step[self.argmax_step].certificate
    }

    pub fn verify(&self) -> bool {
        self.per_step
            .iter()
            .all(|s| super::verify_eluder_certificate(&s.certificate, &s.functions))
    }
}

/// Point Eluder dimension of each layer class `F_h` over all state-action
/// pairs.
pub fn class_eluder_dimension(class: &FunctionClass, eps: f64, opts: SearchOptions) -> EluderReport {
    let points: Vec<usize> = (0..class.num_states() * class.num_actions()).collect();
    let mut remaining = opts.node_cap;
    let per_step: Vec<StepEluder> = (0..class.horizon())
        .map(|h| {
            let functions = class.layers(h).to_vec();
            let certificate =
                super::eluder_dimension(&functions, &points, eps, SearchOptions { node_cap: remaining.max(1) });
            remaining = remaining.saturating_sub(certificate.nodes);
            StepEluder { certificate, functions }
        })
        .collect();
    let argmax_step = (0..per_step.len())
        .max_by(|&a, &b| per_step[a].certificate.value.cmp(&per_step[b].certificate.value).then(b.cmp(&a)))
        .unwrap_or(0);
    EluderReport {
        eps,
        value: per_step.get(argmax_step).map_or(0, |s| s.certificate.value),
        argmax_step,
        exact: per_step.iter().all(|s| s.certificate.exact),
        per_step,
    }
}
