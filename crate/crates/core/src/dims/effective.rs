use serde::{Deserialize, Serialize};

/// Information-gain level below which `n` is large enough: `e^{-1}`.
const LEVEL: f64 = 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveOptions {
    /// Search nodes the exact branch and bound may visit, summed over all
    /// sizes, before switching to the greedy bound pair.
    pub node_cap: u64,
    /// Largest `n` scanned.
    pub max_n: usize,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        Self { node_cap: 50_000_000, max_n: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDimension {
    /// Exact value when `exact`, otherwise equal to `lower_bound`.
    pub value: usize,
    pub exact: bool,
    pub lower_bound: usize,
    /// From `log det(I + A) <= d log(1 + tr(A)/d)`; always valid.
    pub upper_bound: usize,
    /// Best normalized gain found at `value`.
    pub gain: f64,
    /// Multiplicity of each input vector in the maximizing multiset at `value`
    /// (exact mode only).
    pub counts: Vec<usize>,
}

/// `log det(I + A)` for a symmetric positive semidefinite `A` (row-major,
/// `d x d`), by Cholesky factorization of `I + A`.
fn log_det_identity_plus(a: &[f64], d: usize) -> f64 {
    let mut l = vec![0.0; d * d];
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j] + if i == j { 1.0 } else { 0.0 };
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                let diag = sum.max(f64::MIN_POSITIVE).sqrt();
                l[i * d + i] = diag;
                total += 2.0 * diag.ln();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    total
}

fn add_outer(a: &mut [f64], x: &[f64], weight: f64) {
    let d = x.len();
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] += weight * x[i] * x[j];
        }
    }
}

/// `log det(I + (1/eps^2) sum_i counts[i] x_i x_i^T)`.
pub fn log_det_gain(vectors: &[Vec<f64>], counts: &[usize], eps: f64) -> f64 {
    let d = vectors.first().map_or(0, Vec::len);
    let mut a = vec![0.0; d * d];
    for (x, &c) in vectors.iter().zip(counts) {
        add_outer(&mut a, x, c as f64 / (eps * eps));
    }
    log_det_identity_plus(&a, d)
}

/// `x^T (I + A)^{-1} x` for each `x`, via a Cholesky solve.
fn inverse_quadratic_forms(a: &[f64], d: usize, xs: &[Vec<f64>]) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j] + if i == j { 1.0 } else { 0.0 };
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = if i == j { sum.max(f64::MIN_POSITIVE).sqrt() } else { sum / l[j * d + j] };
        }
    }
    xs.iter()
        .map(|x| {
            // Forward solve L y = x; then x^T (L L^T)^{-1} x = |y|^2.
            let mut y = vec![0.0; d];
            for i in 0..d {
                let mut v = x[i];
                for k in 0..i {
                    v -= l[i * d + k] * y[k];
                }
                y[i] = v / l[i * d + i];
            }
            y.iter().map(|v| v * v).sum()
        })
        .collect()
}

/// Exact branch and bound for the largest `log det(I + scale sum c_i x_i x_i^T)`
/// over multisets of a fixed size. A subtree is pruned when an upper bound on
/// its best completion cannot beat the incumbent; the search stops early
/// once the incumbent exceeds `stop_above`.
struct Search<'a> {
    vectors: &'a [Vec<f64>],
    scale: f64,
    d: usize,
    best: f64,
    best_counts: Vec<usize>,
    counts: Vec<usize>,
    stop_above: f64,
    nodes: u64,
    node_cap: u64,
}

impl Search<'_> {
    /// Returns `false` when the node budget ran out.
    fn descend(&mut self, i: usize, remaining: usize, a: &[f64]) -> bool {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return false;
        }
        if self.best > self.stop_above {
            return true;
        }
        if i + 1 == self.vectors.len() || remaining == 0 {
            let mut leaf = a.to_vec();
            if remaining > 0 {
                add_outer(&mut leaf, &self.vectors[i], remaining as f64 * self.scale);
            }
            self.counts[i] = remaining;
            for c in &mut self.counts[i + 1..] {
                *c = 0;
            }
            let value = log_det_identity_plus(&leaf, self.d);
            if value > self.best {
                self.best = value;
                self.best_counts = self.counts.clone();
            }
            return true;
        }
        // log det(I + A + B) <= log det(I + A) + min(t, d ln(1 + t/d)) with
        // t = tr((I + A)^{-1} B) <= remaining * scale * max_j x_j^T (I + A)^{-1} x_j.
        let base = log_det_identity_plus(a, self.d);
        let q = inverse_quadratic_forms(a, self.d, &self.vectors[i..]);
        let t = remaining as f64 * self.scale * q.iter().copied().fold(0.0, f64::max);
        let dim = self.d as f64;
        if base + t.min(dim * (1.0 + t / dim).ln()) <= self.best {
            return true;
        }
        for c in (0..=remaining).rev() {
            let mut next = a.to_vec();
            add_outer(&mut next, &self.vectors[i], c as f64 * self.scale);
            self.counts[i] = c;
            if !self.descend(i + 1, remaining - c, &next) {
                return false;
            }
        }
        true
    }
}

/// Greedy multiset of size `n`: a lower bound on the maximum.
fn greedy(vectors: &[Vec<f64>], scale: f64, d: usize, n: usize) -> (f64, Vec<usize>) {
    let mut a = vec![0.0; d * d];
    let mut counts = vec![0; vectors.len()];
    let mut value = 0.0;
    for _ in 0..n {
        let (best_i, best_v) = vectors
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut trial = a.clone();
                add_outer(&mut trial, x, scale);
                (i, log_det_identity_plus(&trial, d))
            })
            .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        add_outer(&mut a, &vectors[best_i], scale);
        counts[best_i] += 1;
        value = best_v;
    }
    (value, counts)
}

/// Smallest `n` such that every size-`n` multiset from `vectors` has
/// `(1/n) log det(I + (1/eps^2) sum x x^T) <= e^{-1}`.
pub fn effective_dimension(vectors: &[Vec<f64>], eps: f64, opts: EffectiveOptions) -> EffectiveDimension {
    let d = vectors.first().map_or(0, Vec::len);
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    let mut original_index = Vec::new();
    for (i, x) in vectors.iter().enumerate() {
        if x.iter().all(|v| *v == 0.0) || distinct.contains(x) {
            continue;
        }
        distinct.push(x.clone());
        original_index.push(i);
    }

    let radius_sq = distinct.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
    let upper_bound = (1..=opts.max_n)
        .find(|&n| {
            let dim = d.max(1) as f64;
            dim * (1.0 + n as f64 * radius_sq / (dim * eps * eps)).ln() / n as f64 <= LEVEL
        })
        .unwrap_or(opts.max_n);

    if distinct.is_empty() {
        return EffectiveDimension {
            value: 1,
            exact: true,
            lower_bound: 1,
            upper_bound: 1,
            gain: 0.0,
            counts: vec![0; vectors.len()],
        };
    }

    let scale = 1.0 / (eps * eps);
    let mut spent = 0u64;
    let mut n = 1;
    let mut exhausted = false;
    while n <= opts.max_n {
        let (greedy_value, greedy_counts) = greedy(&distinct, scale, d, n);
        let threshold = n as f64 * LEVEL;
        let mut search = Search {
            vectors: &distinct,
            scale,
            d,
            best: greedy_value,
            best_counts: greedy_counts,
            counts: vec![0; distinct.len()],
            stop_above: threshold,
            nodes: 0,
            node_cap: opts.node_cap.saturating_sub(spent),
        };
        let complete = search.best > threshold || search.descend(0, n, &vec![0.0; d * d]);
        spent += search.nodes;
        if !complete {
            exhausted = true;
            break;
        }
        if search.best <= threshold {
            let mut counts = vec![0; vectors.len()];
            for (c, &i) in search.best_counts.iter().zip(&original_index) {
                counts[i] = *c;
            }
            let gain = search.best / n as f64;
            return EffectiveDimension { value: n, exact: true, lower_bound: n, upper_bound, gain, counts };
        }
        n += 1;
    }

    // Budget exhausted at `n`: every smaller size already exceeds the level,
    // and the greedy gain bounds each later supremum from below.
    let exact_floor = n;
    let mut lower_bound = if exhausted { exact_floor } else { opts.max_n };
    let mut gain = 0.0;
    for m in exact_floor..=opts.max_n {
        let (value, _) = greedy(&distinct, scale, d, m);
        if value / m as f64 <= LEVEL {
            lower_bound = m;
            gain = value / m as f64;
            break;
        }
    }
    EffectiveDimension {
        value: lower_bound,
        exact: false,
        lower_bound,
        upper_bound: upper_bound.max(lower_bound),
        gain,
        counts: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_gives_one() {
        let out = effective_dimension(&[vec![0.0, 0.0]], 0.5, EffectiveOptions::default());
        assert_eq!((out.value, out.exact), (1, true));
    }

    #[test]
    fn unit_vector_matches_scalar_scan() {
        // Scalar oracle: smallest n with ln(1 + n)/n <= 1/e.
        let oracle = (1..).find(|&n: &usize| (1.0 + n as f64).ln() / n as f64 <= LEVEL).unwrap();
        assert_eq!(oracle, 5);
        let out = effective_dimension(&[vec![1.0, 0.0, 0.0]], 1.0, EffectiveOptions::default());
        assert_eq!(out.value, oracle);
        assert!(out.exact);
        assert!(out.upper_bound >= out.value);
    }

    #[test]
    fn log_det_matches_closed_form() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let got = log_det_gain(&v, &[2, 1], 0.5);
        let want = (1.0f64 + 8.0).ln() + (1.0f64 + 16.0).ln();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn greedy_fallback_brackets_the_exact_value() {
        let x = vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, 1.0]];
        let exact = effective_dimension(&x, 0.7, EffectiveOptions::default());
        let approx = effective_dimension(&x, 0.7, EffectiveOptions { node_cap: 10, ..Default::default() });
        assert!(exact.exact && !approx.exact);
        assert!(approx.lower_bound <= exact.value);
        assert!(exact.value <= approx.upper_bound);
    }
}
