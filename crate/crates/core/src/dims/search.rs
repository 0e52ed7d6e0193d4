use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Scoring {
    /// Independence needs `|value| > eps'` (distributional form).
    Absolute,
    /// Independence needs `value > eps'` (rows are ordered differences).
    Signed,
}

pub(crate) struct Outcome {
    pub sequence: Vec<usize>,
    pub certifiers: Vec<usize>,
    pub nodes: u64,
    pub complete: bool,
}

struct Search<'a> {
    rows: &'a [Vec<f64>],
    /// Per row, the columns where it scores above the threshold.
    strong: Vec<Vec<usize>>,
    /// Columns in expansion order.
    order: Vec<usize>,
    eps_prime: f64,
    budget: u64,
    nodes: u64,
    aborted: bool,
    visited: HashSet<Vec<u64>>,
    used: Vec<u64>,
    sequence: Vec<usize>,
    certifiers: Vec<usize>,
    best: (Vec<usize>, Vec<usize>),
}

impl Search<'_> {
    /// `alive` lists `(row, prefix sum of squares)` for rows whose prefix
    /// root-sum-square is still within `eps'`, in increasing row order.
    fn expand(&mut self, alive: &[(usize, f64)]) {
        if self.nodes >= self.budget {
            self.aborted = true;
            return;
        }
        self.nodes += 1;
        if !self.visited.insert(self.used.clone()) {
            return;
        }
        if self.sequence.len() > self.best.0.len() {
            self.best = (self.sequence.clone(), self.certifiers.clone());
        }

        let mut certifier: Vec<Option<usize>> = vec![None; self.rows.first().map_or(0, Vec::len)];
        for &(r, _) in alive {
            for &c in &self.strong[r] {
                if certifier[c].is_none() && self.used[c / 64] >> (c % 64) & 1 == 0 {
                    certifier[c] = Some(r);
                }
            }
        }
        let candidates: Vec<(usize, usize)> = self
            .order
            .iter()
            .filter_map(|&c| certifier[c].map(|r| (c, r)))
            .collect();
        if self.sequence.len() + candidates.len() <= self.best.0.len() {
            return;
        }

        for (c, r) in candidates {
            let next_alive: Vec<(usize, f64)> = alive
                .iter()
                .filter_map(|&(row, acc)| {
                    let v = self.rows[row][c];
                    let acc = acc + v * v;
                    (acc.sqrt() <= self.eps_prime).then_some((row, acc))
                })
                .collect();
            self.used[c / 64] |= 1 << (c % 64);
            self.sequence.push(c);
            self.certifiers.push(r);
            self.expand(&next_alive);
            self.sequence.pop();
            self.certifiers.pop();
            self.used[c / 64] &= !(1 << (c % 64));
            if self.aborted {
                return;
            }
        }
    }
}

/// Longest sequence of distinct columns in which every column is
/// `eps'`-independent of its prefix, where a row certifies column `c` after
/// prefix `P` if `sqrt(sum_{p in P} row[p]^2) <= eps'` and its score at `c`
/// exceeds `eps'`.
pub(crate) fn longest_sequence(
    rows: &[Vec<f64>],
    num_cols: usize,
    scoring: Scoring,
    eps_prime: f64,
    budget: u64,
) -> Outcome {
    let score = |v: f64| match scoring {
        Scoring::Absolute => v.abs(),
        Scoring::Signed => v,
    };
    let strong: Vec<Vec<usize>> = rows
        .iter()
        .map(|r| (0..num_cols).filter(|&c| score(r[c]) > eps_prime).collect())
        .collect();
    let col_best: Vec<f64> = (0..num_cols)
        .map(|c| rows.iter().map(|r| score(r[c])).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..num_cols).filter(|&c| col_best[c] > eps_prime).collect();
    order.sort_by(|&a, &b| col_best[b].total_cmp(&col_best[a]).then(a.cmp(&b)));

    let alive: Vec<(usize, f64)> = (0..rows.len()).filter(|&r| !strong[r].is_empty()).map(|r| (r, 0.0)).collect();
    let mut search = Search {
        rows,
        strong,
        order,
        eps_prime,
        budget,
        nodes: 0,
        aborted: false,
        visited: HashSet::new(),
        used: vec![0; num_cols.div_ceil(64).max(1)],
        sequence: Vec::new(),
        certifiers: Vec::new(),
        best: (Vec::new(), Vec::new()),
    };
    search.expand(&alive);
    Outcome {
        sequence: search.best.0,
        certifiers: search.best.1,
        nodes: search.nodes,
        complete: !search.aborted,
    }
}
