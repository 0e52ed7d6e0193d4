#![allow(dead_code)]

use beldim::function_class::{FunctionClass, QTuple};
use beldim::mdp::{optimal_q, Policy, TabularMdp};
use beldim::zoo::make_random_realizable;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random dense MDP (uniform-simplex rows, rewards in `[0, 1/H]`).
pub fn random_mdp(s: usize, a: usize, h: usize, seed: u64) -> TabularMdp {
    make_random_realizable(s, a, h, 0, seed).unwrap().mdp
}

pub fn random_q(mdp: &TabularMdp, rng: &mut ChaCha8Rng) -> QTuple {
    let layers = (0..mdp.horizon()).map(|_| (0..mdp.num_pairs()).map(|_| rng.gen::<f64>()).collect()).collect();
    QTuple::new(mdp.num_states(), mdp.num_actions(), layers).unwrap()
}

pub fn random_policy(mdp: &TabularMdp, rng: &mut ChaCha8Rng) -> Policy {
    let actions = (0..mdp.horizon())
        .map(|_| (0..mdp.num_states()).map(|_| rng.gen_range(0..mdp.num_actions())).collect())
        .collect();
    Policy::new(actions, mdp.num_actions()).unwrap()
}

/// `Q*` followed by copies of `Q*` raised by `delta` at one `(h, s, a)`.
pub fn spiked_class(mdp: &TabularMdp, spikes: &[(usize, usize, usize, f64)]) -> FunctionClass {
    let q = optimal_q(mdp);
    let mut members = vec![q.clone()];
    for &(h, s, a, delta) in spikes {
        let mut layers = q.layers().to_vec();
        layers[h][s * mdp.num_actions() + a] += delta;
        members.push(QTuple::new(mdp.num_states(), mdp.num_actions(), layers).unwrap());
    }
    FunctionClass::from_members(members).unwrap()
}

/// Every `(h, s, a)` spike of size `delta`.
pub fn all_spikes(mdp: &TabularMdp, delta: f64) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::new();
    for h in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                out.push((h, s, a, delta));
            }
        }
    }
    out
}

/// Slope of the least-squares line through `(xs, ys)`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
