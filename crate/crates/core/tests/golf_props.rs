mod common;

use beldim::bellman::ExecutionMode;
use beldim::function_class::FunctionClass;
use beldim::golf::{run_golf, run_vgolf, GolfConfig};
use beldim::mdp::{optimal_q, TabularMdp};
use beldim::zoo::{builtin, make_random_realizable};
use common::{ls_slope, median, random_mdp};
use proptest::prelude::*;

fn exact_cfg(k: usize, seed: u64) -> GolfConfig {
    GolfConfig { mode: ExecutionMode::Exact, ..GolfConfig::new(k, seed) }
}

#[test]
fn singleton_optimal_class_has_zero_regret() {
    for seed in 0..5 {
        let mdp = random_mdp(3, 2, 3, seed);
        let class = FunctionClass::from_members(vec![optimal_q(&mdp)]).unwrap();
        let out = run_golf(&mdp, &class, &GolfConfig::new(30, seed)).unwrap();
        assert!(out.cumulative_regret().unwrap().abs() < 1e-12);
        assert!(out.episodes.iter().all(|e| e.qstar_in_b == Some(true)));
    }
}

#[test]
fn zero_reward_has_zero_regret() {
    let base = random_mdp(3, 2, 2, 1);
    let (p, _) = base.nested_tables();
    let r = vec![vec![vec![0.0; 2]; 3]; 2];
    let mdp = TabularMdp::from_nested(&p, &r, base.initial_distribution().to_vec()).unwrap();
    let class = make_random_realizable(3, 2, 2, 2, 1).unwrap().class;
    let out = run_golf(&mdp, &class, &GolfConfig::new(20, 0)).unwrap();
    assert!(out.episodes.iter().all(|e| e.regret.unwrap().abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// With exact losses the optimal member is never excluded, so every
    /// selection is optimistic and the regret ledger is consistent.
    #[test]
    fn exact_mode_keeps_qstar_and_is_optimistic(seed in 0u64..1000, k in 5usize..30) {
        let inst = make_random_realizable(3, 2, 2, 2, seed).unwrap();
        let out = run_golf(&inst.mdp, &inst.class, &exact_cfg(k, seed)).unwrap();
        prop_assert!(out.qstar_index.is_some());
        let mut cum = 0.0;
        for e in &out.episodes {
            prop_assert_eq!(e.qstar_selectable, Some(true));
            prop_assert_eq!(e.qstar_in_b, Some(true));
            prop_assert!(e.opt_value >= out.optimal_value - 1e-9);
            let r = e.regret.unwrap();
            prop_assert!((r - (out.optimal_value - e.policy_value)).abs() < 1e-12);
            prop_assert!(r >= -1e-12);
            cum += r;
            prop_assert!((e.cum_regret.unwrap() - cum).abs() < 1e-9);
        }
        prop_assert!(out.best_value >= out.output_value - 1e-12);
    }

    #[test]
    fn runs_are_deterministic_in_the_seed(seed in 0u64..1000) {
        let inst = make_random_realizable(3, 2, 2, 2, seed).unwrap();
        let cfg = GolfConfig::new(15, seed);
        let a = run_golf(&inst.mdp, &inst.class, &cfg).unwrap();
        let b = run_golf(&inst.mdp, &inst.class, &cfg).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert_eq!(a.summary_json(), b.summary_json());
        let c = run_vgolf(&inst.mdp, &inst.class, &cfg).unwrap();
        let d = run_vgolf(&inst.mdp, &inst.class, &cfg).unwrap();
        prop_assert_eq!(c.to_csv(), d.to_csv());
    }
}

#[test]
fn vgolf_with_one_action_matches_golf() {
    for seed in 0..4 {
        let inst = make_random_realizable(3, 1, 3, 2, seed).unwrap();
        let cfg = exact_cfg(10, seed);
        let q = run_golf(&inst.mdp, &inst.class, &cfg).unwrap();
        let v = run_vgolf(&inst.mdp, &inst.class, &cfg).unwrap();
        let fq: Vec<usize> = q.episodes.iter().map(|e| e.f_index).collect();
        let fv: Vec<usize> = v.episodes.iter().map(|e| e.f_index).collect();
        assert_eq!(fq, fv);
        assert!(v.episodes.iter().all(|e| e.regret.is_none()));
    }
}

#[test]
fn vgolf_output_is_near_optimal_for_most_seeds() {
    let inst = builtin("random:4:2:3:2:0").unwrap();
    let good = (0..20u64)
        .filter(|&seed| {
            let cfg = GolfConfig { beta: Some(0.2), ..GolfConfig::new(300, seed) };
            let out = run_vgolf(&inst.mdp, &inst.class, &cfg).unwrap();
            out.optimal_value - out.output_value <= 0.1
        })
        .count();
    assert!(good >= 18, "{good}/20 seeds within 0.1");
}

/// With a narrow confidence width and averaged over seeds, cumulative regret grows sublinearly and the
/// per-episode average falls well below the first-episode gap.
#[test]
fn regret_is_sublinear_on_average() {
    let inst = builtin("random:4:2:3:2:0").unwrap();
    let k = 2000;
    let seeds = 20;
    let mut mean = vec![0.0; k];
    for seed in 0..seeds {
        let cfg = GolfConfig { beta: Some(0.2), ..GolfConfig::new(k, seed) };
        let out = run_golf(&inst.mdp, &inst.class, &cfg).unwrap();
        for (m, e) in mean.iter_mut().zip(&out.episodes) {
            *m += e.cum_regret.unwrap() / seeds as f64;
        }
    }
    let first = mean[0];
    let avg = mean[k - 1] / k as f64;
    assert!(avg < 0.5 * first.max(1e-12), "average {avg} first {first}");
    let ks = [250usize, 500, 1000, 2000];
    let xs: Vec<f64> = ks.iter().map(|&x| (x as f64).ln()).collect();
    let ys: Vec<f64> = ks.iter().map(|&x| mean[x - 1].max(1e-12).ln()).collect();
    assert!(ls_slope(&xs, &ys) < 1.0);
}

/// Default confidence width, K = 2000, 20 seeds: the median cumulative
/// regret is concave in k and its final average is below half of the
/// episode-1 gap.
#[test]
fn default_beta_regret_is_concave_and_shrinks() {
    let inst = builtin("random:4:2:3:2:10").unwrap();
    let k = 2000;
    let runs: Vec<Vec<f64>> = (0..20u64)
        .map(|seed| {
            let out = run_golf(&inst.mdp, &inst.class, &GolfConfig::new(k, seed)).unwrap();
            out.episodes.iter().map(|e| e.cum_regret.unwrap()).collect()
        })
        .collect();
    let med: Vec<f64> = (0..k).map(|i| median(runs.iter().map(|r| r[i]).collect())).collect();
    let checkpoints: Vec<f64> = (1..=8).map(|j| med[250 * j - 1]).collect();
    assert!(checkpoints.windows(3).all(|w| w[2] - w[1] <= w[1] - w[0] + 1e-9), "{checkpoints:?}");
    let first = med[0];
    assert!(med[k - 1] / (k as f64) < 0.5 * first, "average {} first {first}", med[k - 1] / k as f64);
}
