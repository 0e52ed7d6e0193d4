mod common;

use beldim::bellman::{avg_bellman_error, residual_q, v_avg_bellman_error};
use beldim::function_class::greedy_policy;
use beldim::mdp::{occupancy, optimal_q, policy_state_values, policy_value, state_occupancy, Policy};
use common::{random_mdp, random_policy, random_q};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn occupancies_are_distributions(s in 1usize..5, a in 1usize..4, h in 1usize..4, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let pi = random_policy(&mdp, &mut rng);
        for d in occupancy(&mdp, &pi) {
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert!(d.weights.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn policy_value_is_occupancy_weighted_reward(s in 1usize..5, a in 1usize..4, h in 1usize..4, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let pi = random_policy(&mdp, &mut rng);
        let via_occupancy: f64 = occupancy(&mdp, &pi).iter().enumerate().map(|(h, d)| d.expect(mdp.reward_layer(h))).sum();
        prop_assert!((policy_value(&mdp, &pi) - via_occupancy).abs() < 1e-12);
    }

    #[test]
    fn optimal_policy_dominates_every_policy(s in 1usize..4, a in 1usize..3, h in 1usize..3, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let q = optimal_q(&mdp);
        let v_star = q.initial_value(&mdp);
        prop_assert!((policy_value(&mdp, &greedy_policy(&q)) - v_star).abs() < 1e-12);
        for pi in Policy::enumerate_all(&mdp, 10_000).unwrap() {
            prop_assert!(policy_value(&mdp, &pi) <= v_star + 1e-12);
        }
    }

    /// `E_{s_1}[max_a f_1] - V^{pi_f} = sum_h E(f, pi_f, h)`.
    #[test]
    fn policy_loss_decomposition(s in 1usize..5, a in 1usize..4, h in 1usize..5, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let f = random_q(&mdp, &mut rng);
        let pi = greedy_policy(&f);
        let lhs = f.initial_value(&mdp) - policy_value(&mdp, &pi);
        let rhs: f64 = (0..h).map(|t| avg_bellman_error(&mdp, &f, &pi, t)).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    /// On the greedy roll-in of `f`, the Q-type and V-type errors coincide.
    #[test]
    fn q_and_v_errors_agree_on_policy(s in 1usize..5, a in 1usize..4, h in 1usize..4, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let f = random_q(&mdp, &mut rng);
        let pi = greedy_policy(&f);
        for t in 0..h {
            prop_assert_eq!(avg_bellman_error(&mdp, &f, &pi, t), v_avg_bellman_error(&mdp, &f, &pi, t));
        }
    }

    #[test]
    fn optimal_q_has_zero_residual(s in 1usize..5, a in 1usize..4, h in 1usize..4, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let q = optimal_q(&mdp);
        for t in 0..h {
            prop_assert!(residual_q(&mdp, &q, t).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn state_values_match_occupancy(s in 1usize..5, a in 1usize..4, h in 1usize..4, seed in any::<u64>()) {
        let mdp = random_mdp(s, a, h, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let pi = random_policy(&mdp, &mut rng);
        let v = policy_state_values(&mdp, &pi);
        let init: f64 = mdp.initial_distribution().iter().zip(&v[0]).map(|(p, x)| p * x).sum();
        prop_assert!((init - policy_value(&mdp, &pi)).abs() < 1e-12);
        let states = state_occupancy(&mdp, &pi);
        prop_assert_eq!(states.len(), h);
    }
}
