use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irl_lab_core::env::{build_tree, generate_demos, Environment, InteractionLedger, ResetAccess};
use irl_lab_core::mdp::random::{random_mdp, random_policy, random_reward};
use irl_lab_core::mdp::{policy_value, RewardTable, Step, TabularMdp, TabularPolicy, Trajectory, TrajectorySource};
use irl_lab_core::oracles::{
    bc_fit, fitted_q, hyper_inner, reset_steps, ModelEstimate, OracleConfig, OracleVariant, PolicyOracle, ResetSchedule,
    TransitionCounts,
};
use irl_lab_core::Error;

fn one_step(h: usize, s: usize, a: usize, s2: usize) -> Trajectory {
    Trajectory {
        steps: vec![Step { h, state: s, action: a }],
        final_state: s2,
        source: TrajectorySource::Learner,
    }
}

/// Backward recursion over the optimal values of `mdp` under `r`.
fn optimal_values(mdp: &TabularMdp, r: &RewardTable) -> Vec<Vec<f64>> {
    let (n_s, n_a, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut v = vec![vec![0.0; n_s]; h + 1];
    for t in (0..h).rev() {
        for s in 0..n_s {
            v[t][s] = (0..n_a)
                .map(|a| r.get(s, a) + (0..n_s).map(|s2| mdp.row(s, a)[s2] * v[t + 1][s2]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitted_q_is_dp_on_the_empirical_kernel(seed: u64, n_s in 1usize..5, n_a in 1usize..4, h in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_reward(n_s, n_a, &mut rng);
        let mut counts = TransitionCounts::new(h, n_s, n_a);
        let mut tally: HashMap<(usize, usize, usize), Vec<u32>> = HashMap::new();
        for _ in 0..rng.random_range(0..40) {
            let (t, s, a, s2) = (rng.random_range(0..h), rng.random_range(0..n_s), rng.random_range(0..n_a), rng.random_range(0..n_s));
            counts.add(&one_step(t, s, a, s2)).unwrap();
            tally.entry((t, s, a)).or_insert_with(|| vec![0; n_s])[s2] += 1;
        }
        let q = fitted_q(&counts, &r).unwrap();
        let mut v_next = vec![0.0; n_s];
        for t in (0..h).rev() {
            let mut v = vec![f64::NEG_INFINITY; n_s];
            for s in 0..n_s {
                for a in 0..n_a {
                    let expected = match tally.get(&(t, s, a)) {
                        None => -((h - t) as f64),
                        Some(row) => {
                            let n: u32 = row.iter().sum();
                            let cont = if t + 1 == h { 0.0 } else { row.iter().zip(&v_next).map(|(c, v)| *c as f64 * v).sum::<f64>() / n as f64 };
                            r.get(s, a) + cont
                        }
                    };
                    prop_assert!((q.at(t, s, a) - expected).abs() < 1e-12);
                    v[s] = v[s].max(expected);
                }
            }
            v_next = v;
        }
    }

    #[test]
    fn reset_window_matches_its_definition(h in 1usize..30, total in 1usize..20, t_frac in 0.0f64..1.0, kappa in 0.001f64..=1.0) {
        let t = 1 + ((t_frac * total as f64) as usize).min(total - 1);
        let lower = h as f64 * (1.0 - t as f64 / total as f64);
        let upper = h as f64 * (1.0 - t as f64 / total as f64 + kappa).min(1.0);
        let expected: Vec<usize> = (0..h).filter(|&i| (i + 1) as f64 >= lower - 1e-9 && (i + 1) as f64 <= upper + 1e-9).collect();
        match reset_steps(ResetSchedule::Window { kappa }, h, t, total) {
            Ok(steps) => {
                prop_assert_eq!(&steps, &expected);
                prop_assert!(steps.windows(2).all(|w| w[1] == w[0] + 1));
            }
            Err(e) => {
                prop_assert!(matches!(e, Error::Schedule(_)));
                prop_assert!(expected.is_empty());
            }
        }
        prop_assert_eq!(reset_steps(ResetSchedule::Uniform, h, t, total).unwrap(), (0..h).collect::<Vec<_>>());
    }

    #[test]
    fn window_sweep_covers_the_horizon(h in 1usize..30, total in 1usize..30) {
        let kappa = 1.0 / total as f64;
        let mut seen = vec![false; h];
        let mut all_ok = true;
        for t in 1..=total {
            match reset_steps(ResetSchedule::Window { kappa }, h, t, total) {
                Ok(steps) => steps.into_iter().for_each(|s| seen[s] = true),
                Err(_) => all_ok = false,
            }
        }
        if all_ok {
            prop_assert!(seen.iter().all(|&x| x));
        }
        // the final window with full width is the whole horizon
        prop_assert_eq!(reset_steps(ResetSchedule::Window { kappa: 1.0 }, h, total, total).unwrap(), (0..h).collect::<Vec<_>>());
    }

    #[test]
    fn model_solver_is_optimal_where_it_may_update(seed: u64, n_s in 1usize..5, n_a in 1usize..4, h in 1usize..6, mask: u8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        let r = random_reward(n_s, n_a, &mut rng);
        let warm = random_policy(h, n_s, n_a, &mut rng);
        let steps: Vec<usize> = (0..h).filter(|i| mask >> i & 1 == 1).collect();
        let sol = hyper_inner(&mdp, &r.negated(), &warm, &steps).unwrap();
        prop_assert_eq!(sol.model_transitions, (h * n_s * n_a) as u64);
        for t in 0..h {
            for s in 0..n_s {
                if steps.contains(&t) {
                    prop_assert!(sol.policy.deterministic_action(t, s).is_some());
                } else {
                    prop_assert_eq!(sol.policy.probs(t, s), warm.probs(t, s));
                }
            }
        }
        let all = hyper_inner(&mdp, &r.negated(), &warm, &(0..h).collect::<Vec<_>>()).unwrap();
        let v = optimal_values(&mdp, &r);
        let v0: f64 = mdp.initial_dist().iter().zip(&v[0]).map(|(p, v)| p * v).sum();
        prop_assert!((policy_value(&mdp, &all.policy, &r).unwrap() - v0).abs() < 1e-10);
    }

    #[test]
    fn cloning_is_smoothed_counting(seed: u64, smoothing in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_s, n_a, h) = (4, 3, 4);
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        let demos = generate_demos(&mdp, &random_policy(h, n_s, n_a, &mut rng), 12, seed).unwrap();
        let pi = bc_fit(&demos, n_s, n_a, smoothing).unwrap();
        for t in 0..h {
            for s in 0..n_s {
                let c: Vec<usize> = (0..n_a)
                    .map(|a| demos.trajectories().iter().filter(|tr| tr.steps.iter().any(|st| st.h == t && st.state == s && st.action == a)).count())
                    .collect();
                let n: usize = c.iter().sum();
                for a in 0..n_a {
                    let expected = if n == 0 { 1.0 / n_a as f64 } else { (c[a] as f64 + smoothing) / (n as f64 + smoothing * n_a as f64) };
                    prop_assert!((pi.prob(t, s, a) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn model_kernel_is_smoothed_frequencies(seed: u64, alpha in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_s, n_a, h) = (3, 2, 5);
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        let pi = random_policy(h, n_s, n_a, &mut rng);
        let env = Environment::new(mdp, ResetAccess::InitialOnly);
        let mut ledger = InteractionLedger::default();
        let trajs: Vec<Trajectory> = (0..10).map(|_| env.rollout(&pi, &mut rng, &mut ledger)).collect();
        let mut model = ModelEstimate::new(n_s, n_a, alpha).unwrap();
        model.update(&trajs).unwrap();
        prop_assert_eq!(model.total_transitions(), ledger.real_env_transitions);
        let kernel = model.kernel(h).unwrap();
        for s in 0..n_s {
            for a in 0..n_a {
                let mut c = vec![0u64; n_s];
                for tr in &trajs {
                    for (i, st) in tr.steps.iter().enumerate() {
                        if st.state == s && st.action == a {
                            c[tr.steps.get(i + 1).map_or(tr.final_state, |n| n.state)] += 1;
                        }
                    }
                }
                let n: u64 = c.iter().sum();
                for s2 in 0..n_s {
                    let expected = if n == 0 && alpha == 0.0 { 1.0 / n_s as f64 } else { (c[s2] as f64 + alpha) / (n as f64 + alpha * n_s as f64) };
                    prop_assert!((kernel.row(s, a)[s2] - expected).abs() < 1e-12);
                }
            }
        }
    }
}

fn tree_oracle(variant: OracleVariant, depth: usize, access: ResetAccess) -> (irl_lab_core::env::TreeInstance, Environment, irl_lab_core::env::DemoSet, OracleConfig) {
    let t = build_tree(depth).unwrap();
    let env = Environment::new(t.mdp.clone(), access);
    let demos = generate_demos(&t.mdp, &t.expert, 16, 3).unwrap();
    let mut cfg = OracleConfig::new(variant);
    cfg.batch_size = 3;
    cfg.inner_steps = 4;
    (t, env, demos, cfg)
}

#[test]
fn sample_based_rounds_account_for_every_transition() {
    for (variant, access) in [
        (OracleVariant::OnPolicyFqi, ResetAccess::InitialOnly),
        (OracleVariant::HyQ, ResetAccess::InitialOnly),
        (OracleVariant::FilterFqi, ResetAccess::Arbitrary),
        (OracleVariant::HyPer, ResetAccess::InitialOnly),
    ] {
        let (t, env, demos, cfg) = tree_oracle(variant, 3, access);
        let h = t.mdp.horizon() as u64;
        let cost = t.family.ground_truth().negated();
        let warm = TabularPolicy::for_mdp_uniform(&t.mdp);
        let run = || {
            let mut o = PolicyOracle::new(cfg.clone(), &env, &demos, 11).unwrap();
            let mut ledger = InteractionLedger::default();
            let out = o.step(&env, &demos, &cost, &warm, 1, 3, &mut ledger).unwrap();
            (out.policy, ledger)
        };
        let (pi, ledger) = run();
        assert_eq!(run(), (pi, ledger), "{variant} is deterministic given its seed");
        match variant {
            OracleVariant::FilterFqi => {
                assert_eq!(ledger.reset_queries, 3 * 4);
                assert!(ledger.real_env_transitions >= 3 * 4 && ledger.real_env_transitions <= 3 * 4 * h);
            }
            OracleVariant::HyPer => {
                assert_eq!(ledger.real_env_transitions, 3 * h);
                assert_eq!(ledger.reset_queries, 0);
            }
            _ => {
                assert_eq!(ledger.real_env_transitions, 3 * 4 * h);
                assert_eq!(ledger.reset_queries, 0);
            }
        }
    }
}

#[test]
fn offline_variants_touch_nothing() {
    for variant in [OracleVariant::BestResponse, OracleVariant::Bc, OracleVariant::Expert] {
        let (t, env, demos, cfg) = tree_oracle(variant, 3, ResetAccess::InitialOnly);
        let mut o = PolicyOracle::new(cfg, &env, &demos, 0).unwrap().with_expert(t.expert.clone());
        let mut ledger = InteractionLedger::default();
        let warm = TabularPolicy::for_mdp_uniform(&t.mdp);
        let f = t.family.member(3).unwrap();
        let out = o.step(&env, &demos, &f.negated(), &warm, 1, 1, &mut ledger).unwrap();
        assert_eq!(ledger, InteractionLedger::default(), "{variant}");
        if variant == OracleVariant::Expert {
            assert_eq!(out.policy, t.expert);
        }
        if variant == OracleVariant::BestResponse {
            // the expert's leaf pays 1 under every member, as does the bonus leaf
            assert!((policy_value(&t.mdp, &out.policy, &f).unwrap() - 1.0).abs() < 1e-12);
        }
    }
    let (t, env, demos, cfg) = tree_oracle(OracleVariant::Expert, 2, ResetAccess::InitialOnly);
    let mut o = PolicyOracle::new(cfg, &env, &demos, 0).unwrap();
    let warm = TabularPolicy::for_mdp_uniform(&t.mdp);
    let r = o.step(&env, &demos, &t.family.ground_truth(), &warm, 1, 1, &mut InteractionLedger::default());
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn hybrid_q_recovers_the_expert_on_a_deeper_tree() {
    let (t, env, demos, mut cfg) = tree_oracle(OracleVariant::HyQ, 5, ResetAccess::InitialOnly);
    cfg.batch_size = 8;
    cfg.inner_steps = 40;
    let r = t.family.ground_truth();
    let mut o = PolicyOracle::new(cfg, &env, &demos, 2).unwrap();
    let warm = o.initial_policy(&t.mdp);
    let out = o.step(&env, &demos, &r.negated(), &warm, 1, 1, &mut InteractionLedger::default()).unwrap();
    let gap = policy_value(&t.mdp, &t.expert, &r).unwrap() - policy_value(&t.mdp, &out.policy, &r).unwrap();
    assert!(gap <= 0.05, "gap {gap}");
}

#[test]
fn reset_rollouts_start_on_demonstrated_states() {
    let (t, env, demos, _) = tree_oracle(OracleVariant::FilterFqi, 4, ResetAccess::Arbitrary);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ledger = InteractionLedger::default();
    let pi = TabularPolicy::for_mdp_uniform(&t.mdp);
    let batch = irl_lab_core::oracles::filter_rollout(&env, &demos, &pi, 200, &mut rng, &mut ledger).unwrap();
    for tr in &batch {
        let start = tr.steps[0];
        assert!(demos.states_at(start.h).contains(&start.state));
        tr.validate(t.mdp.horizon(), t.mdp.num_states(), 2).unwrap();
    }
    assert_eq!(ledger.reset_queries, 200);
    assert_eq!(ledger.real_env_transitions, batch.iter().map(|t| t.len() as u64).sum::<u64>());
    let closed = Environment::new(t.mdp.clone(), ResetAccess::InitialOnly);
    assert!(matches!(
        irl_lab_core::oracles::filter_rollout(&closed, &demos, &pi, 1, &mut rng, &mut ledger),
        Err(Error::Capability(_))
    ));
}

#[test]
fn empty_reset_window_is_a_schedule_error() {
    assert!(matches!(reset_steps(ResetSchedule::Window { kappa: 0.001 }, 2, 1, 4), Err(Error::Schedule(_))));
}

#[test]
fn unvisited_cells_are_pessimistic() {
    let q = fitted_q(&TransitionCounts::new(4, 2, 2), &RewardTable::zeros(2, 2)).unwrap();
    for h in 0..4 {
        assert_eq!(q.at(h, 1, 0), -((4 - h) as f64));
    }
}

