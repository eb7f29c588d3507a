use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irl_lab_core::env::{build_tree, TreeRewardFamily};
use irl_lab_core::mdp::random::{random_mdp, random_policy};
use irl_lab_core::mdp::{occupancy, policy_value, RewardTable};
use irl_lab_core::reward::{
    evaluate_loss, exact_regret, project_simplex, LearningRate, LossEvaluation, RewardClass, RewardPlayer,
};
use irl_lab_core::Error;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_point_on_simplex(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_linear_and_matches_values(seed: u64, alpha in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_s, n_a, h) = (4, 3, 5);
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        let d_l = occupancy(&mdp, &random_policy(h, n_s, n_a, &mut rng)).unwrap();
        let d_e = occupancy(&mdp, &random_policy(h, n_s, n_a, &mut rng)).unwrap();
        let f1 = irl_lab_core::mdp::random::random_reward(n_s, n_a, &mut rng);
        let f2 = irl_lab_core::mdp::random::random_reward(n_s, n_a, &mut rng);
        let mix = RewardTable::new(n_s, n_a, f1.values().iter().zip(f2.values()).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect()).unwrap();
        let l = |f: &RewardTable| evaluate_loss(f, &d_l, &d_e).unwrap();
        prop_assert!((l(&mix).loss_value - alpha * l(&f1).loss_value - (1.0 - alpha) * l(&f2).loss_value).abs() < 1e-12);
        // the loss is the normalized value difference
        prop_assert!((l(&f1).loss_value - (d_l.value(&f1).unwrap() - d_e.value(&f1).unwrap()) / h as f64).abs() < 1e-12);
        // the gradient has L1 norm at most 2
        prop_assert!(l(&f1).gradient.iter().map(|g| g.abs()).sum::<f64>() <= 2.0 + 1e-12);
    }

    #[test]
    fn simplex_projection_is_the_nearest_point(v in prop::collection::vec(-3.0f64..3.0, 1..8), seed: u64) {
        let p = project_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let again = project_simplex(&p);
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let dist = |q: &[f64]| q.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let q = random_point_on_simplex(v.len(), &mut rng);
            prop_assert!(dist(&p) <= dist(&q) + 1e-12);
        }
    }

    #[test]
    fn box_comparator_beats_random_points(g in prop::collection::vec(-1.0f64..1.0, 1..12), seed: u64) {
        let class = RewardClass::full_box(1, g.len());
        let best = class.minimize_linear(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let f: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            prop_assert!(dot(best.values(), &g) <= dot(&f, &g) + 1e-12);
        }
    }

    #[test]
    fn box_player_stays_in_the_box(seed: u64, eta in 0.01f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let class = RewardClass::full_box(3, 2);
        let mut player = RewardPlayer::new(class.clone(), LearningRate::Constant(eta)).unwrap();
        for _ in 0..30 {
            let g: Vec<f64> = (0..6).map(|_| rng.random_range(-0.4..0.4)).collect();
            let loss = LossEvaluation { loss_value: dot(&g, player.current().values()), gradient: g };
            player.ogd_step(&loss).unwrap();
            prop_assert!(class.contains(player.current()));
        }
        prop_assert_eq!(player.iteration(), 30);
    }

    #[test]
    fn family_player_stays_in_the_hull(seed: u64, negations: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = TreeRewardFamily::new(3, negations);
        let class = RewardClass::family(family.members()).unwrap();
        let mut player = RewardPlayer::new(class.clone(), LearningRate::default_for(&class)).unwrap();
        let dim = class.num_states() * class.num_actions();
        for _ in 0..30 {
            let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.1..0.1)).collect();
            let loss = LossEvaluation { loss_value: dot(&g, player.current().values()), gradient: g };
            player.ogd_step(&loss).unwrap();
            let w = player.weights().unwrap();
            prop_assert!(w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let combined = class.combine(w);
            for (a, b) in combined.values().iter().zip(player.current().values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn anytime_regret_stays_below_its_guarantee(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let class = RewardClass::full_box(2, 3);
        let lr = LearningRate::default_for(&class);
        let mut player = RewardPlayer::new(class.clone(), lr).unwrap();
        let t = 80;
        for _ in 0..t {
            // L1-normalized to 2
            let raw: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n: f64 = raw.iter().map(|x| x.abs()).sum();
            let g: Vec<f64> = raw.iter().map(|x| 2.0 * x / n).collect();
            let loss = LossEvaluation { loss_value: dot(&g, player.current().values()), gradient: g };
            player.ogd_step(&loss).unwrap();
        }
        let reg = player.regret().unwrap();
        prop_assert!(reg.reg_f <= lr.regret_bound(t, class.diameter(), class.gradient_bound()) + 1e-9);
        // the comparator is a vertex and nothing in the box does better
        let total: Vec<f64> = (0..6).map(|i| player.gradient_history().iter().map(|g| g[i]).sum()).collect();
        for _ in 0..200 {
            let f: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..=1.0)).collect();
            prop_assert!(reg.comparator_loss <= dot(&f, &total) + 1e-9);
        }
    }
}

#[test]
fn family_comparator_is_the_best_member() {
    let t = build_tree(3).unwrap();
    let members = t.family.members();
    let class = RewardClass::family(members.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dim = class.num_states() * 2;
    let grads: Vec<Vec<f64>> = (0..10).map(|_| (0..dim).map(|_| rng.random_range(-0.2..0.2)).collect()).collect();
    let played = vec![class.initial().0; 10];
    let s = exact_regret(&class, &grads, &played).unwrap();
    let best = members
        .iter()
        .map(|m| grads.iter().map(|g| dot(g, m.values())).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert!((s.comparator_loss - best).abs() < 1e-12);
    assert!(members.contains(&s.comparator));
}

#[test]
fn initial_rewards() {
    assert!(RewardClass::full_box(3, 2).initial().0.is_zero());
    let class = RewardClass::family(TreeRewardFamily::new(2, true).members()).unwrap();
    assert!(class.initial().0.values().iter().all(|v| v.abs() < 1e-15));
    let (f, w) = RewardClass::family(TreeRewardFamily::new(2, false).members()).unwrap().initial();
    assert_eq!(w.unwrap(), vec![1.0 / 3.0; 3]);
    // the base leaf is paid by every member, the others by one in three
    assert!(f.values().iter().any(|&v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn frozen_player_never_moves() {
    let class = RewardClass::full_box(2, 2);
    let mut player = RewardPlayer::new(class, LearningRate::Constant(0.0)).unwrap();
    for _ in 0..5 {
        player.ogd_step(&LossEvaluation { loss_value: 0.0, gradient: vec![1.0, -1.0, 0.0, 0.0] }).unwrap();
        assert!(player.current().is_zero());
    }
    assert_eq!(LearningRate::Constant(0.0).regret_bound(5, 1.0, 1.0), f64::INFINITY);
}

#[test]
fn invalid_steps_and_gradients_are_rejected() {
    for lr in [LearningRate::Constant(-1.0), LearningRate::Anytime(0.0), LearningRate::Constant(f64::NAN)] {
        assert!(matches!(RewardPlayer::new(RewardClass::full_box(1, 1), lr), Err(Error::Range { field: "reward_lr", .. })));
    }
    let mut p = RewardPlayer::new(RewardClass::full_box(1, 2), LearningRate::Constant(0.1)).unwrap();
    assert!(p.ogd_step(&LossEvaluation { loss_value: 0.0, gradient: vec![1.0] }).is_err());
    assert!(matches!(
        p.ogd_step(&LossEvaluation { loss_value: 0.0, gradient: vec![f64::NAN, 0.0] }),
        Err(Error::NonFinite(_))
    ));
}

#[test]
fn horizon_tuned_guarantee_is_dg_sqrt_t() {
    let class = RewardClass::full_box(3, 4);
    let lr = LearningRate::horizon_tuned(&class, 100);
    let bound = lr.regret_bound(100, class.diameter(), class.gradient_bound());
    assert!((bound - class.diameter() * class.gradient_bound() * 10.0).abs() < 1e-9);
}

#[test]
fn expert_matching_gives_zero_loss() {
    let t = build_tree(4).unwrap();
    let d = occupancy(&t.mdp, &t.expert).unwrap();
    let f = t.family.ground_truth();
    let l = evaluate_loss(&f, &d, &d).unwrap();
    assert_eq!(l.loss_value, 0.0);
    assert!(l.gradient.iter().all(|&g| g == 0.0));
    assert_eq!(policy_value(&t.mdp, &t.expert, &f).unwrap(), 1.0);
}
