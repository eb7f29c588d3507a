//! Exhaustive enumeration oracles. They share no code with the dynamic
//! programs they check: values come from forward propagation of the state
//! distribution under each deterministic policy.

use irl_lab_core::mdp::{RewardTable, TabularMdp};
use irl_lab_core::reward::RewardClass;

/// Largest number of deterministic policies [`best_deterministic_value`]
/// will enumerate.
pub const POLICY_BUDGET: u128 = 1 << 22;

/// `J(pi, r)` for the deterministic policy with `actions[h * S + s]`.
pub fn forward_value(mdp: &TabularMdp, reward: &RewardTable, actions: &[usize]) -> f64 {
    let n_s = mdp.num_states();
    let mut dist = mdp.initial_dist().to_vec();
    let mut next = vec![0.0; n_s];
    let mut value = 0.0;
    for h in 0..mdp.horizon() {
        next.iter_mut().for_each(|x| *x = 0.0);
        for s in 0..n_s {
            let p = dist[s];
            if p == 0.0 {
                continue;
            }
            let a = actions[h * n_s + s];
            value += p * reward.get(s, a);
            for (n, t) in next.iter_mut().zip(mdp.row(s, a)) {
                *n += p * t;
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    value
}

pub fn policy_count(mdp: &TabularMdp) -> u128 {
    let slots = (mdp.horizon() * mdp.num_states()) as u32;
    (mdp.num_actions() as u128).checked_pow(slots).unwrap_or(u128::MAX)
}

/// The best value over all `A^(H S)` deterministic time-indexed policies, or
/// `None` beyond [`POLICY_BUDGET`].
pub fn best_deterministic_value(mdp: &TabularMdp, reward: &RewardTable) -> Option<f64> {
    if policy_count(mdp) > POLICY_BUDGET {
        return None;
    }
    let n_a = mdp.num_actions();
    let mut actions = vec![0usize; mdp.horizon() * mdp.num_states()];
    let mut best = f64::NEG_INFINITY;
    loop {
        best = best.max(forward_value(mdp, reward, &actions));
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == actions.len() {
                return Some(best);
            }
            actions[i] += 1;
            if actions[i] < n_a {
                break;
            }
            actions[i] = 0;
            i += 1;
        }
    }
}

/// Largest box dimension whose vertices [`best_box_vertex`] will enumerate.
pub const VERTEX_BUDGET: usize = 20;

/// `min_{f in vertices} sum_t <g_t, f>` by enumerating all `2^(S A)` sign
/// patterns of the box, or all members of a family. Returns the minimum and
/// the minimizing reward values.
pub fn best_vertex(class: &RewardClass, gradients: &[Vec<f64>]) -> Option<(f64, Vec<f64>)> {
    let dim = class.num_states() * class.num_actions();
    let mut total = vec![0.0; dim];
    for g in gradients {
        for (t, x) in total.iter_mut().zip(g) {
            *t += x;
        }
    }
    let loss = |f: &[f64]| -> f64 { gradients.iter().map(|g| g.iter().zip(f).map(|(a, b)| a * b).sum::<f64>()).sum() };
    match class {
        RewardClass::Box { .. } => {
            if dim > VERTEX_BUDGET {
                return None;
            }
            let mut best: Option<(f64, Vec<f64>)> = None;
            for mask in 0u64..(1u64 << dim) {
                let f: Vec<f64> = (0..dim).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let v = loss(&f);
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, f));
                }
            }
            best
        }
        RewardClass::Family(members) => members
            .iter()
            .map(|m| (loss(m.values()), m.values().to_vec()))
            .min_by(|a, b| a.0.total_cmp(&b.0)),
    }
}
