//! Backward induction and forward flow on tabular MDPs.

use super::{argmax_lowest, OccupancyMeasure, QTable, RewardTable, TabularMdp, TabularPolicy};
use crate::error::{check_dim, Result};

/// `V_h(s)` for `h` in `0..=H` (the last layer is all zeros), flattened as
/// `[h * S + s]`.
pub fn state_values(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    reward: &RewardTable,
) -> Result<Vec<f64>> {
    mdp.check_policy(policy)?;
    mdp.check_reward(reward)?;
    let (n_s, n_a, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut v = vec![0.0; (horizon + 1) * n_s];
    for h in (0..horizon).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * n_s);
        let next = &tail[..n_s];
        let cur = &mut head[h * n_s..];
        for s in 0..n_s {
            let probs = policy.probs(h, s);
            let mut acc = 0.0;
            for a in 0..n_a {
                let p = probs[a];
                if p == 0.0 {
                    continue;
                }
                let cont: f64 = mdp.row(s, a).iter().zip(next).map(|(t, v)| t * v).sum();
                acc += p * (reward.get(s, a) + cont);
            }
            cur[s] = acc;
        }
    }
    Ok(v)
}

/// Exact `J(pi, f) = E[sum_h f(s_h, a_h)]` by backward induction.
pub fn policy_value(mdp: &TabularMdp, policy: &TabularPolicy, reward: &RewardTable) -> Result<f64> {
    let v = state_values(mdp, policy, reward)?;
    Ok(mdp
        .initial_dist()
        .iter()
        .zip(&v[..mdp.num_states()])
        .map(|(p, v)| p * v)
        .sum())
}

/// Forward flow: `d[0] = rho x pi_0`, `d[h+1](s', a') = sum T(s'|s,a) d[h](s,a) pi_{h+1}(a'|s')`.
pub fn occupancy(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<OccupancyMeasure> {
    mdp.check_policy(policy)?;
    let (n_s, n_a, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let slab = n_s * n_a;
    let mut d = vec![0.0; horizon * slab];
    let mut state_mass = mdp.initial_dist().to_vec();
    for h in 0..horizon {
        let layer = &mut d[h * slab..(h + 1) * slab];
        for s in 0..n_s {
            let m = state_mass[s];
            if m == 0.0 {
                continue;
            }
            for (a, p) in policy.probs(h, s).iter().enumerate() {
                layer[s * n_a + a] = m * p;
            }
        }
        if h + 1 < horizon {
            state_mass.iter_mut().for_each(|x| *x = 0.0);
            for s in 0..n_s {
                for a in 0..n_a {
                    let w = layer[s * n_a + a];
                    if w == 0.0 {
                        continue;
                    }
                    for (next, t) in state_mass.iter_mut().zip(mdp.row(s, a)) {
                        *next += w * t;
                    }
                }
            }
        }
    }
    Ok(OccupancyMeasure::from_raw(horizon, n_s, n_a, d))
}

/// One application of the policy Bellman operator at timestep `h`:
/// `(T Q)(s, a) = f(s, a) + sum_{s'} T(s'|s,a) sum_{a'} pi_{h+1}(a'|s') q_next(s', a')`.
///
/// `q_next = None` means the terminal layer (`Q_H = 0`).
pub fn bellman_backup(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    reward: &RewardTable,
    h: usize,
    q_next: Option<&[f64]>,
) -> Result<Vec<f64>> {
    mdp.check_policy(policy)?;
    mdp.check_reward(reward)?;
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    check_dim("backup timestep", mdp.horizon().max(h + 1), mdp.horizon())?;
    let next_v: Option<Vec<f64>> = match q_next {
        None => None,
        Some(q) => {
            check_dim("q_next slice", n_s * n_a, q.len())?;
            if h + 1 >= mdp.horizon() {
                // The policy has no layer h + 1: only a zero slice is meaningful.
                if q.iter().any(|&x| x != 0.0) {
                    return Err(crate::Error::Precondition(
                        "q_next must be zero at the last timestep".into(),
                    ));
                }
                None
            } else {
                Some(
                    (0..n_s)
                        .map(|s| {
                            policy
                                .probs(h + 1, s)
                                .iter()
                                .zip(&q[s * n_a..(s + 1) * n_a])
                                .map(|(p, q)| p * q)
                                .sum()
                        })
                        .collect(),
                )
            }
        }
    };
    let mut out = reward.values().to_vec();
    if let Some(v) = next_v {
        for s in 0..n_s {
            for a in 0..n_a {
                out[s * n_a + a] += mdp.row(s, a).iter().zip(&v).map(|(t, v)| t * v).sum::<f64>();
            }
        }
    }
    Ok(out)
}

/// `Q^pi_f` by backward induction; `Q[H-1] = f`.
pub fn exact_q(mdp: &TabularMdp, policy: &TabularPolicy, reward: &RewardTable) -> Result<QTable> {
    mdp.check_policy(policy)?;
    mdp.check_reward(reward)?;
    let (n_s, n_a, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut q = QTable::zeros(horizon, n_s, n_a);
    for h in (0..horizon).rev() {
        let layer = if h + 1 == horizon {
            bellman_backup(mdp, policy, reward, h, None)?
        } else {
            bellman_backup(mdp, policy, reward, h, Some(q.slice(h + 1)))?
        };
        q.slice_mut(h).copy_from_slice(&layer);
    }
    Ok(q)
}

/// Optimal `Q*_f` by greedy backward induction.
pub fn optimal_q(mdp: &TabularMdp, reward: &RewardTable) -> Result<QTable> {
    mdp.check_reward(reward)?;
    let (n_s, n_a, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut q = QTable::zeros(horizon, n_s, n_a);
    let mut v_next = vec![0.0; n_s];
    for h in (0..horizon).rev() {
        let layer = q.slice_mut(h);
        for s in 0..n_s {
            for a in 0..n_a {
                let cont: f64 = mdp.row(s, a).iter().zip(&v_next).map(|(t, v)| t * v).sum();
                layer[s * n_a + a] = reward.get(s, a) + cont;
            }
        }
        for s in 0..n_s {
            let row = &layer[s * n_a..(s + 1) * n_a];
            v_next[s] = row[argmax_lowest(row)];
        }
    }
    Ok(q)
}

/// Deterministic optimal policy for `reward`; ties go to the lowest action index.
pub fn best_response(mdp: &TabularMdp, reward: &RewardTable) -> Result<TabularPolicy> {
    Ok(optimal_q(mdp, reward)?.greedy_policy())
}
