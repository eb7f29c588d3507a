//! Performance difference measured through a model's value function.
//!
//! For a learner `pi`, an expert `pi_E`, a true MDP `M*` and a model `M^`, let
//! `Q^` be the learner's exact Q-function inside the model and
//! `V^_h(s) = sum_a pi_h(a|s) Q^_h(s, a)`, with `V^_H = 0`. Then
//!
//! ```text
//! J*(pi_E) - J*(pi) =  E_{pi_E, M*} sum_h [ Q^_h(s_h, pi_E) - Q^_h(s_h, pi) ]
//!                    + E_{pi_E, M*} sum_h [ (M* - M^) V^_{h+1} ](s_h, a_h)
//!                    + E_{pi,   M*} sum_h [ (M^ - M*) V^_{h+1} ](s_h, a_h)
//! ```
//!
//! exactly. All three expectations are computed with exact occupancies.

use super::{dp, OccupancyMeasure, RewardTable, TabularMdp, TabularPolicy};
use crate::error::{check_dim, Result};

/// The three terms of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdamTerms {
    /// Expert-trajectory advantage of `pi_E` over `pi` under the model Q.
    pub advantage: f64,
    /// Model mismatch along expert trajectories.
    pub expert_mismatch: f64,
    /// Model mismatch along learner trajectories.
    pub learner_mismatch: f64,
}

impl PdamTerms {
    pub fn total(&self) -> f64 {
        self.advantage + self.expert_mismatch + self.learner_mismatch
    }
}

/// Both sides of the advantage-plus-model-error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdamBound {
    /// `J*(pi_E, r) - J*(pi, r)`.
    pub lhs: f64,
    /// `advantage + 2 H^2 E_{d_mix}[TV]`.
    pub rhs: f64,
    pub advantage: f64,
    /// `E_{(s,a) ~ d_mix}[TV(M*(s,a), M^(s,a))]`, with `d_mix` the time-normalized
    /// 50/50 average of the expert and learner occupancies.
    pub expected_tv: f64,
    /// Instance-wise bound `advantage + sum_h (d_E + d_pi)[h] . TV . span(V^_{h+1})`,
    /// which holds unconditionally.
    pub weighted_rhs: f64,
}

impl PdamBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim("distribution length", p.len(), q.len())?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `E_{(s,a) ~ d / H}[TV(M*(s,a), M^(s,a))]`.
pub fn model_tv(true_mdp: &TabularMdp, model: &TabularMdp, occ: &OccupancyMeasure) -> Result<f64> {
    true_mdp.check_same_shape(model)?;
    check_dim("occupancy horizon", true_mdp.horizon(), occ.horizon())?;
    check_dim("occupancy states", true_mdp.num_states(), occ.num_states())?;
    check_dim("occupancy actions", true_mdp.num_actions(), occ.num_actions())?;
    let tv = row_tv(true_mdp, model);
    let total: f64 = occ
        .table()
        .chunks(tv.len())
        .map(|slice| slice.iter().zip(&tv).map(|(d, t)| d * t).sum::<f64>())
        .sum();
    Ok(total / true_mdp.horizon() as f64)
}

fn row_tv(true_mdp: &TabularMdp, model: &TabularMdp) -> Vec<f64> {
    let (n_s, n_a) = (true_mdp.num_states(), true_mdp.num_actions());
    let mut out = Vec::with_capacity(n_s * n_a);
    for s in 0..n_s {
        for a in 0..n_a {
            let p = true_mdp.row(s, a);
            let q = model.row(s, a);
            out.push(0.5 * p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum::<f64>());
        }
    }
    out
}

struct Pieces {
    terms: PdamTerms,
    d_expert: OccupancyMeasure,
    d_learner: OccupancyMeasure,
    v_hat: Vec<f64>,
}

fn pieces(
    true_mdp: &TabularMdp,
    model: &TabularMdp,
    expert: &TabularPolicy,
    learner: &TabularPolicy,
    reward: &RewardTable,
) -> Result<Pieces> {
    true_mdp.check_same_shape(model)?;
    let (n_s, n_a, horizon) = (true_mdp.num_states(), true_mdp.num_actions(), true_mdp.horizon());
    let q_hat = dp::exact_q(model, learner, reward)?;
    let v_hat = dp::state_values(model, learner, reward)?;
    let d_expert = dp::occupancy(true_mdp, expert)?;
    let d_learner = dp::occupancy(true_mdp, learner)?;

    let mut advantage = 0.0;
    let mut expert_mismatch = 0.0;
    let mut learner_mismatch = 0.0;
    for h in 0..horizon {
        let v_next = &v_hat[(h + 1) * n_s..(h + 2) * n_s];
        for s in 0..n_s {
            let q_row = &q_hat.slice(h)[s * n_a..(s + 1) * n_a];
            let mass_e: f64 = d_expert.slice(h)[s * n_a..(s + 1) * n_a].iter().sum();
            if mass_e != 0.0 {
                let q_e: f64 = expert.probs(h, s).iter().zip(q_row).map(|(p, q)| p * q).sum();
                let q_l: f64 = learner.probs(h, s).iter().zip(q_row).map(|(p, q)| p * q).sum();
                advantage += mass_e * (q_e - q_l);
            }
            for a in 0..n_a {
                let (de, dl) = (d_expert.at(h, s, a), d_learner.at(h, s, a));
                if de == 0.0 && dl == 0.0 {
                    continue;
                }
                let diff: f64 = true_mdp
                    .row(s, a)
                    .iter()
                    .zip(model.row(s, a))
                    .zip(v_next)
                    .map(|((t, m), v)| (t - m) * v)
                    .sum();
                expert_mismatch += de * diff;
                learner_mismatch -= dl * diff;
            }
        }
    }
    Ok(Pieces {
        terms: PdamTerms {
            advantage,
            expert_mismatch,
            learner_mismatch,
        },
        d_expert,
        d_learner,
        v_hat,
    })
}

/// The exact three-term decomposition of `J*(pi_E, r) - J*(pi, r)`.
pub fn pdam_decompose(
    true_mdp: &TabularMdp,
    model: &TabularMdp,
    expert: &TabularPolicy,
    learner: &TabularPolicy,
    reward: &RewardTable,
) -> Result<PdamTerms> {
    Ok(pieces(true_mdp, model, expert, learner, reward)?.terms)
}

/// Performance difference against the advantage term plus a `2 H^2`-weighted
/// model error under the 50/50 expert/learner occupancy.
pub fn pdam_bound(
    true_mdp: &TabularMdp,
    model: &TabularMdp,
    expert: &TabularPolicy,
    learner: &TabularPolicy,
    reward: &RewardTable,
) -> Result<PdamBound> {
    let p = pieces(true_mdp, model, expert, learner, reward)?;
    let (n_s, horizon) = (true_mdp.num_states(), true_mdp.horizon());
    let lhs = dp::policy_value(true_mdp, expert, reward)? - dp::policy_value(true_mdp, learner, reward)?;
    let mix = p.d_expert.mix(&p.d_learner, 0.5)?;
    let expected_tv = model_tv(true_mdp, model, &mix)?;
    let h = horizon as f64;
    let rhs = p.terms.advantage + 2.0 * h * h * expected_tv;

    let tv = row_tv(true_mdp, model);
    let n_a = true_mdp.num_actions();
    let mut weighted = 0.0;
    for step in 0..horizon {
        let v_next = &p.v_hat[(step + 1) * n_s..(step + 2) * n_s];
        let span = v_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v_next.iter().cloned().fold(f64::INFINITY, f64::min);
        let de = p.d_expert.slice(step);
        let dl = p.d_learner.slice(step);
        for i in 0..n_s * n_a {
            weighted += (de[i] + dl[i]) * tv[i] * span;
        }
    }
    Ok(PdamBound {
        lhs,
        rhs,
        advantage: p.terms.advantage,
        expected_tv,
        weighted_rhs: p.terms.advantage + weighted,
    })
}
