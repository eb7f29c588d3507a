//! Count-based dynamics model and the model-based solver with resets.
//!
//! Accumulating counts and reading off the smoothed maximum-likelihood kernel is
//! follow-the-leader on the log loss `-log M(s' | s, a)`, so the model sequence
//! is itself a no-regret learner.

use crate::error::{check_dim, Error, Result};
use crate::mdp::{argmax_lowest, RewardTable, TabularMdp, TabularPolicy, Trajectory};

use super::config::ResetSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEstimate {
    num_states: usize,
    num_actions: usize,
    smoothing: f64,
    counts: Vec<u64>,
    initial_counts: Vec<u64>,
}

impl ModelEstimate {
    pub fn new(num_states: usize, num_actions: usize, smoothing: f64) -> Result<Self> {
        if !(smoothing.is_finite() && smoothing >= 0.0) {
            return Err(Error::Range {
                field: "model_smoothing",
                value: smoothing,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self {
            num_states,
            num_actions,
            smoothing,
            counts: vec![0; num_states * num_actions * num_states],
            initial_counts: vec![0; num_states],
        })
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn count(&self, s: usize, a: usize, s2: usize) -> u64 {
        self.counts[(s * self.num_actions + a) * self.num_states + s2]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_transitions(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds every `(s, a, s')` of `trajs`; episodes starting at `h = 0` also
    /// update the initial-state counts.
    pub fn update<'a>(&mut self, trajs: impl IntoIterator<Item = &'a Trajectory>) -> Result<()> {
        for t in trajs {
            for (_, s, a, s2) in t.transitions() {
                for (what, idx, size) in [
                    ("state", s, self.num_states),
                    ("action", a, self.num_actions),
                    ("state", s2, self.num_states),
                ] {
                    if idx >= size {
                        return Err(Error::IndexOutOfRange { what, index: idx, size });
                    }
                }
                self.counts[(s * self.num_actions + a) * self.num_states + s2] += 1;
            }
            if let Some(first) = t.steps.first() {
                if first.h == 0 {
                    self.initial_counts[first.state] += 1;
                }
            }
        }
        Ok(())
    }

    fn smoothed(&self, row: &[u64]) -> Vec<f64> {
        let n = row.len() as f64;
        let total: u64 = row.iter().sum();
        let denom = total as f64 + self.smoothing * n;
        if denom == 0.0 {
            return vec![1.0 / n; row.len()];
        }
        row.iter().map(|&c| (c as f64 + self.smoothing) / denom).collect()
    }

    /// The smoothed kernel as an MDP with the given horizon.
    pub fn kernel(&self, horizon: usize) -> Result<TabularMdp> {
        let n = self.num_states;
        let initial = self.smoothed(&self.initial_counts);
        TabularMdp::from_rows(n, self.num_actions, horizon, initial, |s, a| {
            let start = (s * self.num_actions + a) * n;
            self.smoothed(&self.counts[start..start + n])
        })
    }
}

/// Timesteps (0-indexed) the solver may update at outer iteration `t` of `T`.
pub fn reset_steps(schedule: ResetSchedule, horizon: usize, t: usize, total: usize) -> Result<Vec<usize>> {
    match schedule {
        ResetSchedule::Uniform => Ok((0..horizon).collect()),
        ResetSchedule::Window { kappa } => {
            let frac = 1.0 - t as f64 / total.max(1) as f64;
            let h = horizon as f64;
            let lower = h * frac;
            let upper = h * (frac + kappa).min(1.0);
            let steps: Vec<usize> = (0..horizon)
                .filter(|&i| {
                    let one_based = (i + 1) as f64;
                    one_based >= lower - 1e-12 && one_based <= upper + 1e-12
                })
                .collect();
            if steps.is_empty() {
                return Err(Error::Schedule(format!(
                    "window [{lower:.3}, {upper:.3}] contains no timestep (kappa = {kappa}, H = {horizon}, t = {t}, T = {total})"
                )));
            }
            Ok(steps)
        }
    }
}

/// Output of the model-based solver.
#[derive(Debug, Clone)]
pub struct HyperSolution {
    pub policy: TabularPolicy,
    /// Bellman backups performed inside the model.
    pub model_transitions: u64,
}

/// Backward induction inside `model` maximizing `-cost`. Timesteps outside
/// `steps` keep `warm_start`; the rest are greedy (lowest-index ties) with
/// respect to the composite policy's continuation values, so the result is
/// optimal from every reset state in the window.
pub fn hyper_inner(
    model: &TabularMdp,
    cost: &RewardTable,
    warm_start: &TabularPolicy,
    steps: &[usize],
) -> Result<HyperSolution> {
    let (n_s, n_a, horizon) = (model.num_states(), model.num_actions(), model.horizon());
    check_dim("warm start horizon", horizon, warm_start.horizon())?;
    check_dim("warm start states", n_s, warm_start.num_states())?;
    check_dim("cost states", n_s, cost.num_states())?;
    check_dim("cost actions", n_a, cost.num_actions())?;
    let reward = cost.negated();
    let mut update = vec![false; horizon];
    for &h in steps {
        update[h] = true;
    }
    let mut probs = warm_start.table().to_vec();
    let mut v_next = vec![0.0; n_s];
    let mut backups = 0u64;
    let mut q = vec![0.0; n_a];
    for h in (0..horizon).rev() {
        let mut v = vec![0.0; n_s];
        for s in 0..n_s {
            for (a, qa) in q.iter_mut().enumerate() {
                *qa = reward.get(s, a)
                    + if h + 1 < horizon {
                        model.row(s, a).iter().zip(&v_next).map(|(t, v)| t * v).sum::<f64>()
                    } else {
                        0.0
                    };
            }
            backups += n_a as u64;
            let row = &mut probs[(h * n_s + s) * n_a..(h * n_s + s + 1) * n_a];
            if update[h] {
                let best = argmax_lowest(&q);
                row.iter_mut().for_each(|p| *p = 0.0);
                row[best] = 1.0;
            }
            v[s] = row.iter().zip(&q).map(|(p, q)| p * q).sum();
        }
        v_next = v;
    }
    Ok(HyperSolution {
        policy: TabularPolicy::new(horizon, n_s, n_a, probs)?,
        model_transitions: backups,
    })
}
