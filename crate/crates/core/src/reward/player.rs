//! Projected online gradient descent on the normalized value gap
//! `l_t(f) = (J(pi_t, f) - J(pi_E, f)) / H`.
//!
//! The player minimizes `l_t`: it moves `f` towards rewards that score the
//! expert high and the current learner low. The policy side then maximizes `f`
//! (equivalently, minimizes the cost `-f`).

use super::class::{dot, project_simplex, RewardClass};
use crate::error::{check_dim, Error, Result};
use crate::mdp::{OccupancyMeasure, RewardTable};

/// `l_t(f)` and its gradient `sum_h (d_pi[h] - d_E[h]) / H`, a state-action
/// table. The loss is linear: `l_t(f) = <gradient, f>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEvaluation {
    pub loss_value: f64,
    pub gradient: Vec<f64>,
}

pub fn evaluate_loss(
    f: &RewardTable,
    learner_occ: &OccupancyMeasure,
    expert_occ: &OccupancyMeasure,
) -> Result<LossEvaluation> {
    learner_occ.check_same_shape(expert_occ)?;
    check_dim("reward states", learner_occ.num_states(), f.num_states())?;
    check_dim("reward actions", learner_occ.num_actions(), f.num_actions())?;
    let h = learner_occ.horizon() as f64;
    let gradient: Vec<f64> = learner_occ
        .summed_over_time()
        .iter()
        .zip(expert_occ.summed_over_time())
        .map(|(l, e)| (l - e) / h)
        .collect();
    Ok(LossEvaluation {
        loss_value: dot(&gradient, f.values()),
        gradient,
    })
}

/// Step-size schedule. Iterations are counted from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    /// The same step every iteration. `0` freezes the player.
    Constant(f64),
    /// `eta_t = eta_0 / sqrt(t)`.
    Anytime(f64),
}

impl LearningRate {
    /// `D / (G sqrt(T))`, whose regret guarantee is exactly `D G sqrt(T)`.
    pub fn horizon_tuned(class: &RewardClass, iterations: usize) -> Self {
        let (d, g) = (class.diameter(), class.gradient_bound());
        if d == 0.0 || g == 0.0 {
            return LearningRate::Constant(0.0);
        }
        LearningRate::Constant(d / (g * (iterations as f64).sqrt()))
    }

    /// `eta_0 = D / G` with `1 / sqrt(t)` decay.
    pub fn default_for(class: &RewardClass) -> Self {
        let (d, g) = (class.diameter(), class.gradient_bound());
        if d == 0.0 || g == 0.0 {
            return LearningRate::Constant(0.0);
        }
        LearningRate::Anytime(d / g)
    }

    pub fn validate(&self) -> Result<()> {
        let (v, ok) = match *self {
            LearningRate::Constant(e) => (e, e.is_finite() && e >= 0.0),
            LearningRate::Anytime(e) => (e, e.is_finite() && e > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Range {
                field: "reward_lr",
                value: v,
                reason: "must be a finite positive step size",
            })
        }
    }

    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LearningRate::Constant(e) => e,
            LearningRate::Anytime(e) => e / (t.max(1) as f64).sqrt(),
        }
    }

    /// Standard projected-OGD guarantee after `T` steps:
    /// `D^2 / (2 eta_T) + (G^2 / 2) sum_t eta_t`. Infinite for a frozen player.
    pub fn regret_bound(&self, iterations: usize, diameter: f64, grad_bound: f64) -> f64 {
        if iterations == 0 {
            return 0.0;
        }
        let last = self.at(iterations);
        if last == 0.0 {
            return f64::INFINITY;
        }
        let sum: f64 = match *self {
            LearningRate::Constant(e) => e * iterations as f64,
            LearningRate::Anytime(_) => (1..=iterations).map(|t| self.at(t)).sum(),
        };
        diameter * diameter / (2.0 * last) + 0.5 * grad_bound * grad_bound * sum
    }
}

/// Exact hindsight regret of a played sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub reg_f: f64,
    pub comparator: RewardTable,
    pub cumulative_loss: f64,
    pub comparator_loss: f64,
}

/// Incremental form of [`exact_regret`].
#[derive(Debug, Clone)]
pub struct RegretTracker {
    class: RewardClass,
    sum_gradient: Vec<f64>,
    cumulative_loss: f64,
    steps: usize,
}

impl RegretTracker {
    pub fn new(class: RewardClass) -> Self {
        let n = class.num_states() * class.num_actions();
        Self {
            class,
            sum_gradient: vec![0.0; n],
            cumulative_loss: 0.0,
            steps: 0,
        }
    }

    pub fn push(&mut self, gradient: &[f64], played: &RewardTable) -> Result<()> {
        check_dim("gradient length", self.sum_gradient.len(), gradient.len())?;
        check_dim("played reward", self.sum_gradient.len(), played.values().len())?;
        self.cumulative_loss += dot(gradient, played.values());
        for (s, g) in self.sum_gradient.iter_mut().zip(gradient) {
            *s += g;
        }
        self.steps += 1;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn summary(&self) -> Result<RegretSummary> {
        if self.steps == 0 {
            return Err(Error::Empty("gradient history"));
        }
        let comparator = self.class.minimize_linear(&self.sum_gradient)?;
        let comparator_loss = dot(&self.sum_gradient, comparator.values());
        Ok(RegretSummary {
            reg_f: self.cumulative_loss - comparator_loss,
            comparator,
            cumulative_loss: self.cumulative_loss,
            comparator_loss,
        })
    }
}

/// `sum_t l_t(f_t) - min_{f in class} sum_t l_t(f)`, with the minimizer in
/// closed form (losses are linear).
pub fn exact_regret(
    class: &RewardClass,
    gradients: &[Vec<f64>],
    played: &[RewardTable],
) -> Result<RegretSummary> {
    check_dim("played sequence", gradients.len(), played.len())?;
    let mut tracker = RegretTracker::new(class.clone());
    for (g, f) in gradients.iter().zip(played) {
        tracker.push(g, f)?;
    }
    tracker.summary()
}

/// The reward player's state.
#[derive(Debug, Clone)]
pub struct RewardPlayer {
    class: RewardClass,
    lr: LearningRate,
    current: RewardTable,
    weights: Option<Vec<f64>>,
    iteration: usize,
    gradient_history: Vec<Vec<f64>>,
    played: Vec<RewardTable>,
}

impl RewardPlayer {
    pub fn new(class: RewardClass, lr: LearningRate) -> Result<Self> {
        lr.validate()?;
        let (current, weights) = class.initial();
        Ok(Self {
            class,
            lr,
            current,
            weights,
            iteration: 0,
            gradient_history: Vec::new(),
            played: Vec::new(),
        })
    }

    pub fn class(&self) -> &RewardClass {
        &self.class
    }

    pub fn learning_rate(&self) -> LearningRate {
        self.lr
    }

    /// `f_t` for the next round.
    pub fn current(&self) -> &RewardTable {
        &self.current
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Number of steps taken so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn gradient_history(&self) -> &[Vec<f64>] {
        &self.gradient_history
    }

    pub fn played(&self) -> &[RewardTable] {
        &self.played
    }

    /// One projected gradient step on `loss`, which must have been evaluated at
    /// [`current`](Self::current).
    pub fn ogd_step(&mut self, loss: &LossEvaluation) -> Result<()> {
        let n = self.class.num_states() * self.class.num_actions();
        check_dim("gradient length", n, loss.gradient.len())?;
        if let Some(i) = loss.gradient.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("loss gradient entry {i}")));
        }
        let eta = self.lr.at(self.iteration + 1);
        self.played.push(self.current.clone());
        self.gradient_history.push(loss.gradient.clone());
        self.iteration += 1;
        if eta == 0.0 {
            return Ok(());
        }
        match &self.class {
            RewardClass::Box {
                num_states,
                num_actions,
            } => {
                let stepped = self
                    .current
                    .values()
                    .iter()
                    .zip(&loss.gradient)
                    .map(|(f, g)| f - eta * g)
                    .collect();
                self.current = RewardTable::clipped(*num_states, *num_actions, stepped)?;
            }
            RewardClass::Family(members) => {
                let w = self.weights.as_ref().expect("family players carry weights");
                let stepped: Vec<f64> = w
                    .iter()
                    .zip(members)
                    .map(|(w, m)| w - eta * dot(m.values(), &loss.gradient))
                    .collect();
                let w = project_simplex(&stepped);
                self.current = self.class.combine(&w);
                self.weights = Some(w);
            }
        }
        Ok(())
    }

    pub fn regret(&self) -> Result<RegretSummary> {
        exact_regret(&self.class, &self.gradient_history, &self.played)
    }
}
