//! Finite-horizon tabular MDPs and the exact dynamic-programming routines built
//! on them.
//!
//! Every quantity here is computed exactly (no sampling). Downstream modules use
//! these functions as ground truth: the reward player reads occupancy measures,
//! the driver reads policy values, and the verification suites compare the
//! identities in [`pdam`] and [`dp`] against each other.
//!
//! Layout conventions shared by all tables:
//!
//! * transitions are stored row-major as `[(s * A + a) * S + s']`;
//! * state-action tables are `[s * A + a]`;
//! * time-indexed tables are `[(h * S + s) * A + a]` with `h` in `0..H`.

pub mod dp;
pub mod pdam;
pub mod random;

use rand::Rng;

use crate::error::{check_dim, Error, Result};

pub use dp::{
    bellman_backup, best_response, exact_q, occupancy, optimal_q, policy_value, state_values,
};
pub use pdam::{model_tv, pdam_bound, pdam_decompose, total_variation, PdamBound, PdamTerms};

/// Tolerance used when validating that rows are probability distributions.
pub const DIST_TOL: f64 = 1e-12;

fn check_distribution(what: &'static str, row: usize, probs: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::NotADistribution { what, row, sum: p });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(Error::NotADistribution { what, row, sum });
    }
    Ok(())
}

/// Finite-horizon MDP with stationary dynamics and an initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    transitions: Vec<f64>,
    initial: Vec<f64>,
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        transitions: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Empty("state or action space"));
        }
        if horizon == 0 {
            return Err(Error::Range {
                field: "horizon",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        check_dim(
            "transition tensor",
            num_states * num_actions * num_states,
            transitions.len(),
        )?;
        check_dim("initial distribution", num_states, initial.len())?;
        for (row, probs) in transitions.chunks(num_states).enumerate() {
            check_distribution("transition row", row, probs)?;
        }
        check_distribution("initial distribution", 0, &initial)?;
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            transitions,
            initial,
        })
    }

    /// Builds an MDP whose rows are produced by `row(s, a)`.
    pub fn from_rows<F>(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial: Vec<f64>,
        mut row: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Vec<f64>,
    {
        let mut transitions = Vec::with_capacity(num_states * num_actions * num_states);
        for s in 0..num_states {
            for a in 0..num_actions {
                let r = row(s, a);
                check_dim("transition row", num_states, r.len())?;
                transitions.extend(r);
            }
        }
        Self::new(num_states, num_actions, horizon, transitions, initial)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Next-state distribution `T(. | s, a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    /// Same dynamics, different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(
            self.num_states,
            self.num_actions,
            horizon,
            self.transitions.clone(),
            self.initial.clone(),
        )
    }

    /// Same dynamics and horizon, different initial distribution.
    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.transitions.clone(),
            initial,
        )
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.initial, rng)
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        sample_index(self.row(s, a), rng)
    }

    /// Errors unless `other` has the same state, action and horizon sizes.
    pub fn check_same_shape(&self, other: &TabularMdp) -> Result<()> {
        check_dim("state count", self.num_states, other.num_states)?;
        check_dim("action count", self.num_actions, other.num_actions)?;
        check_dim("horizon", self.horizon, other.horizon)
    }

    pub(crate) fn check_policy(&self, policy: &TabularPolicy) -> Result<()> {
        check_dim("policy horizon", self.horizon, policy.horizon)?;
        check_dim("policy states", self.num_states, policy.num_states)?;
        check_dim("policy actions", self.num_actions, policy.num_actions)
    }

    pub(crate) fn check_reward(&self, reward: &RewardTable) -> Result<()> {
        check_dim("reward states", self.num_states, reward.num_states)?;
        check_dim("reward actions", self.num_actions, reward.num_actions)
    }
}

/// Inverse-CDF sampling from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// A reward (or cost) function `f: S x A -> [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl RewardTable {
    pub fn new(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        check_dim("reward table", num_states * num_actions, values.len())?;
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(Error::OutOfBox { index, value });
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_fn<F>(num_states: usize, num_actions: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut values = Vec::with_capacity(num_states * num_actions);
        for s in 0..num_states {
            for a in 0..num_actions {
                values.push(f(s, a));
            }
        }
        Self::new(num_states, num_actions, values)
    }

    /// Clips every entry into the box. Never fails on finite input.
    pub fn clipped(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v.is_finite() {
                    Ok(v.clamp(-1.0, 1.0))
                } else {
                    Err(Error::NonFinite(format!("reward entry {i}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(num_states, num_actions, values)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn negated(&self) -> Self {
        Self {
            num_states: self.num_states,
            num_actions: self.num_actions,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Time-indexed stochastic policy `pi_h(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        check_dim(
            "policy table",
            horizon * num_states * num_actions,
            probs.len(),
        )?;
        for (row, p) in probs.chunks(num_actions).enumerate() {
            check_distribution("policy row", row, p)?;
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; horizon * num_states * num_actions],
        }
    }

    /// Deterministic policy taking `choose(h, s)` at every `(h, s)`.
    pub fn deterministic<F>(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        mut choose: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize) -> usize,
    {
        let mut probs = vec![0.0; horizon * num_states * num_actions];
        for h in 0..horizon {
            for s in 0..num_states {
                let a = choose(h, s);
                if a >= num_actions {
                    return Err(Error::IndexOutOfRange {
                        what: "action",
                        index: a,
                        size: num_actions,
                    });
                }
                probs[(h * num_states + s) * num_actions + a] = 1.0;
            }
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn for_mdp_uniform(mdp: &TabularMdp) -> Self {
        Self::uniform(mdp.horizon(), mdp.num_states(), mdp.num_actions())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn probs(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.probs[start..start + self.num_actions]
    }

    #[inline]
    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn table(&self) -> &[f64] {
        &self.probs
    }

    /// The action at `(h, s)` when the row is a point mass.
    pub fn deterministic_action(&self, h: usize, s: usize) -> Option<usize> {
        let row = self.probs(h, s);
        row.iter().position(|&p| p == 1.0)
    }

    /// `(1 - eps) * pi + eps * uniform`.
    pub fn epsilon_mixed(&self, eps: f64) -> Self {
        if eps == 0.0 {
            return self.clone();
        }
        let u = eps / self.num_actions as f64;
        Self {
            horizon: self.horizon,
            num_states: self.num_states,
            num_actions: self.num_actions,
            probs: self.probs.iter().map(|p| (1.0 - eps) * p + u).collect(),
        }
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, h: usize, s: usize, rng: &mut R) -> usize {
        sample_index(self.probs(h, s), rng)
    }

    pub fn same_shape(&self, other: &TabularPolicy) -> bool {
        self.horizon == other.horizon
            && self.num_states == other.num_states
            && self.num_actions == other.num_actions
    }
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectorySource {
    Learner,
    Expert,
    ModelRollout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub h: usize,
    pub state: usize,
    pub action: usize,
}

/// A reward-free trajectory. Rewards are always relabeled from the current
/// reward function when the data is read.
///
/// Rollouts normally start at `h = 0`; reset rollouts start later but always run
/// to the last timestep. `final_state` is the state reached after the last
/// action, so every step has a successor for model fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub final_state: usize,
    pub source: TrajectorySource,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start_step(&self) -> usize {
        self.steps.first().map_or(0, |s| s.h)
    }

    /// `(h, s, a, s')` tuples.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.steps.iter().enumerate().map(move |(i, st)| {
            let next = self
                .steps
                .get(i + 1)
                .map_or(self.final_state, |n| n.state);
            (st.h, st.state, st.action, next)
        })
    }

    /// Sum of `reward(s_h, a_h)` along the trajectory.
    pub fn relabeled_return(&self, reward: &RewardTable) -> f64 {
        self.steps.iter().map(|st| reward.get(st.state, st.action)).sum()
    }

    /// Checks consecutive timesteps ending at `horizon - 1` and index ranges.
    pub fn validate(&self, horizon: usize, num_states: usize, num_actions: usize) -> Result<()> {
        let start = horizon.saturating_sub(self.steps.len());
        check_dim("trajectory length", horizon - start, self.steps.len())?;
        for (i, st) in self.steps.iter().enumerate() {
            check_dim("trajectory timestep", start + i, st.h)?;
            if st.state >= num_states {
                return Err(Error::IndexOutOfRange {
                    what: "state",
                    index: st.state,
                    size: num_states,
                });
            }
            if st.action >= num_actions {
                return Err(Error::IndexOutOfRange {
                    what: "action",
                    index: st.action,
                    size: num_actions,
                });
            }
        }
        if self.final_state >= num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: self.final_state,
                size: num_states,
            });
        }
        Ok(())
    }
}

/// Per-timestep state-action visitation `d[h][s][a]`. Each timestep slice is a
/// distribution, so the whole table sums to `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    d: Vec<f64>,
}

impl OccupancyMeasure {
    pub(crate) fn from_raw(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        d: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(d.len(), horizon * num_states * num_actions);
        Self {
            horizon,
            num_states,
            num_actions,
            d,
        }
    }

    /// Empirical occupancy of full-length trajectories.
    pub fn empirical(
        trajectories: &[Trajectory],
        horizon: usize,
        num_states: usize,
        num_actions: usize,
    ) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::Empty("trajectories"));
        }
        let mut d = vec![0.0; horizon * num_states * num_actions];
        let w = 1.0 / trajectories.len() as f64;
        for traj in trajectories {
            check_dim("trajectory length", horizon, traj.len())?;
            traj.validate(horizon, num_states, num_actions)?;
            for st in &traj.steps {
                d[(st.h * num_states + st.state) * num_actions + st.action] += w;
            }
        }
        Ok(Self::from_raw(horizon, num_states, num_actions, d))
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn at(&self, h: usize, s: usize, a: usize) -> f64 {
        self.d[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn slice(&self, h: usize) -> &[f64] {
        let n = self.num_states * self.num_actions;
        &self.d[h * n..(h + 1) * n]
    }

    pub fn table(&self) -> &[f64] {
        &self.d
    }

    /// State marginal at timestep `h`.
    pub fn state_marginal(&self, h: usize) -> Vec<f64> {
        self.slice(h)
            .chunks(self.num_actions)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// `sum_h d[h]`, a state-action table with total mass `H`.
    pub fn summed_over_time(&self) -> Vec<f64> {
        let n = self.num_states * self.num_actions;
        let mut out = vec![0.0; n];
        for chunk in self.d.chunks(n) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// `<d, f> = sum_h sum_{s,a} d[h][s][a] f(s, a)`.
    pub fn value(&self, reward: &RewardTable) -> Result<f64> {
        check_dim("reward states", self.num_states, reward.num_states())?;
        check_dim("reward actions", self.num_actions, reward.num_actions())?;
        let n = self.num_states * self.num_actions;
        Ok(self
            .d
            .chunks(n)
            .map(|chunk| {
                chunk
                    .iter()
                    .zip(reward.values())
                    .map(|(d, f)| d * f)
                    .sum::<f64>()
            })
            .sum())
    }

    /// `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &OccupancyMeasure, w: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        let d = self
            .d
            .iter()
            .zip(&other.d)
            .map(|(a, b)| w * a + (1.0 - w) * b)
            .collect();
        Ok(Self::from_raw(
            self.horizon,
            self.num_states,
            self.num_actions,
            d,
        ))
    }

    /// `sum_h sum_{s,a} |d - d'|`; equals the box IPM `max_{|f|<=1} <d - d', f>`
    /// for time-indexed rewards.
    pub fn l1_distance(&self, other: &OccupancyMeasure) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.d.iter().zip(&other.d).map(|(a, b)| (a - b).abs()).sum())
    }

    pub fn check_same_shape(&self, other: &OccupancyMeasure) -> Result<()> {
        check_dim("occupancy horizon", self.horizon, other.horizon)?;
        check_dim("occupancy states", self.num_states, other.num_states)?;
        check_dim("occupancy actions", self.num_actions, other.num_actions)
    }
}

/// Time-indexed state-action values `q[h][s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    q: Vec<f64>,
}

impl QTable {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize, q: Vec<f64>) -> Result<Self> {
        check_dim("q table", horizon * num_states * num_actions, q.len())?;
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("q entry {i}")));
        }
        Ok(Self {
            horizon,
            num_states,
            num_actions,
            q,
        })
    }

    pub fn zeros(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            q: vec![0.0; horizon * num_states * num_actions],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn at(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn slice(&self, h: usize) -> &[f64] {
        let n = self.num_states * self.num_actions;
        &self.q[h * n..(h + 1) * n]
    }

    pub(crate) fn slice_mut(&mut self, h: usize) -> &mut [f64] {
        let n = self.num_states * self.num_actions;
        &mut self.q[h * n..(h + 1) * n]
    }

    pub fn table(&self) -> &[f64] {
        &self.q
    }

    /// Greedy deterministic policy, ties to the lowest action index.
    pub fn greedy_policy(&self) -> TabularPolicy {
        let a_n = self.num_actions;
        TabularPolicy::deterministic(self.horizon, self.num_states, a_n, |h, s| {
            let start = (h * self.num_states + s) * a_n;
            argmax_lowest(&self.q[start..start + a_n])
        })
        .expect("argmax is always in range")
    }
}

/// Index of the maximum, ties resolved to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
