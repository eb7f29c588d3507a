//! The interactive environment seen by sample-based oracles, with strict
//! accounting of every real transition consumed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{Step, TabularMdp, TabularPolicy, Trajectory, TrajectorySource};

/// What kind of access the environment grants beyond sampling from `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetAccess {
    /// Episodes only start from the initial distribution.
    InitialOnly,
    /// The learner may be teleported to any `(h, s)`.
    Arbitrary,
}

/// Counters for interactions with the real environment and the learned model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InteractionLedger {
    pub real_env_transitions: u64,
    pub model_transitions: u64,
    pub reset_queries: u64,
}

#[derive(Debug, Clone)]
pub struct Environment {
    mdp: TabularMdp,
    access: ResetAccess,
}

impl Environment {
    pub fn new(mdp: TabularMdp, access: ResetAccess) -> Self {
        Self { mdp, access }
    }

    /// Read-only view of the dynamics, used for exact evaluation and by the
    /// oracle that is handed the true model.
    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn access(&self) -> ResetAccess {
        self.access
    }

    pub fn supports_resets(&self) -> bool {
        self.access == ResetAccess::Arbitrary
    }

    /// A full episode from `rho`.
    pub fn rollout<R: Rng + ?Sized>(
        &self,
        policy: &TabularPolicy,
        rng: &mut R,
        ledger: &mut InteractionLedger,
    ) -> Trajectory {
        let s0 = self.mdp.sample_initial(rng);
        let traj = sample_trajectory(&self.mdp, policy, 0, s0, TrajectorySource::Learner, rng);
        ledger.real_env_transitions += traj.len() as u64;
        traj
    }

    /// An episode starting at `(h, s)`; requires arbitrary resets.
    pub fn rollout_from<R: Rng + ?Sized>(
        &self,
        h: usize,
        s: usize,
        policy: &TabularPolicy,
        rng: &mut R,
        ledger: &mut InteractionLedger,
    ) -> Result<Trajectory> {
        if !self.supports_resets() {
            return Err(Error::Capability(
                "environment does not support resets to arbitrary states".into(),
            ));
        }
        if h >= self.mdp.horizon() || s >= self.mdp.num_states() {
            return Err(Error::IndexOutOfRange {
                what: "reset point",
                index: if h >= self.mdp.horizon() { h } else { s },
                size: if h >= self.mdp.horizon() {
                    self.mdp.horizon()
                } else {
                    self.mdp.num_states()
                },
            });
        }
        ledger.reset_queries += 1;
        let traj = sample_trajectory(&self.mdp, policy, h, s, TrajectorySource::Learner, rng);
        ledger.real_env_transitions += traj.len() as u64;
        Ok(traj)
    }
}

/// Samples `(h, s_h, a_h)` for `h = start..H` from `(start, state)`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    start: usize,
    state: usize,
    source: TrajectorySource,
    rng: &mut R,
) -> Trajectory {
    let horizon = mdp.horizon();
    let mut steps = Vec::with_capacity(horizon.saturating_sub(start));
    let mut s = state;
    for h in start..horizon {
        let a = policy.sample_action(h, s, rng);
        steps.push(Step {
            h,
            state: s,
            action: a,
        });
        s = mdp.sample_next(s, a, rng);
    }
    Trajectory {
        steps,
        final_state: s,
        source,
    }
}
