use crate::error::{Error, Result};

/// Which policy-search routine answers each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleVariant {
    /// Exact dynamic programming in the true MDP.
    BestResponse,
    /// Fitted-Q on the learner's own rollouts.
    OnPolicyFqi,
    /// Fitted-Q on learner rollouts mixed with expert trajectories.
    HyQ,
    /// Fitted-Q on rollouts reset to expert states (needs reset access).
    FilterFqi,
    /// Model fit on mixed data, policy solved inside the model.
    HyPer,
    /// Behavioral cloning; ignores the reward.
    Bc,
    /// Returns the expert every round. A fixed point of the game, for smoke tests.
    Expert,
}

impl OracleVariant {
    pub const ALL: [OracleVariant; 7] = [
        OracleVariant::BestResponse,
        OracleVariant::OnPolicyFqi,
        OracleVariant::HyQ,
        OracleVariant::FilterFqi,
        OracleVariant::HyPer,
        OracleVariant::Bc,
        OracleVariant::Expert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleVariant::BestResponse => "best_response",
            OracleVariant::OnPolicyFqi => "on_policy_fqi",
            OracleVariant::HyQ => "hyq",
            OracleVariant::FilterFqi => "filter_fqi",
            OracleVariant::HyPer => "hyper",
            OracleVariant::Bc => "bc",
            OracleVariant::Expert => "expert",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Whether the variant draws real transitions.
    pub fn is_sample_based(self) -> bool {
        matches!(
            self,
            OracleVariant::OnPolicyFqi
                | OracleVariant::HyQ
                | OracleVariant::FilterFqi
                | OracleVariant::HyPer
        )
    }
}

impl std::fmt::Display for OracleVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How D_mix evolves across inner steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferMode {
    /// Every batch is kept.
    Cumulative,
    /// Each regression sees only the latest batch.
    Fresh,
}

/// Which timesteps the model-based solver may reset to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResetSchedule {
    /// Any timestep of the demonstrations.
    Uniform,
    /// The sliding window `[H (1 - t/T), H min(1, 1 - t/T + kappa)]`
    /// (1-indexed timesteps) narrowing backwards from the end of the horizon.
    Window { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub variant: OracleVariant,
    /// Learner trajectories per inner step (and expert trajectories per step
    /// for the hybrid variants).
    pub batch_size: usize,
    pub inner_steps: usize,
    /// Additive smoothing for the model; `None` means `1 / |S|`.
    pub model_smoothing: Option<f64>,
    pub reset_schedule: ResetSchedule,
    pub exploration_eps: f64,
    pub bc_smoothing: f64,
    pub buffer: BufferMode,
    /// Keep collected data across outer iterations (it is relabeled with each
    /// new reward).
    pub persist_buffer: bool,
    /// Add expert trajectories to the reset-based learner's regression.
    pub filter_hybrid: bool,
}

impl OracleConfig {
    pub fn new(variant: OracleVariant) -> Self {
        Self {
            variant,
            batch_size: 8,
            inner_steps: 10,
            model_smoothing: None,
            reset_schedule: ResetSchedule::Uniform,
            exploration_eps: 0.05,
            bc_smoothing: 0.01,
            buffer: BufferMode::Cumulative,
            persist_buffer: true,
            filter_hybrid: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant.is_sample_based() {
            if self.batch_size == 0 {
                return Err(Error::Precondition("batch size B must be at least 1".into()));
            }
            if self.inner_steps == 0 {
                return Err(Error::Precondition("inner steps N must be at least 1".into()));
            }
        }
        if !(0.0..1.0).contains(&self.exploration_eps) {
            return Err(Error::Range {
                field: "exploration_eps",
                value: self.exploration_eps,
                reason: "must lie in [0, 1)",
            });
        }
        if let Some(a) = self.model_smoothing {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::Range {
                    field: "model_smoothing",
                    value: a,
                    reason: "must be finite and non-negative",
                });
            }
        }
        if !(self.bc_smoothing.is_finite() && self.bc_smoothing >= 0.0) {
            return Err(Error::Range {
                field: "bc_smoothing",
                value: self.bc_smoothing,
                reason: "must be finite and non-negative",
            });
        }
        if let ResetSchedule::Window { kappa } = self.reset_schedule {
            if !(kappa > 0.0 && kappa <= 1.0) {
                return Err(Error::Range {
                    field: "reset_window",
                    value: kappa,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in OracleVariant::ALL {
            assert_eq!(OracleVariant::from_name(v.name()), Some(v));
        }
        assert_eq!(OracleVariant::from_name("gail"), None);
    }

    #[test]
    fn validation() {
        let mut c = OracleConfig::new(OracleVariant::HyQ);
        assert!(c.validate().is_ok());
        c.batch_size = 0;
        assert!(matches!(c.validate(), Err(Error::Precondition(_))));
        c.variant = OracleVariant::Bc;
        assert!(c.validate().is_ok());
        c.reset_schedule = ResetSchedule::Window { kappa: 0.0 };
        assert!(matches!(c.validate(), Err(Error::Range { field: "reset_window", .. })));
        c.reset_schedule = ResetSchedule::Window { kappa: 1.0 };
        c.exploration_eps = 1.0;
        assert!(c.validate().is_err());
    }
}
