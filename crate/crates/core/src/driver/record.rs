use crate::env::InteractionLedger;
use crate::mdp::TabularPolicy;
use crate::oracles::OracleVariant;
use crate::reward::RegretSummary;

use super::config::EvalMode;
use super::mixture::MixturePolicy;

/// Metrics after outer iteration `t`. Values are exact, under the true MDP,
/// whatever the evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub t: usize,
    pub ledger: InteractionLedger,
    /// `J(pi_t, r)`.
    pub j_learner: f64,
    /// `J(pi_E, r)`.
    pub j_expert: f64,
    /// `J(pi_E, f_t) - J(pi_t, f_t)`.
    pub gap_ft: f64,
    /// `l_t(f_t)` from exact occupancies.
    pub loss_ft: f64,
    /// `sum_{s <= t} gap_s`.
    pub reg_pi_running: f64,
    /// Exact hindsight regret of `f_1..f_t` over the reward class.
    pub reg_f_running: f64,
    pub model_tv: Option<f64>,
    /// `J(pi_E, r) - J(best_t, r)` for the best-on-validation policy among
    /// `pi_1..pi_t`.
    pub gap_best: f64,
    /// `J(pi_E, r) - J(mixture of pi_1..pi_t, r)`.
    pub gap_mixture: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run_id: String,
    pub seed: u64,
    pub variant: OracleVariant,
    pub horizon: usize,
    pub eval_mode: EvalMode,
    pub rows: Vec<RunRow>,
    pub policies: Vec<TabularPolicy>,
    pub mixture: MixturePolicy,
    /// Index into `policies` of the best-on-validation policy.
    pub best_index: usize,
    /// `sum_t gap_t`.
    pub reg_pi_sum: f64,
    /// Exact regret of the played rewards, from exact occupancies.
    pub reg_f: RegretSummary,
    /// Regret of the player on the losses it actually saw (empirical in
    /// sampled mode or when it compares against the demos).
    pub player_reg_f: f64,
    /// The step-size schedule's guarantee for `player_reg_f`.
    pub player_reg_bound: f64,
    pub j_expert: f64,
    /// `J(pi_E, f*) - J(mixture, f*)` at the hindsight comparator `f*`, which
    /// maximizes the gap over the class.
    pub ipm_mixture: f64,
    pub final_ledger: InteractionLedger,
}

impl RunRecord {
    pub fn outer_iters(&self) -> usize {
        self.rows.len()
    }

    /// `Reg_pi(T) / (T H^2)`.
    pub fn eps_pi(&self) -> f64 {
        let h = self.horizon as f64;
        self.reg_pi_sum / (self.rows.len() as f64 * h * h)
    }

    pub fn final_gap_mixture(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap_mixture)
    }

    pub fn final_gap_best(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap_best)
    }

    /// Real transitions consumed when the best-on-validation policy first came
    /// within `fraction * J(pi_E, r)` of the expert.
    pub fn transitions_to_gap(&self, fraction: f64) -> Option<u64> {
        let threshold = fraction * self.j_expert;
        self.rows
            .iter()
            .find(|r| r.gap_best <= threshold + 1e-12)
            .map(|r| r.ledger.real_env_transitions)
    }
}
