//! JSON summaries of runs and sweeps.

use serde::Serialize;

use irl_lab_core::driver::{theorem_ledger, RunRecord};

/// Gap threshold, as a fraction of `J(pi_E, r)`, for the sample-efficiency
/// metric.
pub const GAP_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub variant: String,
    pub seed: u64,
    pub outer_iters: usize,
    pub horizon: usize,
    pub j_expert: f64,
    pub final_gap_mixture: f64,
    pub final_gap_best: f64,
    pub best_index: usize,
    /// `None` for sampled-mode runs, where the ledger is not exact.
    pub ledger_lhs: Option<f64>,
    pub ledger_rhs: Option<f64>,
    pub ledger_ipm: Option<f64>,
    pub ledger_holds: Option<bool>,
    pub reg_pi_sum: f64,
    pub eps_pi: f64,
    pub reg_f: f64,
    pub player_reg_f: f64,
    pub player_reg_bound: f64,
    pub real_env_transitions: u64,
    pub model_transitions: u64,
    pub reset_queries: u64,
    /// `None` when the threshold was never reached.
    pub transitions_to_gap_0p1: Option<u64>,
}

impl RunSummary {
    pub fn from_record(record: &RunRecord) -> Self {
        let ledger = theorem_ledger(record).ok();
        Self {
            run_id: record.run_id.clone(),
            variant: record.variant.name().into(),
            seed: record.seed,
            outer_iters: record.outer_iters(),
            horizon: record.horizon,
            j_expert: record.j_expert,
            final_gap_mixture: record.final_gap_mixture(),
            final_gap_best: record.final_gap_best(),
            best_index: record.best_index,
            ledger_lhs: ledger.map(|l| l.lhs),
            ledger_rhs: ledger.map(|l| l.rhs),
            ledger_ipm: ledger.map(|l| l.ipm),
            ledger_holds: ledger.map(|l| l.holds),
            reg_pi_sum: record.reg_pi_sum,
            eps_pi: record.eps_pi(),
            reg_f: record.reg_f.reg_f,
            player_reg_f: record.player_reg_f,
            player_reg_bound: record.player_reg_bound,
            real_env_transitions: record.final_ledger.real_env_transitions,
            model_transitions: record.final_ledger.model_transitions,
            reset_queries: record.final_ledger.reset_queries,
            transitions_to_gap_0p1: record.transitions_to_gap(GAP_FRACTION),
        }
    }
}

/// Median where `None` counts as infinity; `None` if the median is infinite.
pub fn median_with_infinity(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

pub fn median(values: &[f64]) -> f64 {
    let wrapped: Vec<Option<f64>> = values.iter().map(|&x| Some(x)).collect();
    median_with_infinity(&wrapped).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantAggregate {
    pub variant: String,
    pub seeds: Vec<u64>,
    pub median_final_gap_best: f64,
    pub median_final_gap_mixture: f64,
    /// `None` when at least half the seeds never reached the threshold.
    pub median_transitions_to_gap_0p1: Option<f64>,
    pub ledger_all_hold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub name: String,
    pub variants: Vec<VariantAggregate>,
    pub runs: Vec<RunSummary>,
}

impl SweepSummary {
    /// Groups runs by variant, in order of first appearance.
    pub fn new(name: &str, runs: Vec<RunSummary>) -> Self {
        let mut order: Vec<String> = Vec::new();
        for r in &runs {
            if !order.contains(&r.variant) {
                order.push(r.variant.clone());
            }
        }
        let variants = order
            .into_iter()
            .map(|variant| {
                let group: Vec<&RunSummary> = runs.iter().filter(|r| r.variant == variant).collect();
                let gaps_best: Vec<f64> = group.iter().map(|r| r.final_gap_best).collect();
                let gaps_mix: Vec<f64> = group.iter().map(|r| r.final_gap_mixture).collect();
                let ttg: Vec<Option<f64>> = group.iter().map(|r| r.transitions_to_gap_0p1.map(|x| x as f64)).collect();
                let holds: Option<Vec<bool>> = group.iter().map(|r| r.ledger_holds).collect();
                VariantAggregate {
                    seeds: group.iter().map(|r| r.seed).collect(),
                    median_final_gap_best: median(&gaps_best),
                    median_final_gap_mixture: median(&gaps_mix),
                    median_transitions_to_gap_0p1: median_with_infinity(&ttg),
                    ledger_all_hold: holds.map(|h| h.iter().all(|&x| x)),
                    variant,
                }
            })
            .collect();
        Self {
            name: name.into(),
            variants,
            runs,
        }
    }

    pub fn variant(&self, name: &str) -> Option<&VariantAggregate> {
        self.variants.iter().find(|v| v.variant == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_treat_none_as_infinite() {
        assert_eq!(median_with_infinity(&[Some(3.0), None, Some(1.0)]), Some(3.0));
        assert_eq!(median_with_infinity(&[Some(3.0), None, None]), None);
        assert_eq!(median_with_infinity(&[Some(2.0), Some(4.0)]), Some(3.0));
        assert_eq!(median_with_infinity(&[Some(2.0), None]), None);
        assert_eq!(median_with_infinity(&[]), None);
        assert_eq!(median(&[5.0, 1.0, 3.0, 7.0]), 4.0);
    }
}
