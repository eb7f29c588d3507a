use crate::error::{Error, Result};

use super::config::EvalMode;
use super::record::RunRecord;

/// Both sides of the imitation-gap guarantee for the mixture policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremLedger {
    /// `J(pi_E, r) - J(mixture, r)`.
    pub lhs: f64,
    /// `Reg_pi / T + H Reg_f / T`.
    pub rhs: f64,
    pub holds: bool,
    /// `max_{f in class} [J(pi_E, f) - J(mixture, f)]`, the quantity the proof
    /// places between the two sides. `r` is one candidate, giving `lhs <= ipm`;
    /// with exact losses `ipm` equals `rhs` up to rounding.
    pub ipm: f64,
}

pub const LEDGER_TOL: f64 = 1e-8;

/// Reads the guarantee off an exact-mode record.
pub fn theorem_ledger(record: &RunRecord) -> Result<TheoremLedger> {
    if record.eval_mode != EvalMode::Exact {
        return Err(Error::Precondition(
            "the regret ledger is only exact for exact-mode records".into(),
        ));
    }
    let t = record.rows.len();
    if t == 0 {
        return Err(Error::Empty("run record"));
    }
    let lhs = record.final_gap_mixture();
    let rhs = record.reg_pi_sum / t as f64 + record.horizon as f64 * record.reg_f.reg_f / t as f64;
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::NonFinite("regret ledger".into()));
    }
    Ok(TheoremLedger {
        lhs,
        rhs,
        holds: lhs <= rhs + LEDGER_TOL,
        ipm: record.ipm_mixture,
    })
}
