use crate::env::DemoSet;
use crate::error::{Error, Result};
use crate::mdp::{occupancy, OccupancyMeasure, TabularMdp, TabularPolicy};

/// `max_{f in box} [<d_ref, f> - J(pi, f)]` for state-action rewards: the L1
/// norm of the time-summed occupancy difference.
pub fn box_ipm_gap(mdp: &TabularMdp, policy: &TabularPolicy, reference: &OccupancyMeasure) -> Result<f64> {
    let d = occupancy(mdp, policy)?;
    d.check_same_shape(reference)?;
    Ok(d.summed_over_time()
        .iter()
        .zip(reference.summed_over_time())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Index of the policy closest to the held-out demos in box-IPM gap, ties to
/// the lowest index.
pub fn select_best(policies: &[TabularPolicy], heldout: &DemoSet, mdp: &TabularMdp) -> Result<usize> {
    if policies.is_empty() {
        return Err(Error::Empty("policy list"));
    }
    let reference = heldout.empirical_occupancy(mdp.num_states(), mdp.num_actions())?;
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (i, p) in policies.iter().enumerate() {
        let g = box_ipm_gap(mdp, p, &reference)?;
        if g < best_gap {
            best = i;
            best_gap = g;
        }
    }
    Ok(best)
}
