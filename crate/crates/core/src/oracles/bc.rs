use crate::env::DemoSet;
use crate::error::{Error, Result};
use crate::mdp::TabularPolicy;

/// Smoothed maximum-likelihood cloning: `pi_h(a|s) ∝ count_h(s, a) + smoothing`,
/// uniform where the demos never visit `(h, s)`.
pub fn bc_fit(demos: &DemoSet, num_states: usize, num_actions: usize, smoothing: f64) -> Result<TabularPolicy> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::Range {
            field: "bc_smoothing",
            value: smoothing,
            reason: "must be finite and non-negative",
        });
    }
    let horizon = demos.horizon();
    let mut counts = vec![0.0; horizon * num_states * num_actions];
    for t in demos.trajectories() {
        t.validate(horizon, num_states, num_actions)?;
        for st in &t.steps {
            counts[(st.h * num_states + st.state) * num_actions + st.action] += 1.0;
        }
    }
    for row in counts.chunks_mut(num_actions) {
        let total: f64 = row.iter().sum();
        if total == 0.0 {
            row.iter_mut().for_each(|p| *p = 1.0 / num_actions as f64);
        } else {
            let denom = total + smoothing * num_actions as f64;
            row.iter_mut().for_each(|p| *p = (*p + smoothing) / denom);
        }
    }
    TabularPolicy::new(horizon, num_states, num_actions, counts)
}
