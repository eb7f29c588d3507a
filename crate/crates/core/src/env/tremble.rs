use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// Folds action noise into the kernel: with probability `p` the executed action
/// is uniform, so `T'(.|s,a) = (1 - p) T(.|s,a) + p / |A| sum_a' T(.|s,a')`.
///
/// Rewards are untouched; they stay charged to the chosen action.
pub fn apply_tremble(mdp: &TabularMdp, p: f64) -> Result<TabularMdp> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Range {
            field: "p_tremble",
            value: p,
            reason: "must lie in [0, 1)",
        });
    }
    if p == 0.0 {
        return Ok(mdp.clone());
    }
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    let mut avg = vec![0.0; n_s * n_s];
    for s in 0..n_s {
        for a in 0..n_a {
            for (o, t) in avg[s * n_s..(s + 1) * n_s].iter_mut().zip(mdp.row(s, a)) {
                *o += t / n_a as f64;
            }
        }
    }
    TabularMdp::from_rows(
        n_s,
        n_a,
        mdp.horizon(),
        mdp.initial_dist().to_vec(),
        |s, a| {
            mdp.row(s, a)
                .iter()
                .zip(&avg[s * n_s..(s + 1) * n_s])
                .map(|(t, u)| (1.0 - p) * t + p * u)
                .collect()
        },
    )
}
