use rand::Rng;

use crate::env::{DemoSet, Environment, InteractionLedger};
use crate::error::{Error, Result};
use crate::mdp::{TabularPolicy, Trajectory};

/// `batch` rollouts of `policy`, each reset to a `(h, s_h)` pair drawn uniformly
/// from the demonstrations and run to the end of the horizon.
pub fn filter_rollout<R: Rng + ?Sized>(
    env: &Environment,
    demos: &DemoSet,
    policy: &TabularPolicy,
    batch: usize,
    rng: &mut R,
    ledger: &mut InteractionLedger,
) -> Result<Vec<Trajectory>> {
    if !env.supports_resets() {
        return Err(Error::Capability(
            "expert-reset rollouts need an environment with arbitrary resets".into(),
        ));
    }
    (0..batch)
        .map(|_| {
            let (h, s) = demos.sample_reset(rng);
            env.rollout_from(h, s, policy, rng, ledger)
        })
        .collect()
}
