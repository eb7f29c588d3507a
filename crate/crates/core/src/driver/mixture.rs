use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{policy_value, RewardTable, TabularMdp, TabularPolicy};

/// Uniform trajectory-level mixture: one component is drawn per episode and
/// followed throughout, so values average linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy {
    components: Vec<TabularPolicy>,
}

pub fn build_mixture(policies: Vec<TabularPolicy>) -> Result<MixturePolicy> {
    let first = policies.first().ok_or(Error::Empty("mixture components"))?;
    if !policies.iter().all(|p| p.same_shape(first)) {
        return Err(Error::Precondition("mixture components differ in shape".into()));
    }
    Ok(MixturePolicy { components: policies })
}

impl MixturePolicy {
    pub fn components(&self) -> &[TabularPolicy] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `(1/T) sum_t J(pi_t, f)`.
    pub fn value(&self, mdp: &TabularMdp, reward: &RewardTable) -> Result<f64> {
        let mut total = 0.0;
        for p in &self.components {
            total += policy_value(mdp, p, reward)?;
        }
        Ok(total / self.components.len() as f64)
    }

    /// The component to follow for one episode.
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> &TabularPolicy {
        &self.components[rng.random_range(0..self.components.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::random::{random_mdp, random_policy, random_reward};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_and_pair_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_mdp(4, 2, 5, &mut rng);
        let a = random_policy(5, 4, 2, &mut rng);
        let b = random_policy(5, 4, 2, &mut rng);
        let one = build_mixture(vec![a.clone()]).unwrap();
        let two = build_mixture(vec![a.clone(), b.clone()]).unwrap();
        for _ in 0..20 {
            let f = random_reward(4, 2, &mut rng);
            let (ja, jb) = (policy_value(&m, &a, &f).unwrap(), policy_value(&m, &b, &f).unwrap());
            assert_eq!(one.value(&m, &f).unwrap(), ja);
            assert!((two.value(&m, &f).unwrap() - 0.5 * (ja + jb)).abs() < 1e-12);
        }
        assert!(build_mixture(vec![]).is_err());
        assert!(build_mixture(vec![a, random_policy(4, 4, 2, &mut rng)]).is_err());
    }
}
