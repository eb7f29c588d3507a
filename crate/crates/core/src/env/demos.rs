use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sim::sample_trajectory;
use crate::error::{check_dim, Error, Result};
use crate::mdp::{OccupancyMeasure, TabularMdp, TabularPolicy, Trajectory, TrajectorySource};

/// Expert demonstrations, indexed by timestep for resets.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    horizon: usize,
    trajectories: Vec<Trajectory>,
    by_step: Vec<Vec<usize>>,
}

impl DemoSet {
    /// Every trajectory must be full-length.
    pub fn new(trajectories: Vec<Trajectory>, horizon: usize) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::Empty("demo set"));
        }
        let mut by_step = vec![Vec::with_capacity(trajectories.len()); horizon];
        for t in &trajectories {
            check_dim("demo length", horizon, t.len())?;
            for (h, st) in t.steps.iter().enumerate() {
                check_dim("demo timestep", h, st.h)?;
                by_step[h].push(st.state);
            }
        }
        Ok(Self {
            horizon,
            trajectories,
            by_step,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    /// The multiset of expert states at timestep `h`.
    pub fn states_at(&self, h: usize) -> &[usize] {
        &self.by_step[h]
    }

    /// A `(h, s_h)` pair uniform over all demo state-time pairs.
    pub fn sample_reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let h = rng.random_range(0..self.horizon);
        let states = &self.by_step[h];
        (h, states[rng.random_range(0..states.len())])
    }

    /// A demo sampled uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Trajectory {
        &self.trajectories[rng.random_range(0..self.trajectories.len())]
    }

    pub fn empirical_occupancy(&self, num_states: usize, num_actions: usize) -> Result<OccupancyMeasure> {
        OccupancyMeasure::empirical(&self.trajectories, self.horizon, num_states, num_actions)
    }
}

/// `n` expert rollouts from `rho`, reproducible from `seed`.
pub fn generate_demos(mdp: &TabularMdp, expert: &TabularPolicy, n: usize, seed: u64) -> Result<DemoSet> {
    if n == 0 {
        return Err(Error::Precondition("at least one demonstration is required".into()));
    }
    check_dim("expert horizon", mdp.horizon(), expert.horizon())?;
    check_dim("expert states", mdp.num_states(), expert.num_states())?;
    check_dim("expert actions", mdp.num_actions(), expert.num_actions())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajs = (0..n)
        .map(|_| {
            let s0 = mdp.sample_initial(&mut rng);
            sample_trajectory(mdp, expert, 0, s0, TrajectorySource::Expert, &mut rng)
        })
        .collect();
    DemoSet::new(trajs, mdp.horizon())
}
