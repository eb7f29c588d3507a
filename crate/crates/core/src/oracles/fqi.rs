//! Tabular fitted-Q iteration on reward-free transition data.
//!
//! The regression target at a visited `(h, s, a)` is the empirical mean of
//! `f(s, a) + max_a' Q_{h+1}(s', a')`, which is exactly what a tabular least
//! squares fit produces. Unvisited cells are pinned to `-(H - h)`, the lowest
//! return any box reward can produce from step `h`.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::mdp::{QTable, RewardTable, TabularPolicy, Trajectory};

/// Time-indexed transition counts `n[h][s][a][s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    next: Vec<u32>,
    visits: Vec<u32>,
}

impl TransitionCounts {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            next: vec![0; horizon * num_states * num_actions * num_states],
            visits: vec![0; horizon * num_states * num_actions],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn add(&mut self, traj: &Trajectory) -> Result<()> {
        for (h, s, a, s2) in traj.transitions() {
            if h >= self.horizon || s >= self.num_states || a >= self.num_actions || s2 >= self.num_states {
                return Err(Error::IndexOutOfRange {
                    what: "transition",
                    index: h.max(s).max(a).max(s2),
                    size: self.num_states.max(self.horizon),
                });
            }
            let cell = (h * self.num_states + s) * self.num_actions + a;
            self.visits[cell] += 1;
            self.next[cell * self.num_states + s2] += 1;
        }
        Ok(())
    }

    pub fn add_all<'a>(&mut self, trajs: impl IntoIterator<Item = &'a Trajectory>) -> Result<()> {
        for t in trajs {
            self.add(t)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &TransitionCounts) -> Result<()> {
        check_dim("count table", self.next.len(), other.next.len())?;
        for (a, b) in self.next.iter_mut().zip(&other.next) {
            *a += b;
        }
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
        Ok(())
    }

    pub fn visits(&self, h: usize, s: usize, a: usize) -> u32 {
        self.visits[(h * self.num_states + s) * self.num_actions + a]
    }

    pub fn total(&self) -> u64 {
        self.visits.iter().map(|&v| v as u64).sum()
    }
}

/// Fits `Q` to `reward` (relabeled on read) by backward regression.
pub fn fitted_q(counts: &TransitionCounts, reward: &RewardTable) -> Result<QTable> {
    let (n_h, n_s, n_a) = (counts.horizon, counts.num_states, counts.num_actions);
    check_dim("reward states", n_s, reward.num_states())?;
    check_dim("reward actions", n_a, reward.num_actions())?;
    let mut q = vec![0.0; n_h * n_s * n_a];
    let mut v_next = vec![0.0; n_s];
    for h in (0..n_h).rev() {
        let pessimistic = -((n_h - h) as f64);
        for s in 0..n_s {
            for a in 0..n_a {
                let cell = (h * n_s + s) * n_a + a;
                let n = counts.visits[cell];
                q[cell] = if n == 0 {
                    pessimistic
                } else {
                    let row = &counts.next[cell * n_s..(cell + 1) * n_s];
                    let cont: f64 = if h + 1 == n_h {
                        0.0
                    } else {
                        row.iter()
                            .zip(&v_next)
                            .filter(|(c, _)| **c != 0)
                            .map(|(c, v)| *c as f64 * v)
                            .sum::<f64>()
                            / n as f64
                    };
                    reward.get(s, a) + cont
                };
            }
        }
        for s in 0..n_s {
            let start = (h * n_s + s) * n_a;
            v_next[s] = q[start..start + n_a].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    QTable::new(n_h, n_s, n_a, q)
}

/// Greedy policy with ties broken uniformly at random.
///
/// Lowest-index tie-breaking would systematically favour action `0`, which on
/// the tree is the expert's action; random ties keep the sample-based learners
/// honest.
pub fn greedy_random_ties<R: Rng + ?Sized>(q: &QTable, rng: &mut R) -> TabularPolicy {
    let (n_h, n_s, n_a) = (q.horizon(), q.num_states(), q.num_actions());
    let mut ties = Vec::with_capacity(n_a);
    TabularPolicy::deterministic(n_h, n_s, n_a, |h, s| {
        let row = &q.slice(h)[s * n_a..(s + 1) * n_a];
        let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ties.clear();
        ties.extend((0..n_a).filter(|&a| row[a] == best));
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..ties.len())]
        }
    })
    .expect("greedy actions are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_tree, generate_demos};
    use crate::mdp::{optimal_q, Step, TrajectorySource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unvisited_cells_are_pessimistic() {
        let c = TransitionCounts::new(3, 2, 2);
        let q = fitted_q(&c, &RewardTable::zeros(2, 2)).unwrap();
        assert_eq!(q.slice(0), &[-3.0; 4]);
        assert_eq!(q.slice(2), &[-1.0; 4]);
    }

    #[test]
    fn full_coverage_of_deterministic_env_recovers_optimal_q() {
        let t = build_tree(3).unwrap();
        let mut c = TransitionCounts::new(3, 15, 2);
        // every (h, s, a) the tree can reach
        for path in 0..8usize {
            let mut s = 0;
            let mut steps = vec![];
            for h in 0..3 {
                let a = (path >> (2 - h)) & 1;
                steps.push(Step { h, state: s, action: a });
                s = 2 * s + 1 + a;
            }
            c.add(&Trajectory { steps, final_state: s, source: TrajectorySource::Learner })
                .unwrap();
        }
        let f = t.family.member(5).unwrap();
        let fitted = fitted_q(&c, &f).unwrap();
        let exact = optimal_q(&t.mdp, &f).unwrap();
        for h in 0..3 {
            let reachable = (1usize << h) - 1..(1usize << (h + 1)) - 1;
            for s in reachable {
                for a in 0..2 {
                    assert_eq!(fitted.at(h, s, a), exact.at(h, s, a));
                }
            }
        }
    }

    #[test]
    fn counts_are_order_insensitive() {
        let t = build_tree(2).unwrap();
        let d = generate_demos(&t.mdp, &t.expert, 3, 0).unwrap();
        let mut a = TransitionCounts::new(2, 7, 2);
        let mut b = TransitionCounts::new(2, 7, 2);
        a.add_all(d.trajectories()).unwrap();
        b.add_all(d.trajectories().iter().rev()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 6);
        assert_eq!(a.visits(1, 1, 0), 3);
    }

    #[test]
    fn random_ties_cover_all_maximizers() {
        let q = QTable::new(1, 1, 3, vec![1.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [0; 3];
        for _ in 0..200 {
            seen[greedy_random_ties(&q, &mut rng).deterministic_action(0, 0).unwrap()] += 1;
        }
        assert_eq!(seen[1], 0);
        assert!(seen[0] > 50 && seen[2] > 50);
    }
}
