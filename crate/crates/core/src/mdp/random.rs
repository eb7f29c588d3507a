//! Random instance generators for property tests and verification suites.

use rand::Rng;

use super::{QTable, RewardTable, TabularMdp, TabularPolicy};

/// A random point of the simplex. Roughly a third of the rows are sparse so
/// that generated instances include unreachable states and deterministic moves.
pub fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let sparse = n > 1 && rng.random_bool(0.3);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.random_bool(0.6) {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        let i = rng.random_range(0..n);
        w.iter_mut().for_each(|x| *x = 0.0);
        w[i] = 1.0;
        return w;
    }
    w.iter_mut().for_each(|x| *x /= total);
    renormalize(&mut w);
    w
}

/// Pushes the rounding residual onto the largest entry so the row sums to one
/// well inside the validation tolerance.
fn renormalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    let (imax, _) = w
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    w[imax] += 1.0 - total;
}

pub fn random_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> TabularMdp {
    let initial = random_distribution(num_states, rng);
    TabularMdp::from_rows(num_states, num_actions, horizon, initial, |_, _| {
        random_distribution(num_states, rng)
    })
    .expect("generated rows are distributions")
}

/// A random MDP with each transition row a point mass.
pub fn random_deterministic_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> TabularMdp {
    let mut initial = vec![0.0; num_states];
    initial[rng.random_range(0..num_states)] = 1.0;
    TabularMdp::from_rows(num_states, num_actions, horizon, initial, |_, _| {
        let mut row = vec![0.0; num_states];
        row[rng.random_range(0..num_states)] = 1.0;
        row
    })
    .expect("point masses are distributions")
}

pub fn random_policy<R: Rng + ?Sized>(
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    rng: &mut R,
) -> TabularPolicy {
    let mut probs = Vec::with_capacity(horizon * num_states * num_actions);
    for _ in 0..horizon * num_states {
        probs.extend(random_distribution(num_actions, rng));
    }
    TabularPolicy::new(horizon, num_states, num_actions, probs)
        .expect("generated rows are distributions")
}

/// Uniform on the box `[-1, 1]^{S x A}`.
pub fn random_reward<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    rng: &mut R,
) -> RewardTable {
    let values = (0..num_states * num_actions)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    RewardTable::new(num_states, num_actions, values).expect("inside the box")
}

/// An arbitrary Q-table with entries in `[-scale, scale]`.
pub fn random_q<R: Rng + ?Sized>(
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    scale: f64,
    rng: &mut R,
) -> QTable {
    let q = (0..horizon * num_states * num_actions)
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    QTable::new(horizon, num_states, num_actions, q).expect("finite")
}
