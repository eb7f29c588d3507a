//! Numeric identity and inequality suites on random instances. Each suite
//! reports its worst residual; inequalities report `max(0, lhs - rhs)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irl_lab_core::env::{apply_tremble, TreeRewardFamily};
use irl_lab_core::mdp::random::{random_deterministic_mdp, random_mdp, random_policy, random_q, random_reward};
use irl_lab_core::mdp::{
    best_response, occupancy, optimal_q, pdam_bound, pdam_decompose, policy_value, RewardTable, TabularMdp,
    TabularPolicy,
};
use irl_lab_core::reward::{LearningRate, LossEvaluation, RewardClass, RewardPlayer};
use irl_lab_core::Result;

use crate::brute::{best_deterministic_value, best_vertex};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    /// One line per failing case, with its residual.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn named(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            max_residual: 0.0,
            tolerance,
            failures: Vec::new(),
        }
    }

    pub fn push(&mut self, case: String, residual: f64) {
        self.record(|| case, residual);
    }

    fn record(&mut self, case: impl FnOnce() -> String, residual: f64) {
        self.cases += 1;
        // NaN residuals count as failures
        if residual.is_nan() || residual > self.tolerance {
            self.failures.push(format!("{}: residual {residual:.3e}", case()));
        }
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = residual;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.cases > 0
    }

    /// `PASS name (n cases, max residual r)` or the first failure.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} {} ({} cases, max residual {:.3e}, tolerance {:.0e})",
            self.name, self.cases, self.max_residual, self.tolerance
        );
        if let Some(f) = self.failures.first() {
            s.push_str(&format!("; {} failing, first: {f}", self.failures.len()));
        }
        s
    }
}

pub const IDENTITY_TOL: f64 = 1e-9;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `E_{s0, a ~ pi_0}[Q_0] - J(pi, r) = sum_h E_{d_h}[Q_h - T^pi_r Q_{h+1}]` for an
/// arbitrary `Q`, with the Bellman operator written out here.
pub fn policy_evaluation_identity(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::named("policy evaluation identity", IDENTITY_TOL);
    let mut rng = rng(seed);
    for case in 0..cases {
        let (n_s, n_a, h) = (rng.random_range(1..=12), rng.random_range(1..=5), rng.random_range(1..=10));
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        let pi = random_policy(h, n_s, n_a, &mut rng);
        let r = random_reward(n_s, n_a, &mut rng);
        let q = random_q(h, n_s, n_a, 5.0, &mut rng);

        let lhs = (0..n_s)
            .map(|s| {
                let row: f64 = (0..n_a).map(|a| pi.prob(0, s, a) * q.at(0, s, a)).sum();
                mdp.initial_dist()[s] * row
            })
            .sum::<f64>()
            - policy_value(&mdp, &pi, &r)?;

        let d = occupancy(&mdp, &pi)?;
        let mut rhs = 0.0;
        for step in 0..h {
            for s in 0..n_s {
                for a in 0..n_a {
                    let cont: f64 = if step + 1 < h {
                        mdp.row(s, a)
                            .iter()
                            .enumerate()
                            .map(|(s2, t)| t * (0..n_a).map(|a2| pi.prob(step + 1, s2, a2) * q.at(step + 1, s2, a2)).sum::<f64>())
                            .sum()
                    } else {
                        0.0
                    };
                    rhs += d.at(step, s, a) * (q.at(step, s, a) - r.get(s, a) - cont);
                }
            }
        }
        rep.record(|| format!("case {case} (S={n_s}, A={n_a}, H={h})"), (lhs - rhs).abs());
    }
    Ok(rep)
}

/// True MDP, model, expert, learner and reward. The model mixes the true
/// kernel with a random one at a random weight, sharing the initial law.
fn pdam_instance(rng: &mut ChaCha8Rng) -> (TabularMdp, TabularMdp, TabularPolicy, TabularPolicy, RewardTable) {
    let (n_s, n_a, h) = (rng.random_range(1..=8), rng.random_range(1..=4), rng.random_range(1..=8));
    let truth = random_mdp(n_s, n_a, h, rng);
    let other = random_mdp(n_s, n_a, h, rng);
    let lambda = [0.0, 0.01, 0.1, 0.5, 1.0][rng.random_range(0..5)];
    let model = TabularMdp::from_rows(n_s, n_a, h, truth.initial_dist().to_vec(), |s, a| {
        truth.row(s, a).iter().zip(other.row(s, a)).map(|(t, o)| (1.0 - lambda) * t + lambda * o).collect()
    })
    .expect("convex combination of kernels");
    let expert = random_policy(h, n_s, n_a, rng);
    let learner = random_policy(h, n_s, n_a, rng);
    let r = random_reward(n_s, n_a, rng);
    (truth, model, expert, learner, r)
}

/// The three-term decomposition sums to the performance difference.
pub fn pdam_identity(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::named("performance difference via advantage in model", IDENTITY_TOL);
    let mut rng = rng(seed);
    for case in 0..cases {
        let (truth, model, expert, learner, r) = pdam_instance(&mut rng);
        let terms = pdam_decompose(&truth, &model, &expert, &learner, &r)?;
        let diff = policy_value(&truth, &expert, &r)? - policy_value(&truth, &learner, &r)?;
        rep.record(|| format!("case {case}"), (terms.total() - diff).abs());
    }
    Ok(rep)
}

/// The advantage-plus-model-error bound, in both its `2 H^2` and its
/// span-weighted form.
pub fn model_error_bound(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::named("advantage plus model error bound", IDENTITY_TOL);
    let mut rng = rng(seed);
    for case in 0..cases {
        let (truth, model, expert, learner, r) = pdam_instance(&mut rng);
        let b = pdam_bound(&truth, &model, &expert, &learner, &r)?;
        rep.record(|| format!("case {case} (2H^2 form)"), (b.lhs - b.rhs).max(0.0));
        rep.record(|| format!("case {case} (weighted form)"), (b.lhs - b.weighted_rhs).max(0.0));
    }
    // a model that is maximally wrong everywhere
    for case in 0..cases.min(20) {
        let (n_s, n_a, h) = (rng.random_range(2..=6), rng.random_range(1..=3), rng.random_range(1..=6));
        let shift = rng.random_range(1..n_s);
        let truth = random_deterministic_mdp(n_s, n_a, h, &mut rng);
        let model = TabularMdp::from_rows(n_s, n_a, h, truth.initial_dist().to_vec(), |s, a| {
            let target = truth.row(s, a).iter().position(|&p| p == 1.0).expect("point mass");
            let mut row = vec![0.0; n_s];
            row[(target + shift) % n_s] = 1.0;
            row
        })?;
        let expert = random_policy(h, n_s, n_a, &mut rng);
        let learner = random_policy(h, n_s, n_a, &mut rng);
        let r = random_reward(n_s, n_a, &mut rng);
        let b = pdam_bound(&truth, &model, &expert, &learner, &r)?;
        rep.record(|| format!("disjoint case {case} (2H^2 form)"), (b.lhs - b.rhs).max(0.0));
        rep.record(|| format!("disjoint case {case} (weighted form)"), (b.lhs - b.weighted_rhs).max(0.0));
    }
    Ok(rep)
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn scale_to_l1(mut v: Vec<f64>, target: f64) -> Vec<f64> {
    let n = l1(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x *= target / n);
    }
    v
}

/// Gradient sequence `kind` for a player over the box: loss gradients from
/// random occupancy pairs, a greedy adversary, sign alternation, or a fixed
/// direction with noise. Every gradient has L1 norm at most 2.
fn adversarial_gradient(kind: usize, t: usize, f: &RewardTable, fixed: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = fixed.len();
    match kind {
        0 => {
            let a: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let (na, nb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
            a.iter().zip(&b).map(|(x, y)| x / na - y / nb).collect()
        }
        1 => {
            // push where the player has committed the most
            let v = f.values();
            let i = (0..dim).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
            let mut g = vec![0.0; dim];
            g[i] = if v[i] >= 0.0 { 2.0 } else { -2.0 };
            g
        }
        2 => {
            let sign = if t.is_multiple_of(2) { 1.0 } else { -1.0 };
            fixed.iter().map(|x| sign * x).collect()
        }
        _ => {
            let noisy: Vec<f64> = fixed.iter().map(|x| x + rng.random_range(-0.3..0.3)).collect();
            scale_to_l1(noisy, 2.0)
        }
    }
}

/// OGD with `eta = D / (G sqrt T)` on adversarial sequences stays below
/// `D G sqrt T`, and the hindsight comparator equals vertex enumeration.
pub fn ogd_regret(sequences: usize, iterations: usize, seed: u64) -> Result<(SuiteReport, SuiteReport)> {
    let mut bound_rep = SuiteReport::named("online gradient descent regret bound", 0.0);
    let mut cmp_rep = SuiteReport::named("hindsight comparator", IDENTITY_TOL);
    let mut rng = rng(seed);
    for seq in 0..sequences {
        let (n_s, n_a) = loop {
            let (s, a) = (rng.random_range(1..=6), rng.random_range(1..=3));
            if s * a <= 12 {
                break (s, a);
            }
        };
        let class = RewardClass::full_box(n_s, n_a);
        let dim = n_s * n_a;
        let fixed = scale_to_l1((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(), 2.0);
        let kind = seq % 4;
        let mut player = RewardPlayer::new(class.clone(), LearningRate::horizon_tuned(&class, iterations))?;
        for t in 0..iterations {
            let g = adversarial_gradient(kind, t, player.current(), &fixed, &mut rng);
            debug_assert!(l1(&g) <= 2.0 + 1e-12);
            let loss = LossEvaluation {
                loss_value: g.iter().zip(player.current().values()).map(|(a, b)| a * b).sum(),
                gradient: g,
            };
            player.ogd_step(&loss)?;
        }
        let summary = player.regret()?;
        let bound = class.diameter() * class.gradient_bound() * (iterations as f64).sqrt();
        bound_rep.record(|| format!("sequence {seq} (kind {kind}, S={n_s}, A={n_a}, bound {bound:.4})"), (summary.reg_f - bound).max(0.0));

        let (brute_loss, _) = best_vertex(&class, player.gradient_history()).expect("small box");
        cmp_rep.record(|| format!("sequence {seq}"), (summary.comparator_loss - brute_loss).abs());
        let brute_reg = summary.cumulative_loss - brute_loss;
        cmp_rep.record(|| format!("sequence {seq} (regret)"), (summary.reg_f - brute_reg).abs());
    }
    // family players compare against the best member
    for (k, depth) in [2usize, 3, 4].into_iter().enumerate() {
        let family = TreeRewardFamily::new(depth, k % 2 == 1);
        let class = RewardClass::family(family.members())?;
        let dim = class.num_states() * class.num_actions();
        let fixed = scale_to_l1((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(), 2.0);
        let mut player = RewardPlayer::new(class.clone(), LearningRate::default_for(&class))?;
        for t in 0..iterations {
            let g = adversarial_gradient(t % 4, t, player.current(), &fixed, &mut rng);
            let loss = LossEvaluation {
                loss_value: g.iter().zip(player.current().values()).map(|(a, b)| a * b).sum(),
                gradient: g,
            };
            player.ogd_step(&loss)?;
        }
        let summary = player.regret()?;
        let (brute_loss, _) = best_vertex(&class, player.gradient_history()).expect("family");
        cmp_rep.record(|| format!("tree family depth {depth}"), (summary.comparator_loss - brute_loss).abs());
    }
    Ok((bound_rep, cmp_rep))
}

/// Trembled rows are the convex combination of the clean row and the
/// uniform-action average, and stay stochastic.
pub fn tremble_linearity(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::named("tremble linearity", 1e-12);
    let mut rng = rng(seed);
    for case in 0..cases {
        let (n_s, n_a) = (rng.random_range(1..=10), rng.random_range(1..=5));
        let mdp = random_mdp(n_s, n_a, 3, &mut rng);
        let p = if case == 0 { 0.0 } else { rng.random_range(0.0..1.0) };
        let trembled = apply_tremble(&mdp, p)?;
        let mut worst = 0.0f64;
        for s in 0..n_s {
            let avg: Vec<f64> = (0..n_s)
                .map(|s2| (0..n_a).map(|a| mdp.row(s, a)[s2]).sum::<f64>() / n_a as f64)
                .collect();
            for a in 0..n_a {
                let row = trembled.row(s, a);
                for s2 in 0..n_s {
                    let want = (1.0 - p) * mdp.row(s, a)[s2] + p * avg[s2];
                    worst = worst.max((row[s2] - want).abs());
                }
                worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            }
        }
        rep.record(|| format!("case {case} (p={p:.3})"), worst);
    }
    Ok(rep)
}

/// Occupancy layers are distributions, obey flow conservation, and pair with
/// rewards to give the dynamic-programming value.
pub fn occupancy_consistency(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::named("occupancy consistency", IDENTITY_TOL);
    let mut rng = rng(seed);
    for case in 0..cases {
        let (n_s, n_a, h) = (rng.random_range(1..=12), rng.random_range(1..=5), rng.random_range(1..=10));
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        let pi = random_policy(h, n_s, n_a, &mut rng);
        let r = random_reward(n_s, n_a, &mut rng);
        let d = occupancy(&mdp, &pi)?;
        let mut worst = (d.value(&r)? - policy_value(&mdp, &pi, &r)?).abs();
        for step in 0..h {
            worst = worst.max((d.slice(step).iter().sum::<f64>() - 1.0).abs());
            let marginal: Vec<f64> = if step == 0 {
                mdp.initial_dist().to_vec()
            } else {
                (0..n_s)
                    .map(|s2| {
                        (0..n_s)
                            .flat_map(|s| (0..n_a).map(move |a| (s, a)))
                            .map(|(s, a)| d.at(step - 1, s, a) * mdp.row(s, a)[s2])
                            .sum()
                    })
                    .collect()
            };
            for s in 0..n_s {
                for a in 0..n_a {
                    worst = worst.max((d.at(step, s, a) - marginal[s] * pi.prob(step, s, a)).abs());
                }
            }
        }
        rep.record(|| format!("case {case}"), worst);
    }
    Ok(rep)
}

pub const ENUMERATION_TOL: f64 = 1e-12;

/// The dynamic-programming best response matches exhaustive search over
/// deterministic policies on every shape with `S <= max_states`,
/// `A <= max_actions`, `H <= max_horizon`.
pub fn best_response_enumeration(
    max_states: usize,
    max_actions: usize,
    max_horizon: usize,
    per_shape: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::named("best response equals enumeration", ENUMERATION_TOL);
    let mut rng = rng(seed);
    for n_s in 1..=max_states {
        for n_a in 1..=max_actions {
            for h in 1..=max_horizon {
                for k in 0..per_shape {
                    let mdp = if k % 2 == 0 {
                        random_mdp(n_s, n_a, h, &mut rng)
                    } else {
                        random_deterministic_mdp(n_s, n_a, h, &mut rng)
                    };
                    let r = random_reward(n_s, n_a, &mut rng);
                    rep.record(
                        || format!("S={n_s}, A={n_a}, H={h}, instance {k}"),
                        best_response_residual(&mdp, &r)?.expect("within the enumeration budget"),
                    );
                }
            }
        }
    }
    Ok(rep)
}

/// `|J(best_response) - max_pi J(pi)|`, also checking the optimal Q's value,
/// or `None` if the instance is too large to enumerate.
pub fn best_response_residual(mdp: &TabularMdp, r: &RewardTable) -> Result<Option<f64>> {
    let Some(brute) = best_deterministic_value(mdp, r) else {
        return Ok(None);
    };
    let br = policy_value(mdp, &best_response(mdp, r)?, r)?;
    let q = optimal_q(mdp, r)?;
    let v0: f64 = (0..mdp.num_states())
        .map(|s| {
            let row = &q.slice(0)[s * mdp.num_actions()..(s + 1) * mdp.num_actions()];
            mdp.initial_dist()[s] * row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    Ok(Some((br - brute).abs().max((v0 - brute).abs())))
}

/// The suites `irl-lab verify` runs, at their acceptance sizes.
pub fn identity_suites() -> Result<Vec<SuiteReport>> {
    let (regret, comparator) = ogd_regret(50, 100, 4)?;
    Ok(vec![
        policy_evaluation_identity(200, 1)?,
        pdam_identity(100, 2)?,
        model_error_bound(100, 3)?,
        regret,
        comparator,
        tremble_linearity(100, 5)?,
        occupancy_consistency(100, 6)?,
    ])
}
