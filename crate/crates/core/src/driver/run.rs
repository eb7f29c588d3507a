use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{generate_demos, InteractionLedger};
use crate::error::{Error, Result};
use crate::mdp::{occupancy, policy_value, OccupancyMeasure};
use crate::oracles::PolicyOracle;
use crate::reward::{evaluate_loss, LearningRate, RegretTracker, RewardPlayer};

use super::config::{build_env, EvalMode, ExpertOccupancy, RunConfig};
use super::mixture::build_mixture;
use super::record::{RunRecord, RunRow};
use super::select::box_ipm_gap;

/// Independent streams derived from the run seed.
fn stream(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_finite(t: usize, what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} at iteration {t}")))
    }
}

/// Plays `T` rounds of reward player against oracle.
///
/// Each round: the oracle answers the current reward `f_t` (as cost `-f_t`),
/// the exact gap and loss of its policy are recorded, and the player takes a
/// gradient step on the loss it observes.
pub fn run_irl(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let built = build_env(&config.env, config.reset_access)?;
    let mdp = built.mdp();
    let (n_s, n_a, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let total = config.outer_iters;

    let demos = generate_demos(mdp, &built.expert, config.demo_count, stream(config.seed, 1))?;
    let demo_occ = demos.empirical_occupancy(n_s, n_a)?;
    let expert_occ = occupancy(mdp, &built.expert)?;
    let player_expert = match config.player_expert {
        ExpertOccupancy::Demos => demo_occ.clone(),
        ExpertOccupancy::Exact => expert_occ.clone(),
    };

    let lr = config
        .reward_lr
        .unwrap_or_else(|| LearningRate::default_for(&built.class));
    let mut player = RewardPlayer::new(built.class.clone(), lr)?;
    let mut tracker = RegretTracker::new(built.class.clone());
    let mut oracle = PolicyOracle::new(config.oracle.clone(), &built.env, &demos, stream(config.seed, 2))?
        .with_expert(built.expert.clone());
    let mut eval_rng = ChaCha8Rng::seed_from_u64(stream(config.seed, 3));

    let r = &built.ground_truth;
    let j_expert = policy_value(mdp, &built.expert, r)?;
    let mut ledger = InteractionLedger::default();
    let mut warm = oracle.initial_policy(mdp);
    let mut rows = Vec::with_capacity(total);
    let mut policies = Vec::with_capacity(total);
    let mut reg_pi = 0.0;
    let mut j_sum = 0.0;
    let mut best_index = 0;
    let mut best_val_gap = f64::INFINITY;
    let mut best_j = f64::NAN;

    for t in 1..=total {
        let f_t = player.current().clone();
        let cost = f_t.negated();
        let step = oracle.step(&built.env, &demos, &cost, &warm, t, total, &mut ledger)?;
        let pi = step.policy;
        let d_pi = occupancy(mdp, &pi)?;

        let exact = evaluate_loss(&f_t, &d_pi, &expert_occ)?;
        tracker.push(&exact.gradient, &f_t)?;
        let gap = check_finite(t, "gap", expert_occ.value(&f_t)? - d_pi.value(&f_t)?)?;
        reg_pi += gap;

        let observed = match config.eval_mode {
            EvalMode::Exact => evaluate_loss(&f_t, &d_pi, &player_expert)?,
            EvalMode::Sampled => {
                let trajs: Vec<_> = (0..config.eval_rollouts)
                    .map(|_| built.env.rollout(&pi, &mut eval_rng, &mut ledger))
                    .collect();
                let d_hat = OccupancyMeasure::empirical(&trajs, horizon, n_s, n_a)?;
                evaluate_loss(&f_t, &d_hat, &player_expert)?
            }
        };
        player.ogd_step(&observed)?;

        let j_learner = check_finite(t, "learner value", policy_value(mdp, &pi, r)?)?;
        j_sum += j_learner;
        let val_gap = box_ipm_gap(mdp, &pi, &demo_occ)?;
        if val_gap < best_val_gap {
            best_val_gap = val_gap;
            best_index = t - 1;
            best_j = j_learner;
        }
        let reg_f = tracker.summary()?.reg_f;
        rows.push(RunRow {
            t,
            ledger,
            j_learner,
            j_expert,
            gap_ft: gap,
            loss_ft: check_finite(t, "loss", exact.loss_value)?,
            reg_pi_running: reg_pi,
            reg_f_running: check_finite(t, "reward regret", reg_f)?,
            model_tv: step.model_tv,
            gap_best: j_expert - best_j,
            gap_mixture: j_expert - j_sum / t as f64,
        });
        policies.push(pi.clone());
        warm = pi;
    }

    let reg_f = tracker.summary()?;
    let mixture = build_mixture(policies.clone())?;
    let ipm_mixture = expert_occ.value(&reg_f.comparator)? - mixture.value(mdp, &reg_f.comparator)?;
    let class = player.class();
    Ok(RunRecord {
        run_id: config.run_id.clone(),
        seed: config.seed,
        variant: config.oracle.variant,
        horizon,
        eval_mode: config.eval_mode,
        rows,
        policies,
        mixture,
        best_index,
        reg_pi_sum: reg_pi,
        reg_f,
        player_reg_f: player.regret()?.reg_f,
        player_reg_bound: lr.regret_bound(total, class.diameter(), class.gradient_bound()),
        j_expert,
        ipm_mixture,
        final_ledger: ledger,
    })
}
