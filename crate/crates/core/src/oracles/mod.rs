//! Policy-search oracles for the outer game.
//!
//! Each round the driver hands an oracle a cost `c = -f_t` and the previous
//! policy; the oracle returns a policy that tries to maximize `-c`. Variants
//! differ only in what they may touch: the true model, real rollouts from
//! `rho`, real rollouts reset to expert states, or a learned model.

pub mod bc;
pub mod config;
pub mod filter;
pub mod fqi;
pub mod model;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use bc::bc_fit;
pub use config::{BufferMode, OracleConfig, OracleVariant, ResetSchedule};
pub use filter::filter_rollout;
pub use fqi::{fitted_q, greedy_random_ties, TransitionCounts};
pub use model::{hyper_inner, reset_steps, HyperSolution, ModelEstimate};

use crate::driver::select::box_ipm_gap;
use crate::env::{DemoSet, Environment, InteractionLedger};
use crate::error::{check_dim, Error, Result};
use crate::mdp::{
    best_response, model_tv, occupancy, OccupancyMeasure, QTable, RewardTable, TabularMdp,
    TabularPolicy,
};

/// What one oracle call produced.
#[derive(Debug, Clone)]
pub struct OracleStep {
    pub policy: TabularPolicy,
    /// The model-based variant's `E_{d_mix}[TV(M*, M^)]` after its model update,
    /// with `d_mix` the average of the new policy's and the demos' occupancies.
    pub model_tv: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DataSource {
    OnPolicy,
    Hybrid,
    Reset { hybrid: bool },
}

/// An oracle with its own RNG and whatever data it keeps between rounds.
#[derive(Debug, Clone)]
pub struct PolicyOracle {
    config: OracleConfig,
    rng: ChaCha8Rng,
    buffer: TransitionCounts,
    model: Option<ModelEstimate>,
    demo_occ: OccupancyMeasure,
    bc: TabularPolicy,
    expert: Option<TabularPolicy>,
}

impl PolicyOracle {
    pub fn new(config: OracleConfig, env: &Environment, demos: &DemoSet, seed: u64) -> Result<Self> {
        config.validate()?;
        let mdp = env.mdp();
        let (n_s, n_a, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        check_dim("demo horizon", horizon, demos.horizon())?;
        if config.variant == OracleVariant::FilterFqi && !env.supports_resets() {
            return Err(Error::Capability(format!(
                "{} needs an environment with arbitrary resets",
                config.variant
            )));
        }
        let model = if config.variant == OracleVariant::HyPer {
            let alpha = config.model_smoothing.unwrap_or(1.0 / n_s as f64);
            Some(ModelEstimate::new(n_s, n_a, alpha)?)
        } else {
            None
        };
        Ok(Self {
            bc: bc_fit(demos, n_s, n_a, config.bc_smoothing)?,
            demo_occ: demos.empirical_occupancy(n_s, n_a)?,
            buffer: TransitionCounts::new(horizon, n_s, n_a),
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            model,
            expert: None,
        })
    }

    /// Supplies the policy the `Expert` variant plays.
    pub fn with_expert(mut self, expert: TabularPolicy) -> Self {
        self.expert = Some(expert);
        self
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn model(&self) -> Option<&ModelEstimate> {
        self.model.as_ref()
    }

    /// The policy the first round warm-starts from: the cloned policy where the
    /// variant would pretrain on demos, uniform otherwise.
    pub fn initial_policy(&self, mdp: &TabularMdp) -> TabularPolicy {
        match self.config.variant {
            OracleVariant::HyQ | OracleVariant::Bc => self.bc.clone(),
            OracleVariant::Expert => self.expert.clone().unwrap_or_else(|| self.bc.clone()),
            _ => TabularPolicy::for_mdp_uniform(mdp),
        }
    }

    /// One call of the oracle at outer iteration `t` (1-based) of `total`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        env: &Environment,
        demos: &DemoSet,
        cost: &RewardTable,
        warm_start: &TabularPolicy,
        t: usize,
        total: usize,
        ledger: &mut InteractionLedger,
    ) -> Result<OracleStep> {
        let mdp = env.mdp();
        mdp_check(mdp, cost, warm_start)?;
        let policy = match self.config.variant {
            OracleVariant::BestResponse => best_response(mdp, &cost.negated())?,
            OracleVariant::Bc => self.bc.clone(),
            OracleVariant::Expert => self
                .expert
                .clone()
                .ok_or_else(|| Error::Precondition("the expert oracle needs an expert policy".into()))?,
            OracleVariant::OnPolicyFqi => self.fqi_round(env, demos, cost, warm_start, ledger, DataSource::OnPolicy)?,
            OracleVariant::HyQ => self.fqi_round(env, demos, cost, warm_start, ledger, DataSource::Hybrid)?,
            OracleVariant::FilterFqi => {
                let hybrid = self.config.filter_hybrid;
                self.fqi_round(env, demos, cost, warm_start, ledger, DataSource::Reset { hybrid })?
            }
            OracleVariant::HyPer => return self.hyper_round(env, demos, cost, warm_start, t, total, ledger),
        };
        Ok(OracleStep {
            policy,
            model_tv: None,
        })
    }

    fn fqi_round(
        &mut self,
        env: &Environment,
        demos: &DemoSet,
        cost: &RewardTable,
        warm_start: &TabularPolicy,
        ledger: &mut InteractionLedger,
        source: DataSource,
    ) -> Result<TabularPolicy> {
        if !self.config.persist_buffer {
            self.buffer = TransitionCounts::new(self.buffer.horizon(), env.mdp().num_states(), env.mdp().num_actions());
        }
        let iterates = self.fqi_inner(env, demos, cost, warm_start, ledger, source)?;
        let mdp = env.mdp();
        let mut best = 0;
        let mut best_gap = f64::INFINITY;
        for (i, (pi, _)) in iterates.iter().enumerate() {
            let gap = box_ipm_gap(mdp, pi, &self.demo_occ)?;
            if gap < best_gap {
                best_gap = gap;
                best = i;
            }
        }
        Ok(iterates.into_iter().nth(best).expect("at least one inner step").0)
    }

    fn fqi_inner(
        &mut self,
        env: &Environment,
        demos: &DemoSet,
        cost: &RewardTable,
        warm_start: &TabularPolicy,
        ledger: &mut InteractionLedger,
        source: DataSource,
    ) -> Result<Vec<(TabularPolicy, QTable)>> {
        let reward = cost.negated();
        let (b, n, eps) = (self.config.batch_size, self.config.inner_steps, self.config.exploration_eps);
        let mut pi = warm_start.clone();
        let mut out = Vec::with_capacity(n);
        let with_expert = matches!(source, DataSource::Hybrid | DataSource::Reset { hybrid: true });
        for _ in 0..n {
            if self.config.buffer == BufferMode::Fresh {
                self.buffer = TransitionCounts::new(self.buffer.horizon(), env.mdp().num_states(), env.mdp().num_actions());
            }
            let behave = pi.epsilon_mixed(eps);
            match source {
                DataSource::Reset { .. } => {
                    let batch = filter_rollout(env, demos, &behave, b, &mut self.rng, ledger)?;
                    self.buffer.add_all(&batch)?;
                }
                _ => {
                    for _ in 0..b {
                        let tr = env.rollout(&behave, &mut self.rng, ledger);
                        self.buffer.add(&tr)?;
                    }
                }
            }
            if with_expert {
                for _ in 0..b {
                    let tr = demos.sample(&mut self.rng);
                    self.buffer.add(tr)?;
                }
            }
            let q = fitted_q(&self.buffer, &reward)?;
            pi = greedy_random_ties(&q, &mut self.rng);
            out.push((pi.clone(), q));
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn hyper_round(
        &mut self,
        env: &Environment,
        demos: &DemoSet,
        cost: &RewardTable,
        warm_start: &TabularPolicy,
        t: usize,
        total: usize,
        ledger: &mut InteractionLedger,
    ) -> Result<OracleStep> {
        let mdp = env.mdp();
        let b = self.config.batch_size;
        let behave = warm_start.epsilon_mixed(self.config.exploration_eps);
        let mut fresh = Vec::with_capacity(2 * b);
        for _ in 0..b {
            fresh.push(env.rollout(&behave, &mut self.rng, ledger));
        }
        for _ in 0..b {
            fresh.push(demos.sample(&mut self.rng).clone());
        }
        let model = self.model.as_mut().expect("model-based oracles carry a model");
        model.update(&fresh)?;
        let kernel = model.kernel(mdp.horizon())?;
        let before = ledger.real_env_transitions;
        let steps = reset_steps(self.config.reset_schedule, mdp.horizon(), t, total)?;
        let sol = hyper_inner(&kernel, cost, warm_start, &steps)?;
        ledger.model_transitions += sol.model_transitions;
        debug_assert_eq!(ledger.real_env_transitions, before);
        let mix = occupancy(mdp, &sol.policy)?.mix(&self.demo_occ, 0.5)?;
        Ok(OracleStep {
            model_tv: Some(model_tv(mdp, &kernel, &mix)?),
            policy: sol.policy,
        })
    }
}

fn mdp_check(mdp: &TabularMdp, cost: &RewardTable, warm_start: &TabularPolicy) -> Result<()> {
    check_dim("cost states", mdp.num_states(), cost.num_states())?;
    check_dim("cost actions", mdp.num_actions(), cost.num_actions())?;
    check_dim("warm start horizon", mdp.horizon(), warm_start.horizon())?;
    check_dim("warm start states", mdp.num_states(), warm_start.num_states())?;
    check_dim("warm start actions", mdp.num_actions(), warm_start.num_actions())
}

/// The hybrid fitted-Q inner loop run from empty buffers: `N` rounds of `B`
/// learner rollouts plus `B` expert trajectories, each followed by a regression
/// and a greedy actor. Returns every iterate for validation.
pub fn hyq_inner(
    config: &OracleConfig,
    env: &Environment,
    demos: &DemoSet,
    cost: &RewardTable,
    warm_start: &TabularPolicy,
    seed: u64,
    ledger: &mut InteractionLedger,
) -> Result<Vec<(TabularPolicy, QTable)>> {
    let mut cfg = config.clone();
    cfg.variant = OracleVariant::HyQ;
    let mut oracle = PolicyOracle::new(cfg, env, demos, seed)?;
    mdp_check(env.mdp(), cost, warm_start)?;
    oracle.fqi_inner(env, demos, cost, warm_start, ledger, DataSource::Hybrid)
}
