use crate::env::{
    build_maze_trembled, build_tree_with_cap, Environment, MazeSpec, ResetAccess, DEFAULT_STATE_CAP,
};
use crate::error::{Error, Result};
use crate::mdp::{RewardTable, TabularMdp, TabularPolicy};
use crate::oracles::OracleConfig;
use crate::reward::{LearningRate, RewardClass};

/// Which reward class the adversary plays over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    /// All of `[-1, 1]^{S x A}`.
    Box,
    /// The convex hull of the tree's leaf-reward family.
    Family,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Tree {
        depth: usize,
        /// Defaults to the depth.
        horizon: Option<usize>,
        class: ClassKind,
        /// Include negated family members.
        negations: bool,
        state_cap: usize,
    },
    Maze {
        layout: String,
        horizon: usize,
        p_tremble: f64,
    },
}

impl EnvSpec {
    pub fn tree(depth: usize) -> Self {
        EnvSpec::Tree {
            depth,
            horizon: None,
            class: ClassKind::Family,
            negations: false,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// How the driver measures the learner for the reward player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Exact occupancies by dynamic programming.
    Exact,
    /// Empirical occupancies from `eval_rollouts` real episodes, which are
    /// charged to the interaction ledger.
    Sampled,
}

/// Which expert occupancy the reward player compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpertOccupancy {
    Demos,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run_id: String,
    pub env: EnvSpec,
    pub reset_access: bool,
    pub oracle: OracleConfig,
    pub outer_iters: usize,
    /// `None` selects `eta_t = (D / G) / sqrt(t)` for the class.
    pub reward_lr: Option<LearningRate>,
    pub demo_count: usize,
    pub seed: u64,
    pub eval_mode: EvalMode,
    pub eval_rollouts: usize,
    pub player_expert: ExpertOccupancy,
}

impl RunConfig {
    pub fn new(env: EnvSpec, oracle: OracleConfig) -> Self {
        Self {
            run_id: "run".into(),
            env,
            reset_access: false,
            oracle,
            outer_iters: 30,
            reward_lr: None,
            demo_count: 64,
            seed: 0,
            eval_mode: EvalMode::Exact,
            eval_rollouts: 64,
            player_expert: ExpertOccupancy::Demos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_iters == 0 {
            return Err(Error::Range {
                field: "outer_iters",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.demo_count == 0 {
            return Err(Error::Range {
                field: "demo_count",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.eval_mode == EvalMode::Sampled && self.eval_rollouts == 0 {
            return Err(Error::Range {
                field: "eval_rollouts",
                value: 0.0,
                reason: "sampled evaluation needs at least one rollout",
            });
        }
        if let Some(lr) = self.reward_lr {
            lr.validate()?;
        }
        self.oracle.validate()
    }
}

/// Everything a run derives from its environment spec.
#[derive(Debug, Clone)]
pub struct BuiltEnv {
    pub env: Environment,
    pub expert: TabularPolicy,
    /// The evaluation reward `r`; always a member of `class`.
    pub ground_truth: RewardTable,
    pub class: RewardClass,
}

impl BuiltEnv {
    pub fn mdp(&self) -> &TabularMdp {
        self.env.mdp()
    }
}

pub fn build_env(spec: &EnvSpec, reset_access: bool) -> Result<BuiltEnv> {
    let access = if reset_access {
        ResetAccess::Arbitrary
    } else {
        ResetAccess::InitialOnly
    };
    match spec {
        EnvSpec::Tree {
            depth,
            horizon,
            class,
            negations,
            state_cap,
        } => {
            let mut tree = build_tree_with_cap(*depth, horizon.unwrap_or(*depth), *state_cap)?;
            tree.family = crate::env::TreeRewardFamily::new(*depth, *negations);
            let ground_truth = tree.family.ground_truth();
            let class = match class {
                ClassKind::Box => RewardClass::full_box(tree.mdp.num_states(), 2),
                ClassKind::Family => RewardClass::family(tree.family.members())?,
            };
            Ok(BuiltEnv {
                env: Environment::new(tree.mdp, access),
                expert: tree.expert,
                ground_truth,
                class,
            })
        }
        EnvSpec::Maze {
            layout,
            horizon,
            p_tremble,
        } => {
            let spec = MazeSpec::parse(layout, *horizon)?;
            let maze = build_maze_trembled(&spec, *p_tremble)?;
            let class = RewardClass::full_box(maze.mdp.num_states(), maze.mdp.num_actions());
            Ok(BuiltEnv {
                env: Environment::new(maze.mdp, access),
                expert: maze.expert,
                ground_truth: maze.reward,
                class,
            })
        }
    }
}
