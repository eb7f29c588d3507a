//! The adversary of the imitation game: a no-regret learner over rewards.

pub mod class;
pub mod player;

pub use class::{project_simplex, RewardClass};
pub use player::{
    evaluate_loss, exact_regret, LearningRate, LossEvaluation, RegretSummary, RegretTracker,
    RewardPlayer,
};
