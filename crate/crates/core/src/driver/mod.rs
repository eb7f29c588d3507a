//! The outer imitation game: reward player against policy oracle, with an
//! exact account of both players' regret.

pub mod config;
pub mod ledger;
pub mod mixture;
pub mod record;
pub mod run;
pub mod select;

pub use config::{build_env, BuiltEnv, ClassKind, EnvSpec, EvalMode, ExpertOccupancy, RunConfig};
pub use ledger::{theorem_ledger, TheoremLedger};
pub use mixture::{build_mixture, MixturePolicy};
pub use record::{RunRecord, RunRow};
pub use run::run_irl;
pub use select::{box_ipm_gap, select_best};
