//! Hard instances, dynamics transforms, demonstrations and the simulator the
//! sample-based oracles interact with.

pub mod demos;
pub mod maze;
pub mod sim;
pub mod tree;
pub mod tremble;

pub use demos::{generate_demos, DemoSet};
pub use maze::{build_maze, build_maze_trembled, MazeAction, MazeInstance, MazeSpec};
pub use sim::{sample_trajectory, Environment, InteractionLedger, ResetAccess};
pub use tree::{build_tree, build_tree_with_cap, TreeInstance, TreeRewardFamily, DEFAULT_STATE_CAP};
pub use tremble::apply_tremble;
