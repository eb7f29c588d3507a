pub mod driver;
pub mod env;
pub mod error;
pub mod mdp;
pub mod oracles;
pub mod reward;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mdp.md")]
    mod mdp {}
    #[doc = include_str!("../../../book/src/environments.md")]
    mod environments {}
    #[doc = include_str!("../../../book/src/reward-player.md")]
    mod reward_player {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/runs.md")]
    mod runs {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
