//! The binary-tree instance on which moment matching without expert data has to
//! explore exponentially many leaves.
//!
//! Nodes are indexed breadth-first: the root is `0` and node `i` has children
//! `2i + 1` (action `0`, left) and `2i + 2` (action `1`, right). The `2^d` leaves
//! are absorbing. A "leaf reward" is paid on the edge that enters the leaf, i.e.
//! on the `(parent, action)` pair, so it is collected exactly once even when the
//! horizon exceeds the depth.

use crate::error::{Error, Result};
use crate::mdp::{RewardTable, TabularMdp, TabularPolicy};

/// Largest tree (in states) [`build_tree`] will construct.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// A built tree: dynamics, the leftmost-path expert, and the reward family.
#[derive(Debug, Clone)]
pub struct TreeInstance {
    pub depth: usize,
    pub mdp: TabularMdp,
    pub expert: TabularPolicy,
    pub family: TreeRewardFamily,
}

/// Rewards paying `+1` on entering the bottom-left leaf and `+1` on entering
/// one other leaf. Leaves are numbered `0..2^d` from left to right; leaf `0` is
/// the base leaf and members are identified by their bonus leaf `1..2^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRewardFamily {
    depth: usize,
    with_negations: bool,
}

impl TreeRewardFamily {
    pub fn new(depth: usize, with_negations: bool) -> Self {
        Self {
            depth,
            with_negations,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_states(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.depth
    }

    pub fn with_negations(&self) -> bool {
        self.with_negations
    }

    /// BFS index of leaf `leaf`.
    pub fn leaf_node(&self, leaf: usize) -> usize {
        self.num_leaves() - 1 + leaf
    }

    /// The `(parent, action)` edge entering leaf `leaf`.
    pub fn leaf_edge(&self, leaf: usize) -> (usize, usize) {
        let node = self.leaf_node(leaf);
        ((node - 1) / 2, (node - 1) % 2)
    }

    /// The member whose bonus sits on leaf `bonus`.
    pub fn member(&self, bonus: usize) -> Result<RewardTable> {
        if bonus == 0 || bonus >= self.num_leaves() {
            return Err(Error::IndexOutOfRange {
                what: "bonus leaf",
                index: bonus,
                size: self.num_leaves(),
            });
        }
        let mut values = vec![0.0; self.num_states() * 2];
        for leaf in [0, bonus] {
            let (p, a) = self.leaf_edge(leaf);
            values[p * 2 + a] = 1.0;
        }
        RewardTable::new(self.num_states(), 2, values)
    }

    /// All `2^d - 1` positive members, followed by their negations when enabled.
    pub fn members(&self) -> Vec<RewardTable> {
        let positive: Vec<RewardTable> = (1..self.num_leaves())
            .map(|b| self.member(b).expect("bonus in range"))
            .collect();
        if !self.with_negations {
            return positive;
        }
        let negated: Vec<RewardTable> = positive.iter().map(RewardTable::negated).collect();
        positive.into_iter().chain(negated).collect()
    }

    /// The evaluation reward: bonus on the base leaf's sibling.
    pub fn ground_truth(&self) -> RewardTable {
        self.member(1).expect("every tree has at least two leaves")
    }
}

pub fn build_tree(depth: usize) -> Result<TreeInstance> {
    build_tree_with_cap(depth, depth, DEFAULT_STATE_CAP)
}

/// Builds a depth-`depth` tree run for `horizon` steps (`horizon >= depth` lets
/// the agent sit in a leaf; smaller horizons never reach one).
pub fn build_tree_with_cap(depth: usize, horizon: usize, state_cap: usize) -> Result<TreeInstance> {
    if depth == 0 {
        return Err(Error::Range {
            field: "depth",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    if depth >= usize::BITS as usize - 1 || (1usize << (depth + 1)) - 1 > state_cap {
        return Err(Error::Capacity(format!(
            "a depth-{depth} tree exceeds the cap of {state_cap} states"
        )));
    }
    let n = (1usize << (depth + 1)) - 1;
    let internal = (1usize << depth) - 1;
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    let mdp = TabularMdp::from_rows(n, 2, horizon, initial, |s, a| {
        let mut row = vec![0.0; n];
        if s < internal {
            row[2 * s + 1 + a] = 1.0;
        } else {
            row[s] = 1.0;
        }
        row
    })?;
    let expert = TabularPolicy::deterministic(horizon, n, 2, |_, _| LEFT)?;
    Ok(TreeInstance {
        depth,
        mdp,
        expert,
        family: TreeRewardFamily::new(depth, false),
    })
}
