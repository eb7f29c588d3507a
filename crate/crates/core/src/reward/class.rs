use crate::error::{check_dim, Error, Result};
use crate::mdp::RewardTable;

/// The set the reward player chooses from.
///
/// * `Box` is all of `[-1, 1]^{S x A}`, searched by clipped gradient steps.
/// * `Family` is the convex hull of finitely many members, searched through
///   simplex weights. Hindsight-optimal points of a linear loss over a hull are
///   vertices, so the comparator is always a member.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardClass {
    Box { num_states: usize, num_actions: usize },
    Family(Vec<RewardTable>),
}

impl RewardClass {
    pub fn full_box(num_states: usize, num_actions: usize) -> Self {
        RewardClass::Box {
            num_states,
            num_actions,
        }
    }

    pub fn family(members: Vec<RewardTable>) -> Result<Self> {
        let first = members.first().ok_or(Error::Empty("reward family"))?;
        for m in &members {
            check_dim("family member states", first.num_states(), m.num_states())?;
            check_dim("family member actions", first.num_actions(), m.num_actions())?;
        }
        Ok(RewardClass::Family(members))
    }

    pub fn num_states(&self) -> usize {
        match self {
            RewardClass::Box { num_states, .. } => *num_states,
            RewardClass::Family(m) => m[0].num_states(),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            RewardClass::Box { num_actions, .. } => *num_actions,
            RewardClass::Family(m) => m[0].num_actions(),
        }
    }

    /// Euclidean diameter of the decision set the player actually moves in
    /// (the box itself, or the weight simplex).
    pub fn diameter(&self) -> f64 {
        match self {
            RewardClass::Box {
                num_states,
                num_actions,
            } => 2.0 * ((num_states * num_actions) as f64).sqrt(),
            RewardClass::Family(m) if m.len() == 1 => 0.0,
            RewardClass::Family(_) => std::f64::consts::SQRT_2,
        }
    }

    /// Bound on the Euclidean norm of every loss gradient in the player's
    /// coordinates. Reward-space gradients have L1 norm at most 2.
    pub fn gradient_bound(&self) -> f64 {
        match self {
            RewardClass::Box { .. } => 2.0,
            RewardClass::Family(m) => {
                let mx = m.iter().fold(0.0f64, |a, f| a.max(f.max_abs()));
                2.0 * mx * (m.len() as f64).sqrt()
            }
        }
    }

    /// Starting point: zero for the box, the centroid for a family.
    pub fn initial(&self) -> (RewardTable, Option<Vec<f64>>) {
        match self {
            RewardClass::Box {
                num_states,
                num_actions,
            } => (RewardTable::zeros(*num_states, *num_actions), None),
            RewardClass::Family(m) => {
                let w = vec![1.0 / m.len() as f64; m.len()];
                (self.combine(&w), Some(w))
            }
        }
    }

    /// `sum_k w_k m_k` for a family.
    pub fn combine(&self, weights: &[f64]) -> RewardTable {
        let RewardClass::Family(m) = self else {
            panic!("combine is only defined for families");
        };
        let n = m[0].values().len();
        let mut v = vec![0.0; n];
        for (w, f) in weights.iter().zip(m) {
            if *w != 0.0 {
                for (o, x) in v.iter_mut().zip(f.values()) {
                    *o += w * x;
                }
            }
        }
        RewardTable::clipped(m[0].num_states(), m[0].num_actions(), v)
            .expect("convex combinations of box points are finite")
    }

    /// Minimizer of the linear loss `<g, f>` over the class. Box entries follow
    /// `-sign(g)`, with zero entries set to `+1`; family ties go to the lowest
    /// member index.
    pub fn minimize_linear(&self, g: &[f64]) -> Result<RewardTable> {
        check_dim(
            "gradient length",
            self.num_states() * self.num_actions(),
            g.len(),
        )?;
        match self {
            RewardClass::Box {
                num_states,
                num_actions,
            } => RewardTable::new(
                *num_states,
                *num_actions,
                g.iter().map(|&x| if x > 0.0 { -1.0 } else { 1.0 }).collect(),
            ),
            RewardClass::Family(m) => {
                let mut best = 0;
                let mut best_v = f64::INFINITY;
                for (k, f) in m.iter().enumerate() {
                    let v = dot(f.values(), g);
                    if v < best_v {
                        best_v = v;
                        best = k;
                    }
                }
                Ok(m[best].clone())
            }
        }
    }

    pub fn contains(&self, f: &RewardTable) -> bool {
        match self {
            RewardClass::Box {
                num_states,
                num_actions,
            } => f.num_states() == *num_states && f.num_actions() == *num_actions,
            RewardClass::Family(m) => m.contains(f),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
