use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::BranchId;
use crate::scalar::Scalar;

/// Exploration rate decayed once per episode by
/// `ε ← ε - (ε - ε_min) / n_ep`, starting from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule<S> {
    epsilon: S,
    epsilon_min: S,
    episodes: usize,
}

impl<S: Scalar> EpsilonSchedule<S> {
    pub fn new(epsilon_min: S, episodes: usize) -> Self {
        assert!(episodes >= 1, "episode count must be positive");
        assert!(
            epsilon_min >= S::zero() && epsilon_min <= S::one(),
            "epsilon_min must lie in [0, 1]"
        );
        EpsilonSchedule {
            epsilon: S::one(),
            epsilon_min,
            episodes,
        }
    }

    pub fn with_epsilon(mut self, epsilon: S) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn epsilon(&self) -> S {
        self.epsilon
    }

    pub fn epsilon_min(&self) -> S {
        self.epsilon_min
    }

    /// One application of the decay recurrence.
    pub fn update(&mut self) {
        let n = S::from_usize(self.episodes).expect("episode count fits the scalar");
        self.epsilon = self.epsilon - (self.epsilon - self.epsilon_min) / n;
    }

    /// Value after `k` updates from ε = 1: `ε_min + (1 - ε_min)(1 - 1/n_ep)^k`.
    pub fn closed_form(epsilon_min: S, episodes: usize, k: usize) -> S {
        let n = S::from_usize(episodes).expect("episode count fits the scalar");
        let k = S::from_usize(k).expect("update count fits the scalar");
        epsilon_min + (S::one() - epsilon_min) * (S::one() - S::one() / n).powf(k)
    }
}

/// Epsilon-greedy choice among `mask`.
///
/// One uniform draw decides between exploring (uniform over `mask`) and
/// exploiting (highest Q among `mask`, lowest branch id on ties).
pub fn select_action<S: Scalar, R: Rng + ?Sized>(
    qvals: &[S],
    mask: &[BranchId],
    epsilon: S,
    rng: &mut R,
) -> Result<BranchId, Error> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let explore = rng.gen::<f64>() < epsilon.to_f64_lossy();
    if explore {
        return Ok(mask[rng.gen_range(0..mask.len())]);
    }
    Ok(greedy_action(qvals, mask).expect("mask is nonempty"))
}

/// Highest-valued action in `mask`; ties go to the lowest branch id.
pub fn greedy_action<S: Scalar>(qvals: &[S], mask: &[BranchId]) -> Option<BranchId> {
    let mut best: Option<(BranchId, S)> = None;
    for &a in mask {
        let v = qvals[a.index()];
        best = match best {
            Some((b, bv)) if bv > v || (bv == v && b < a) => Some((b, bv)),
            _ => Some((a, v)),
        };
    }
    best.map(|(a, _)| a)
}

/// Sign applied to the bootstrap term of the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetSign {
    /// `y = r + γ · max Q'`
    #[default]
    Plus,
    /// `y = r - γ · max Q'`
    Minus,
}

/// Regression target for one transition.
///
/// `next` is `None` for a terminal transition; otherwise it holds the target
/// network's Q-values at the next state and the actions valid there.
pub fn bellman_target<S: Scalar>(
    reward: S,
    next: Option<(&[S], &[BranchId])>,
    gamma: S,
    sign: TargetSign,
) -> S {
    let Some((q_next, mask)) = next else {
        return reward;
    };
    let Some(best) = mask.iter().map(|a| q_next[a.index()]).reduce(S::max) else {
        return reward;
    };
    match sign {
        TargetSign::Plus => reward + gamma * best,
        TargetSign::Minus => reward - gamma * best,
    }
}

pub fn mse_loss<S: Scalar>(predicted: S, target: S) -> S {
    let d = predicted - target;
    d * d
}

/// Mean squared error over `(predicted, target)` pairs; zero for an empty batch.
pub fn mse_batch<S: Scalar>(pairs: &[(S, S)]) -> S {
    if pairs.is_empty() {
        return S::zero();
    }
    let sum = pairs
        .iter()
        .fold(S::zero(), |acc, &(p, t)| acc + mse_loss(p, t));
    sum / S::from_usize(pairs.len()).expect("batch size fits the scalar")
}
