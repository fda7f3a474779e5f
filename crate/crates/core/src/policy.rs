//! Linear softmax policy over a 4x2 weight matrix.
//!
//! Rows correspond to state components, columns to the two push directions.
//! The rollout is deterministic: the action with the larger probability is
//! taken, so episode returns depend only on the weights and the start state.

use serde::{Deserialize, Serialize};

use crate::env::{Action, CartpoleState};

/// 4x2 weight matrix, serialized as a row-major JSON array of 4 rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightMatrix(pub [[f64; 2]; 4]);

impl WeightMatrix {
    pub const ZERO: Self = Self([[0.0; 2]; 4]);

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|w| w.is_finite())
    }

    /// Build a matrix entry-by-entry in row-major order.
    pub fn from_fn(mut f: impl FnMut() -> f64) -> Self {
        let mut w = [[0.0; 2]; 4];
        for row in &mut w {
            for entry in row {
                *entry = f();
            }
        }
        Self(w)
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flatten().copied()
    }
}

/// Softmax of the two logits `state . w[:, j]`, stabilized by subtracting the
/// larger logit so extreme weights cannot overflow.
pub fn action_probabilities(w: &WeightMatrix, state: &CartpoleState) -> [f64; 2] {
    let s = state.as_array();
    let mut logits = [0.0; 2];
    for (j, logit) in logits.iter_mut().enumerate() {
        *logit = s.iter().zip(&w.0).map(|(si, row)| si * row[j]).sum();
    }
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

/// Greedy action: the larger probability wins, ties go to `Left`.
pub fn act(w: &WeightMatrix, state: &CartpoleState) -> Action {
    let p = action_probabilities(w, state);
    if p[0] >= p[1] {
        Action::Left
    } else {
        Action::Right
    }
}
