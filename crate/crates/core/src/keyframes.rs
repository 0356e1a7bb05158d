//! Keyframe discovery in bimanual demonstrations.
//!
//! Step `t > 0` is a keyframe when
//!  1. the open flag of either arm differs between `t - 1` and `t`, or
//!  2. some arm becomes stationary at `t`: its pose stayed within
//!     `(trans_eps, rot_eps)` of the pose at `t` over the trailing window, and
//!     that was not the case at `t - 1`.
//!
//! The trailing window is clipped at the start of the demonstration, so an arm
//! that rests from step 0 is stationary from step 0 and never produces an edge.
//! Keyframes closer than `merge_gap` steps are merged into the later one, and
//! the final step is always a keyframe. Keyframes are shared by both arms.

use serde::{Deserialize, Serialize};

use crate::demo::{Arm, BimanualAction, Demonstration};
use crate::pose::pose_delta;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KeyframeError {
    #[error("demonstration needs at least 2 steps, got {0}")]
    TooShort(usize),
    #[error("invalid keyframe parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid keyframe set: {0}")]
    InvalidSet(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyframeParams {
    pub stationary_window: usize,
    /// Meters.
    pub trans_eps: f64,
    /// Degrees.
    pub rot_eps: f64,
    pub merge_gap: usize,
}

impl Default for KeyframeParams {
    fn default() -> Self {
        Self {
            stationary_window: 4,
            trans_eps: 1e-3,
            rot_eps: 0.5,
            merge_gap: 2,
        }
    }
}

impl KeyframeParams {
    pub fn validate(&self) -> Result<(), KeyframeError> {
        if self.stationary_window < 2 {
            return Err(KeyframeError::InvalidParams("stationary_window must be >= 2"));
        }
        if !(self.trans_eps > 0.0) || !(self.rot_eps > 0.0) {
            return Err(KeyframeError::InvalidParams("thresholds must be positive"));
        }
        Ok(())
    }
}

/// Strictly increasing step indices; always ends with the final step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeSet {
    indices: Vec<usize>,
}

impl KeyframeSet {
    pub fn new(indices: Vec<usize>, demo_len: usize) -> Result<Self, KeyframeError> {
        if indices.is_empty() {
            return Err(KeyframeError::InvalidSet("empty"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(KeyframeError::InvalidSet("indices must be strictly increasing"));
        }
        if *indices.last().unwrap() + 1 != demo_len {
            return Err(KeyframeError::InvalidSet("last step must be a keyframe"));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// First keyframe strictly after `t`, if any.
    pub fn next_after(&self, t: usize) -> Option<usize> {
        let pos = self.indices.partition_point(|&k| k <= t);
        self.indices.get(pos).copied()
    }
}

fn stationary(actions: &[BimanualAction], arm: Arm, t: usize, p: &KeyframeParams) -> bool {
    let here = &actions[t].get(arm).pose;
    let start = (t + 1).saturating_sub(p.stationary_window);
    actions[start..=t].iter().all(|a| {
        let (dt, dr) = pose_delta(&a.get(arm).pose, here);
        dt < p.trans_eps && dr < p.rot_eps
    })
}

/// Keyframes of a raw action sequence.
pub fn extract_from_actions(actions: &[BimanualAction], params: &KeyframeParams) -> Result<KeyframeSet, KeyframeError> {
    params.validate()?;
    let n = actions.len();
    if n < 2 {
        return Err(KeyframeError::TooShort(n));
    }
    let still: Vec<[bool; 2]> = (0..n)
        .map(|t| Arm::BOTH.map(|arm| stationary(actions, arm, t, params)))
        .collect();

    let mut raw = Vec::new();
    for t in 1..n {
        let gripper_changed = Arm::BOTH
            .iter()
            .any(|&arm| actions[t].get(arm).open != actions[t - 1].get(arm).open);
        let came_to_rest = (0..2).any(|a| still[t][a] && !still[t - 1][a]);
        if gripper_changed || came_to_rest {
            raw.push(t);
        }
    }
    if raw.last() != Some(&(n - 1)) {
        raw.push(n - 1);
    }

    let mut indices = Vec::with_capacity(raw.len());
    for (i, &k) in raw.iter().enumerate() {
        match raw.get(i + 1) {
            Some(&next) if next - k < params.merge_gap => {}
            _ => indices.push(k),
        }
    }
    Ok(KeyframeSet { indices })
}

pub fn extract_keyframes(demo: &Demonstration, params: &KeyframeParams) -> Result<KeyframeSet, KeyframeError> {
    let actions: Vec<BimanualAction> = demo.actions().copied().collect();
    extract_from_actions(&actions, params)
}

/// Actions stored at each keyframe, in keyframe order.
pub fn keyframe_actions(demo: &Demonstration, ks: &KeyframeSet) -> Vec<BimanualAction> {
    ks.indices().iter().map(|&k| demo.steps[k].action).collect()
}

/// Per-step next-best-action: the action at the first keyframe after each step.
/// The final step targets its own action.
pub fn next_keyframe_targets(demo: &Demonstration, ks: &KeyframeSet) -> Vec<BimanualAction> {
    let last = demo.len() - 1;
    (0..demo.len())
        .map(|t| demo.steps[ks.next_after(t).unwrap_or(last)].action)
        .collect()
}
