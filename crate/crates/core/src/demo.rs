//! Demonstration data model shared by every stage of the pipeline.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pose::Pose;

/// Fixed arm role labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Right,
    Left,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Right, Arm::Left];

    pub fn other(self) -> Arm {
        match self {
            Arm::Right => Arm::Left,
            Arm::Left => Arm::Right,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Right => "right",
            Arm::Left => "left",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Any value held once per arm, addressed by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerArm<T> {
    pub right: T,
    pub left: T,
}

impl<T> PerArm<T> {
    pub fn new(right: T, left: T) -> Self {
        Self { right, left }
    }

    pub fn get(&self, arm: Arm) -> &T {
        match arm {
            Arm::Right => &self.right,
            Arm::Left => &self.left,
        }
    }

    pub fn get_mut(&mut self, arm: Arm) -> &mut T {
        match arm {
            Arm::Right => &mut self.right,
            Arm::Left => &mut self.left,
        }
    }

    pub fn map<U>(self, mut f: impl FnMut(Arm, T) -> U) -> PerArm<U> {
        PerArm {
            right: f(Arm::Right, self.right),
            left: f(Arm::Left, self.left),
        }
    }

    pub fn as_ref(&self) -> PerArm<&T> {
        PerArm {
            right: &self.right,
            left: &self.left,
        }
    }

    /// Same values with the role labels exchanged.
    pub fn swapped(self) -> Self {
        Self {
            right: self.left,
            left: self.right,
        }
    }
}

/// Continuous single-arm action `{pose, open, collide}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmAction {
    pub pose: Pose,
    /// Gripper open state.
    pub open: bool,
    /// Collision-avoidance flag for the low-level motion.
    pub collide: bool,
}

pub type BimanualAction = PerArm<ArmAction>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraImage {
    pub width: usize,
    pub height: usize,
    /// Row-major `height * width * 3` bytes.
    pub rgb: Vec<u8>,
    /// Row-major `height * width` meters; 0.0 marks an invalid pixel.
    pub depth: Vec<f32>,
}

impl CameraImage {
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![0; width * height * 3],
            depth: vec![0.0; width * height],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmProprio {
    pub gripper_open: bool,
    pub ee_pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Keyed by camera name. May be empty when rendering is disabled.
    pub images: BTreeMap<String, CameraImage>,
    pub proprio: PerArm<ArmProprio>,
    pub timestep_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub time_s: f64,
    pub observation: Observation,
    pub action: BimanualAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub steps: Vec<Step>,
    pub goal: String,
    pub task_id: String,
    pub variation_id: usize,
    pub seed: u64,
    pub duration_s: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DemoError {
    #[error("demonstration needs at least 2 steps, got {0}")]
    TooShort(usize),
    #[error("timestamps not strictly increasing at step {0}")]
    NonMonotonicTime(usize),
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &BimanualAction> {
        self.steps.iter().map(|s| &s.action)
    }

    pub fn validate(&self) -> Result<(), DemoError> {
        if self.steps.len() < 2 {
            return Err(DemoError::TooShort(self.steps.len()));
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            if !(w[1].time_s > w[0].time_s) {
                return Err(DemoError::NonMonotonicTime(i + 1));
            }
        }
        Ok(())
    }

    /// Builds a demonstration without images from an action sequence sampled at `dt_s`.
    ///
    /// Proprioception mirrors the actions.
    pub fn from_actions(actions: Vec<BimanualAction>, dt_s: f64) -> Self {
        let n = actions.len();
        let steps = actions
            .into_iter()
            .enumerate()
            .map(|(i, action)| Step {
                time_s: i as f64 * dt_s,
                observation: Observation {
                    images: BTreeMap::new(),
                    proprio: action.map(|_, a| ArmProprio {
                        gripper_open: a.open,
                        ee_pose: a.pose,
                    }),
                    timestep_fraction: if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 },
                },
                action,
            })
            .collect();
        Self {
            steps,
            goal: String::new(),
            task_id: String::new(),
            variation_id: 0,
            seed: 0,
            duration_s: n.saturating_sub(1) as f64 * dt_s,
        }
    }
}
