//! Quasi-static tabletop world with two grippers, five tasks, scripted experts
//! and an analytic RGB-D renderer.

pub mod body;
pub mod expert;
pub mod render;
pub mod tasks;
pub mod world;

pub use body::{BodyId, Dynamics, RigidBody, Shape};
pub use expert::{expert, keyframe_waypoints, plan, rollout, ExpertRun, Segment};
pub use render::{render, render_camera, render_models, CameraRig, Mount, RigCamera, DEFAULT_RESOLUTION};
pub use tasks::{reset, success, TaskId, TaskSpec, Taxonomy, SPEC_ONLY_TASKS, TASKS};
pub use world::{step, GripperState, WorldState, DT, TABLE_Z};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task {task} has {available} variation(s), got {variation}")]
    UnknownVariation {
        task: TaskId,
        variation: usize,
        available: usize,
    },
}
