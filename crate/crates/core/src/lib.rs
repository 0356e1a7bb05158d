//! Bimanual manipulation toolkit: demonstrations, voxel observations, keyframe
//! discovery, discretized actions, a tabletop simulator and evaluation harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod augment;
pub mod camvox;
pub mod codec;
pub mod demo;
pub mod harness;
pub mod keyframes;
pub mod par;
pub mod pose;
pub mod rng;
pub mod simworld;

pub use demo::{Arm, ArmAction, BimanualAction, Demonstration, PerArm};
pub use pose::{Pose, Vec3};
