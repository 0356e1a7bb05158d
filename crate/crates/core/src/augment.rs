//! Rigid perturbations applied jointly to a voxel grid and its actions.

use nalgebra::UnitQuaternion;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camvox::VoxelGrid;
use crate::demo::BimanualAction;
use crate::par::{self, Execution};
use crate::pose::{Pose, Vec3};
use crate::rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AugmentError {
    #[error("invalid perturbation: {0}")]
    InvalidSpec(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    /// Meters, per axis.
    pub max_trans: f64,
    /// Degrees of yaw.
    pub max_rot_z: f64,
    pub rng_seed: u64,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        Self {
            max_trans: 0.125,
            max_rot_z: 45.0,
            rng_seed: 0,
        }
    }
}

impl PerturbSpec {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(self.max_trans >= 0.0) || !self.max_trans.is_finite() {
            return Err(AugmentError::InvalidSpec("max_trans must be finite and >= 0"));
        }
        if !(0.0..=180.0).contains(&self.max_rot_z) {
            return Err(AugmentError::InvalidSpec("max_rot_z must lie in [0, 180]"));
        }
        Ok(())
    }
}

/// Yaw about a vertical axis through `pivot`, then a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub yaw_deg: f64,
    pub translation: Vec3,
    pub pivot: Vec3,
}

impl RigidTransform {
    pub fn is_identity(&self) -> bool {
        self.yaw_deg == 0.0 && self.translation == Vec3::zeros()
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Vec3::z_axis(), self.yaw_deg.to_radians())
    }

    /// The same map as a world-frame pose `T` with `p' = T(p)`.
    pub fn as_pose(&self) -> Pose {
        let r = self.rotation();
        Pose::from_parts(self.pivot - r * self.pivot + self.translation, r)
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        if self.yaw_deg == 0.0 {
            return p + self.translation;
        }
        let d = p - self.pivot;
        self.pivot + self.rotation() * d + self.translation
    }

    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        if self.yaw_deg == 0.0 {
            return Pose::from_parts(pose.position + self.translation, pose.orientation);
        }
        self.as_pose().compose(pose)
    }
}

/// Draws a transform from `rng_seed`. The pivot is the grid center.
pub fn sample_transform(spec: &PerturbSpec, pivot: Vec3) -> RigidTransform {
    let mut r = rng::stream(spec.rng_seed);
    let mut draw = |m: f64| if m > 0.0 { r.random_range(-m..=m) } else { 0.0 };
    let translation = Vec3::new(draw(spec.max_trans), draw(spec.max_trans), draw(spec.max_trans));
    let yaw_deg = draw(spec.max_rot_z);
    RigidTransform {
        yaw_deg,
        translation,
        pivot,
    }
}

/// Moves every occupied cell center through `t` and re-bins into a fresh grid.
/// Cells landing together merge; cells leaving the grid are dropped.
pub fn transform_grid(grid: &VoxelGrid, t: &RigidTransform) -> VoxelGrid {
    if t.is_identity() {
        return grid.clone();
    }
    let spec = *grid.spec();
    let mut out = VoxelGrid::empty(spec);
    for (f, c) in grid.cells().iter().enumerate() {
        if c.count == 0 {
            continue;
        }
        let p = t.apply_point(&spec.cell_center(spec.unflat(f)));
        if let Ok(idx) = spec.world_to_voxel(&p) {
            out.add_to_cell(spec.flat(idx), c.count, c.rgb_sum);
        }
    }
    out
}

pub fn transform_actions(actions: &[BimanualAction], t: &RigidTransform) -> Vec<BimanualAction> {
    actions
        .iter()
        .map(|a| {
            a.map(|_, mut arm| {
                arm.pose = t.apply_pose(&arm.pose);
                arm
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Perturbed {
    pub grid: VoxelGrid,
    pub actions: Vec<BimanualAction>,
    pub transform: Pose,
}

pub fn perturb(grid: &VoxelGrid, actions: &[BimanualAction], spec: &PerturbSpec) -> Result<Perturbed, AugmentError> {
    spec.validate()?;
    let t = sample_transform(spec, grid.spec().center());
    Ok(Perturbed {
        grid: transform_grid(grid, &t),
        actions: transform_actions(actions, &t),
        transform: t.as_pose(),
    })
}

/// Perturbs many samples; sample `i` uses seed `split(spec.rng_seed, i)`.
pub fn perturb_batch(
    samples: &[(VoxelGrid, Vec<BimanualAction>)],
    spec: &PerturbSpec,
    exec: Execution,
) -> Result<Vec<Perturbed>, AugmentError> {
    spec.validate()?;
    par::map_range(exec, samples.len(), |i| {
        let s = PerturbSpec {
            rng_seed: rng::split(spec.rng_seed, i as u64),
            ..*spec
        };
        perturb(&samples[i].0, &samples[i].1, &s)
    })
    .into_iter()
    .collect()
}
