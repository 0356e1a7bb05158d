//! Discretized action space, one-hot training targets and the two-arm loss.
//!
//! Translation is the voxel containing the gripper position. Rotation is
//! described by fixed-axis X-Y-Z Euler angles `(ψ, θ, φ)` (so `R = Rz(φ)·Ry(θ)·Rx(ψ)`),
//! extracted canonically with `θ ∈ [-90°, 90°)`, wrapped to `[0°, 360°)` and
//! binned into 72 bins of 5° per axis. Decoding uses bin centers. Binary heads
//! use class order `(false, true)`; the translation head is flattened x-fastest.

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::camvox::GridSpec;
use crate::demo::{Arm, ArmAction, BimanualAction, PerArm};
use crate::par::{self, Execution};
use crate::pose::{Pose, Vec3};

pub const ROT_BIN_DEG: f64 = 5.0;
pub const ROT_BINS: usize = 72;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CodecError {
    #[error("{arm} gripper position {position:?} lies outside the workspace")]
    OutOfWorkspace { arm: Arm, position: [f64; 3] },
    #[error("invalid discrete action: {0}")]
    Invalid(String),
    #[error("head {head}: expected {want} values, got {got}")]
    Shape {
        head: &'static str,
        want: usize,
        got: usize,
    },
    #[error("head {0}: non-finite logit")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteArmAction {
    pub trans: [usize; 3],
    /// (ψ, θ, φ) bins.
    pub rot_bins: [usize; 3],
    pub open: bool,
    pub collide: bool,
}

pub type DiscreteBimanual = PerArm<DiscreteArmAction>;

impl DiscreteArmAction {
    pub fn validate(&self, spec: &GridSpec) -> Result<(), CodecError> {
        if !spec.contains_index(self.trans) {
            return Err(CodecError::Invalid(format!(
                "translation index {:?} outside dims {:?}",
                self.trans, spec.dims
            )));
        }
        if let Some(b) = self.rot_bins.iter().find(|&&b| b >= ROT_BINS) {
            return Err(CodecError::Invalid(format!("rotation bin {b} >= {ROT_BINS}")));
        }
        Ok(())
    }

    /// Whether the pitch bin lies in the canonical range that `encode` produces
    /// (θ in [-90°, 90°)). Exactly these actions are fixed points of `encode ∘ decode`.
    pub fn is_canonical(&self) -> bool {
        let b = self.rot_bins[1];
        !(18..54).contains(&b)
    }
}

fn wrap_deg(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Canonical fixed-axis X-Y-Z Euler angles in degrees, `θ ∈ [-90, 90]`, ψ and φ in (-180, 180].
pub fn euler_xyz_deg(q: &UnitQuaternion<f64>) -> [f64; 3] {
    let r = q.to_rotation_matrix();
    let m = r.matrix();
    let cos_theta = m[(0, 0)].hypot(m[(1, 0)]);
    let theta = (-m[(2, 0)]).atan2(cos_theta);
    let (psi, phi) = if cos_theta > 1e-9 {
        (m[(2, 1)].atan2(m[(2, 2)]), m[(1, 0)].atan2(m[(0, 0)]))
    } else if m[(2, 0)] < 0.0 {
        // θ = +90°: only ψ - φ is observable.
        (m[(0, 1)].atan2(m[(1, 1)]), 0.0)
    } else {
        // θ = -90°: only ψ + φ is observable.
        ((-m[(0, 1)]).atan2(m[(1, 1)]), 0.0)
    };
    [psi.to_degrees(), theta.to_degrees(), phi.to_degrees()]
}

/// Rotation `Rz(φ)·Ry(θ)·Rx(ψ)` from degrees.
pub fn from_euler_xyz_deg(angles: [f64; 3]) -> UnitQuaternion<f64> {
    let [psi, theta, phi] = angles.map(f64::to_radians);
    UnitQuaternion::from_axis_angle(&Vec3::z_axis(), phi)
        * UnitQuaternion::from_axis_angle(&Vec3::y_axis(), theta)
        * UnitQuaternion::from_axis_angle(&Vec3::x_axis(), psi)
}

pub fn rotation_bins(q: &UnitQuaternion<f64>) -> [usize; 3] {
    let mut e = euler_xyz_deg(q);
    // Pitch exactly at +90° would land in the first non-canonical bin.
    e[1] = e[1].min(90.0 - 1e-9);
    e.map(|a| ((wrap_deg(a) / ROT_BIN_DEG).floor() as usize).min(ROT_BINS - 1))
}

pub fn bins_to_rotation(bins: [usize; 3]) -> UnitQuaternion<f64> {
    from_euler_xyz_deg(bins.map(|b| (b as f64 + 0.5) * ROT_BIN_DEG))
}

pub fn encode_arm(a: &ArmAction, arm: Arm, spec: &GridSpec) -> Result<DiscreteArmAction, CodecError> {
    let trans = spec
        .world_to_voxel(&a.pose.position)
        .map_err(|_| CodecError::OutOfWorkspace {
            arm,
            position: a.pose.position.into(),
        })?;
    Ok(DiscreteArmAction {
        trans,
        rot_bins: rotation_bins(&a.pose.orientation),
        open: a.open,
        collide: a.collide,
    })
}

pub fn encode(a: &BimanualAction, spec: &GridSpec) -> Result<DiscreteBimanual, CodecError> {
    Ok(PerArm {
        right: encode_arm(&a.right, Arm::Right, spec)?,
        left: encode_arm(&a.left, Arm::Left, spec)?,
    })
}

pub fn encode_batch(
    actions: &[BimanualAction],
    spec: &GridSpec,
    exec: Execution,
) -> Vec<Result<DiscreteBimanual, CodecError>> {
    par::map_slice(exec, actions, |a| encode(a, spec))
}

pub fn decode_arm(d: &DiscreteArmAction, spec: &GridSpec) -> Result<ArmAction, CodecError> {
    d.validate(spec)?;
    Ok(ArmAction {
        pose: Pose::from_parts(spec.cell_center(d.trans), bins_to_rotation(d.rot_bins)),
        open: d.open,
        collide: d.collide,
    })
}

pub fn decode(d: &DiscreteBimanual, spec: &GridSpec) -> Result<BimanualAction, CodecError> {
    Ok(PerArm {
        right: decode_arm(&d.right, spec)?,
        left: decode_arm(&d.left, spec)?,
    })
}

/// `decode(encode(pose))`: the nearest exactly representable pose.
pub fn snap_pose(pose: &Pose, spec: &GridSpec) -> Option<Pose> {
    let idx = spec.world_to_voxel(&pose.position).ok()?;
    Some(Pose::from_parts(
        spec.cell_center(idx),
        bins_to_rotation(rotation_bins(&pose.orientation)),
    ))
}

/// One-hot vector stored as its length and hot index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHot {
    pub len: usize,
    pub index: usize,
}

impl OneHot {
    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        v[self.index] = 1.0;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTarget {
    pub trans: OneHot,
    pub rot: [OneHot; 3],
    pub open: OneHot,
    pub collide: OneHot,
}

pub type TrainingTarget = PerArm<ArmTarget>;

impl ArmTarget {
    fn from_discrete(d: &DiscreteArmAction, spec: &GridSpec) -> Self {
        Self {
            trans: OneHot {
                len: spec.num_cells(),
                index: spec.flat(d.trans),
            },
            rot: d.rot_bins.map(|b| OneHot {
                len: ROT_BINS,
                index: b,
            }),
            open: OneHot {
                len: 2,
                index: d.open as usize,
            },
            collide: OneHot {
                len: 2,
                index: d.collide as usize,
            },
        }
    }

    /// The discrete action selected by the hot entries.
    pub fn argmax(&self, spec: &GridSpec) -> DiscreteArmAction {
        DiscreteArmAction {
            trans: spec.unflat(self.trans.index),
            rot_bins: self.rot.map(|h| h.index),
            open: self.open.index == 1,
            collide: self.collide.index == 1,
        }
    }

    pub fn heads(&self) -> [OneHot; 6] {
        [
            self.trans,
            self.rot[0],
            self.rot[1],
            self.rot[2],
            self.open,
            self.collide,
        ]
    }
}

pub fn make_target(a: &BimanualAction, spec: &GridSpec) -> Result<TrainingTarget, CodecError> {
    let d = encode(a, spec)?;
    Ok(d.map(|_, d| ArmTarget::from_discrete(&d, spec)))
}

pub fn target_argmax(t: &TrainingTarget, spec: &GridSpec) -> DiscreteBimanual {
    t.as_ref().map(|_, t| t.argmax(spec))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmLogits {
    pub trans: Vec<f64>,
    pub rot: [Vec<f64>; 3],
    pub open: [f64; 2],
    pub collide: [f64; 2],
}

pub type HeadLogits = PerArm<ArmLogits>;

impl ArmLogits {
    pub fn zeros(spec: &GridSpec) -> Self {
        Self {
            trans: vec![0.0; spec.num_cells()],
            rot: std::array::from_fn(|_| vec![0.0; ROT_BINS]),
            open: [0.0; 2],
            collide: [0.0; 2],
        }
    }

    fn heads(&self) -> [(&'static str, &[f64]); 6] {
        [
            ("trans", &self.trans),
            ("rot_x", &self.rot[0]),
            ("rot_y", &self.rot[1]),
            ("rot_z", &self.rot[2]),
            ("open", &self.open),
            ("collide", &self.collide),
        ]
    }
}

/// `-log softmax(logits)[index]`, computed stably.
pub fn cross_entropy(logits: &[f64], index: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    max + sum.ln() - logits[index]
}

/// Sum of per-head softmax cross-entropies over both arms.
///
/// Each arm is summed on its own and the two totals are added last, so
/// swapping the arms of both logits and target gives a bit-identical loss.
pub fn bimanual_loss(logits: &HeadLogits, target: &TrainingTarget) -> Result<f64, CodecError> {
    let mut per_arm = [0.0; 2];
    for (total, arm) in per_arm.iter_mut().zip(Arm::BOTH) {
        let heads = logits.get(arm).heads();
        let hots = target.get(arm).heads();
        for ((name, values), hot) in heads.iter().zip(hots) {
            if values.len() != hot.len || hot.index >= hot.len {
                return Err(CodecError::Shape {
                    head: name,
                    want: hot.len,
                    got: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(CodecError::NonFinite(name));
            }
            *total += cross_entropy(values, hot.index);
        }
    }
    Ok(per_arm[0] + per_arm[1])
}
