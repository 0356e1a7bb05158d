//! Rigid poses.
//!
//! Quaternions are stored and serialized as `(w, x, y, z)`. Composition uses
//! the local post-multiply convention: `a.compose(&b)` is `b` expressed in the
//! frame of `a`, i.e. the point map `p -> a(b(p))`.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Position in meters plus a unit orientation quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPose", into = "RawPose")]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    position: [f64; 3],
    /// (w, x, y, z)
    orientation: [f64; 4],
}

impl From<RawPose> for Pose {
    fn from(raw: RawPose) -> Self {
        let [w, x, y, z] = raw.orientation;
        Pose::new(Vec3::from(raw.position), Quaternion::new(w, x, y, z))
    }
}

impl From<Pose> for RawPose {
    fn from(p: Pose) -> Self {
        RawPose {
            position: p.position.into(),
            orientation: p.wxyz(),
        }
    }
}

/// Normalizes `q` unless it is already unit length to within rounding.
///
/// Skipping the division for already-normalized input keeps identity
/// operations bit-exact.
pub fn renormalize(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    let n = q.norm();
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        Unit::new_unchecked(q)
    } else {
        Unit::new_normalize(q)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quaternion<f64>) -> Self {
        Self {
            position,
            orientation: renormalize(orientation),
        }
    }

    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_position(position: Vec3) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_parts(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self::new(position, orientation.into_inner())
    }

    /// Builds a pose from raw `(x, y, z)` and `(w, x, y, z)` arrays.
    pub fn from_arrays(position: [f64; 3], wxyz: [f64; 4]) -> Self {
        let [w, x, y, z] = wxyz;
        Self::new(Vec3::from(position), Quaternion::new(w, x, y, z))
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// `self ∘ other`: `other` expressed in this pose's frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        let q = self.orientation.quaternion() * other.orientation.quaternion();
        Pose {
            position: self.position + self.orientation * other.position,
            orientation: renormalize(q),
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -(inv * self.position),
            orientation: inv,
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.position + self.orientation * p
    }

    /// Camera-style look-at: +z toward `target`, +y as close to `down` as possible.
    pub fn look_at(eye: Vec3, target: Vec3, down: Vec3) -> Pose {
        let z = (target - eye).normalize();
        let x = down.cross(&z).normalize();
        let y = z.cross(&x);
        let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
        let rot = nalgebra::Rotation3::from_matrix_unchecked(m);
        Pose::from_parts(eye, UnitQuaternion::from_rotation_matrix(&rot))
    }
}

/// Translation distance (m) and geodesic angle (degrees, in [0, 180]).
pub fn pose_delta(a: &Pose, b: &Pose) -> (f64, f64) {
    let trans = (a.position - b.position).norm();
    (trans, geodesic_deg(&a.orientation, &b.orientation))
}

pub fn geodesic_deg(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let dot = a.quaternion().dot(b.quaternion()).abs().min(1.0);
    (2.0 * dot.acos()).to_degrees()
}
