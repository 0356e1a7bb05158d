use serde::{Deserialize, Serialize};

use crate::pose::{Pose, Vec3};

pub type BodyId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Box {
        half_extents: [f64; 3],
    },
    Sphere {
        radius: f64,
    },
    /// Axis along the body z axis.
    Cylinder {
        radius: f64,
        half_height: f64,
    },
}

/// How a body responds to the grippers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Never moves.
    Static,
    /// Moves only when grasped or carried by its support.
    Free,
    /// Slides only while both grippers push the same side face.
    TwoArmPush,
    /// Rises or lowers only with two opposing contacts.
    TwoContactLift,
    /// Static, reports presses from above.
    Button,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidBody {
    pub id: BodyId,
    pub name: String,
    pub shape: Shape,
    pub pose: Pose,
    pub mass_kg: f64,
    pub color: [u8; 3],
    pub graspable: bool,
    pub dynamics: Dynamics,
    /// Body this one rests on; it follows that body's motion.
    pub resting_on: Option<BodyId>,
}

impl RigidBody {
    pub fn validate(&self) -> bool {
        let dims_ok = match self.shape {
            Shape::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0),
            Shape::Sphere { radius } => radius > 0.0,
            Shape::Cylinder { radius, half_height } => radius > 0.0 && half_height > 0.0,
        };
        dims_ok && self.mass_kg > 0.0
    }

    /// Signed distance from a world point to the surface (negative inside).
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let local = self.pose.inverse().transform_point(p);
        shape_sdf(&self.shape, &local)
    }

    /// Radius of a sphere around the body center enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self.shape {
            Shape::Box { half_extents } => Vec3::from(half_extents).norm(),
            Shape::Sphere { radius } => radius,
            Shape::Cylinder { radius, half_height } => radius.hypot(half_height),
        }
    }

    /// Lowest world z reached by the shape.
    pub fn lowest_z(&self) -> f64 {
        let r = self.pose.orientation.to_rotation_matrix();
        let m = r.matrix();
        let c = self.pose.position.z;
        match self.shape {
            Shape::Sphere { radius } => c - radius,
            Shape::Box { half_extents } => c - (0..3).map(|i| m[(2, i)].abs() * half_extents[i]).sum::<f64>(),
            Shape::Cylinder { radius, half_height } => {
                let a = m[(2, 2)].abs();
                c - (a * half_height + radius * (1.0 - a * a).max(0.0).sqrt())
            }
        }
    }

    /// Axis-aligned world bounds `(min, max)`.
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let r = self.pose.orientation.to_rotation_matrix();
        let m = r.matrix();
        let c = self.pose.position;
        let ext = match self.shape {
            Shape::Sphere { radius } => Vec3::repeat(radius),
            Shape::Box { half_extents } => {
                Vec3::from_fn(|row, _| (0..3).map(|i| m[(row, i)].abs() * half_extents[i]).sum())
            }
            Shape::Cylinder { radius, half_height } => Vec3::from_fn(|row, _| {
                let a = m[(row, 2)].abs();
                a * half_height + radius * (1.0 - a * a).max(0.0).sqrt()
            }),
        };
        (c - ext, c + ext)
    }

    /// Outward normal (body frame) of the face nearest to a world point, for boxes.
    pub fn nearest_face(&self, p: &Vec3) -> Option<Vec3> {
        let Shape::Box { half_extents } = self.shape else {
            return None;
        };
        let local = self.pose.inverse().transform_point(p);
        let axis = (0..3)
            .max_by(|&a, &b| {
                let da = local[a].abs() - half_extents[a];
                let db = local[b].abs() - half_extents[b];
                da.total_cmp(&db)
            })
            .unwrap();
        let mut n = Vec3::zeros();
        n[axis] = local[axis].signum();
        Some(n)
    }

    /// Ray parameter of the first hit along `origin + t * dir`, `t > 0`.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let inv = self.pose.inverse();
        let o = inv.transform_point(origin);
        let d = inv.orientation * dir;
        intersect_local(&self.shape, &o, &d)
    }
}

fn shape_sdf(shape: &Shape, p: &Vec3) -> f64 {
    match *shape {
        Shape::Sphere { radius } => p.norm() - radius,
        Shape::Box { half_extents } => {
            let q = p.abs() - Vec3::from(half_extents);
            let outside = q.map(|v| v.max(0.0)).norm();
            outside + q.max().min(0.0)
        }
        Shape::Cylinder { radius, half_height } => {
            let qx = p.x.hypot(p.y) - radius;
            let qz = p.z.abs() - half_height;
            qx.max(0.0).hypot(qz.max(0.0)) + qx.max(qz).min(0.0)
        }
    }
}

const T_MIN: f64 = 1e-9;

pub(crate) fn intersect_local(shape: &Shape, o: &Vec3, d: &Vec3) -> Option<f64> {
    match *shape {
        Shape::Sphere { radius } => {
            let a = d.dot(d);
            let b = o.dot(d);
            let c = o.dot(o) - radius * radius;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return None;
            }
            let s = disc.sqrt();
            [(-b - s) / a, (-b + s) / a].into_iter().find(|&t| t > T_MIN)
        }
        Shape::Box { half_extents } => slab(o, d, &half_extents),
        Shape::Cylinder { radius, half_height } => {
            let mut best: Option<f64> = None;
            let mut keep = |t: f64| {
                if t > T_MIN && best.is_none_or(|b| t < b) {
                    best = Some(t);
                }
            };
            let a = d.x * d.x + d.y * d.y;
            if a > 0.0 {
                let b = o.x * d.x + o.y * d.y;
                let c = o.x * o.x + o.y * o.y - radius * radius;
                let disc = b * b - a * c;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    for t in [(-b - s) / a, (-b + s) / a] {
                        if (o.z + t * d.z).abs() <= half_height {
                            keep(t);
                        }
                    }
                }
            }
            if d.z != 0.0 {
                for zc in [-half_height, half_height] {
                    let t = (zc - o.z) / d.z;
                    let (x, y) = (o.x + t * d.x, o.y + t * d.y);
                    if x * x + y * y <= radius * radius {
                        keep(t);
                    }
                }
            }
            best
        }
    }
}

fn slab(o: &Vec3, d: &Vec3, h: &[f64; 3]) -> Option<f64> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a].abs() > h[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[a];
        let (mut near, mut far) = ((-h[a] - o[a]) * inv, (h[a] - o[a]) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return None;
        }
    }
    if t0 > T_MIN {
        Some(t0)
    } else if t1 > T_MIN {
        Some(t1)
    } else {
        None
    }
}
