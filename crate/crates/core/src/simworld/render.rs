use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::body::{intersect_local, Shape};
use super::world::WorldState;
use crate::camvox::CameraModel;
use crate::demo::{Arm, ArmProprio, CameraImage, PerArm};
use crate::par::{self, Execution};
use crate::pose::{Pose, Vec3};

pub const DEFAULT_RESOLUTION: usize = 256;
const HFOV_DEG: f64 = 60.0;
pub const FINGER_HALF: [f64; 3] = [0.012, 0.035, 0.02];
const GRIPPER_COLORS: PerArm<[u8; 3]> = PerArm {
    right: [60, 60, 60],
    left: [95, 95, 95],
};

/// Where a camera is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mount {
    World,
    /// Rigidly attached to a gripper; the model's extrinsic is the offset in the gripper frame.
    Wrist(Arm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigCamera {
    pub model: CameraModel,
    pub mount: Mount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub cameras: Vec<RigCamera>,
}

impl CameraRig {
    /// Front, both shoulders and both wrists at `res x res`.
    pub fn standard(res: usize) -> Self {
        let target = Vec3::new(0.25, 0.0, 0.85);
        let fixed = |name: &str, eye: Vec3| RigCamera {
            model: CameraModel::look_at(name, res, res, HFOV_DEG, eye, target),
            mount: Mount::World,
        };
        let wrist = |name: &str, arm: Arm| {
            let mut model = CameraModel::look_at(name, res, res, 70.0, Vec3::zeros(), Vec3::z());
            // Behind the fingers along the approach axis, slightly off-center.
            model.extrinsic = Pose::from_position(Vec3::new(0.05, 0.0, -0.12));
            RigCamera {
                model,
                mount: Mount::Wrist(arm),
            }
        };
        Self {
            cameras: vec![
                fixed("front", Vec3::new(1.3, 0.0, 1.45)),
                fixed("left_shoulder", Vec3::new(-0.25, 0.75, 1.55)),
                fixed("right_shoulder", Vec3::new(-0.25, -0.75, 1.55)),
                wrist("wrist_left", Arm::Left),
                wrist("wrist_right", Arm::Right),
            ],
        }
    }

    /// Only the three static cameras.
    pub fn fixed_only(res: usize) -> Self {
        let mut rig = Self::standard(res);
        rig.cameras.retain(|c| c.mount == Mount::World);
        rig
    }

    pub fn names(&self) -> Vec<String> {
        self.cameras.iter().map(|c| c.model.name.clone()).collect()
    }

    /// World-frame camera models for the given gripper poses.
    pub fn resolve(&self, proprio: &PerArm<ArmProprio>) -> Vec<CameraModel> {
        self.cameras
            .iter()
            .map(|c| match c.mount {
                Mount::World => c.model.clone(),
                Mount::Wrist(arm) => CameraModel {
                    extrinsic: proprio.get(arm).ee_pose.compose(&c.model.extrinsic),
                    ..c.model.clone()
                },
            })
            .collect()
    }
}

struct Drawable {
    shape: Shape,
    inv: Pose,
    center: Vec3,
    radius: f64,
    color: [u8; 3],
}

fn drawables(w: &WorldState) -> Vec<Drawable> {
    let mut out: Vec<Drawable> = w
        .bodies
        .iter()
        .map(|b| Drawable {
            shape: b.shape,
            inv: b.pose.inverse(),
            center: b.pose.position,
            radius: b.bounding_radius(),
            color: b.color,
        })
        .collect();
    if w.grippers_visible {
        for arm in Arm::BOTH {
            let g = w.grippers.get(arm);
            let shape = Shape::Box {
                half_extents: FINGER_HALF,
            };
            out.push(Drawable {
                shape,
                inv: g.pose.inverse(),
                center: g.pose.position,
                radius: Vec3::from(FINGER_HALF).norm(),
                color: *GRIPPER_COLORS.get(arm),
            });
        }
    }
    out
}

fn trace(ds: &[Drawable], o: &Vec3, d: &Vec3) -> Option<(f64, [u8; 3])> {
    let dd = d.dot(d);
    let mut best: Option<(f64, [u8; 3])> = None;
    for x in ds {
        let oc = x.center - o;
        let along = oc.dot(d) / dd;
        let miss2 = (oc - d * along).norm_squared();
        if miss2 > x.radius * x.radius {
            continue;
        }
        let lo = x.inv.transform_point(o);
        let ld = x.inv.orientation * d;
        if let Some(t) = intersect_local(&x.shape, &lo, &ld) {
            if best.is_none_or(|(b, _)| t < b) {
                best = Some((t, x.color));
            }
        }
    }
    best
}

/// Ray-cast one camera: z-depth and flat color, 0 depth and black where nothing is hit.
pub fn render_camera(w: &WorldState, cam: &CameraModel, exec: Execution) -> CameraImage {
    let ds = drawables(w);
    let (wd, ht) = (cam.width, cam.height);
    let origin = cam.extrinsic.position;
    let rows = par::map_range(exec, ht, |v| {
        let mut rgb = vec![0u8; wd * 3];
        let mut depth = vec![0f32; wd];
        for u in 0..wd {
            // Camera-frame ray has unit z, so the hit parameter is the z-depth.
            let dir = cam.extrinsic.orientation * cam.pixel_ray(u, v);
            if let Some((t, c)) = trace(&ds, &origin, &dir) {
                depth[u] = t as f32;
                rgb[3 * u..3 * u + 3].copy_from_slice(&c);
            }
        }
        (rgb, depth)
    });
    let mut img = CameraImage {
        width: wd,
        height: ht,
        rgb: Vec::with_capacity(wd * ht * 3),
        depth: Vec::with_capacity(wd * ht),
    };
    for (rgb, depth) in rows {
        img.rgb.extend_from_slice(&rgb);
        img.depth.extend_from_slice(&depth);
    }
    img
}

pub fn render_models(w: &WorldState, cams: &[CameraModel], exec: Execution) -> BTreeMap<String, CameraImage> {
    cams.iter()
        .map(|c| (c.name.clone(), render_camera(w, c, exec)))
        .collect()
}

/// Renders every camera of the rig at the world's current gripper poses.
pub fn render(w: &WorldState, rig: &CameraRig) -> BTreeMap<String, CameraImage> {
    render_models(w, &rig.resolve(&w.proprio()), Execution::Parallel)
}
