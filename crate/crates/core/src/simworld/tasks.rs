use std::fmt;
use std::str::FromStr;

use nalgebra::UnitQuaternion;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::body::{BodyId, Dynamics, RigidBody, Shape};
use super::world::{GripperState, WorldState, TABLE_Z};
use super::SimError;
use crate::codec::{bins_to_rotation, rotation_bins};
use crate::demo::{Arm, PerArm};
use crate::pose::{Pose, Vec3};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    PushBox,
    LiftBall,
    PushButtons,
    LiftTray,
    HandoverEasy,
}

impl TaskId {
    pub const ALL: [TaskId; 5] = [
        TaskId::PushBox,
        TaskId::LiftBall,
        TaskId::PushButtons,
        TaskId::LiftTray,
        TaskId::HandoverEasy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::PushBox => "push_box",
            TaskId::LiftBall => "lift_ball",
            TaskId::PushButtons => "push_buttons",
            TaskId::LiftTray => "lift_tray",
            TaskId::HandoverEasy => "handover_easy",
        }
    }

    pub fn spec(self) -> &'static TaskSpec {
        TASKS.iter().find(|t| t.id == self).expect("every task is registered")
    }

    /// Whether closing a gripper is expected to meet an object.
    pub fn closes_on_objects(self) -> bool {
        matches!(self, TaskId::LiftBall | TaskId::LiftTray | TaskId::HandoverEasy)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| SimError::UnknownTask(s.to_string()))
    }
}

/// Coupling and coordination properties of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub temporal: bool,
    pub spatial: bool,
    pub physical: bool,
    pub symmetric: bool,
    pub synchronous: bool,
}

impl Taxonomy {
    const fn new(flags: [bool; 5]) -> Self {
        Self {
            temporal: flags[0],
            spatial: flags[1],
            physical: flags[2],
            symmetric: flags[3],
            synchronous: flags[4],
        }
    }

    pub fn flags(&self) -> [bool; 5] {
        [
            self.temporal,
            self.spatial,
            self.physical,
            self.symmetric,
            self.synchronous,
        ]
    }
}

/// Reference statistics of the original demonstrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub duration_s: f64,
    pub keyframes: f64,
    pub items: usize,
    pub variations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub id: TaskId,
    pub letter: char,
    pub language_template: &'static str,
    pub taxonomy: Taxonomy,
    pub reference: ReferenceStats,
}

impl TaskSpec {
    pub fn variations(&self) -> usize {
        match self.id {
            TaskId::PushButtons => BUTTON_PAIRS.len(),
            _ => 1,
        }
    }
}

const T: bool = true;
const F: bool = false;

const fn stats(duration_s: f64, keyframes: f64, items: usize, variations: usize) -> ReferenceStats {
    ReferenceStats {
        duration_s,
        keyframes,
        items,
        variations,
    }
}

pub static TASKS: [TaskSpec; 5] = [
    TaskSpec {
        id: TaskId::PushBox,
        letter: 'a',
        language_template: "Push the box to the red area.",
        taxonomy: Taxonomy::new([T, T, F, T, T]),
        reference: stats(4.33, 2.1, 1, 1),
    },
    TaskSpec {
        id: TaskId::LiftBall,
        letter: 'b',
        language_template: "Lift the ball.",
        taxonomy: Taxonomy::new([T, T, T, T, T]),
        reference: stats(4.40, 4.0, 1, 1),
    },
    TaskSpec {
        id: TaskId::PushButtons,
        letter: 'c',
        language_template: "Push the {a} and the {b} button.",
        taxonomy: Taxonomy::new([T, F, F, T, F]),
        reference: stats(3.47, 4.0, 3, 5),
    },
    TaskSpec {
        id: TaskId::LiftTray,
        letter: 'k',
        language_template: "Lift the tray",
        taxonomy: Taxonomy::new([T, T, T, T, T]),
        reference: stats(3.77, 5.1, 1, 1),
    },
    TaskSpec {
        id: TaskId::HandoverEasy,
        letter: 'l',
        language_template: "Handover the item.",
        taxonomy: Taxonomy::new([T, T, T, F, F]),
        reference: stats(7.17, 7.5, 1, 1),
    },
];

/// Catalogued tasks without a simulator implementation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocumentedTask {
    pub letter: char,
    pub name: &'static str,
    pub taxonomy: Taxonomy,
    pub reference: ReferenceStats,
}

pub static SPEC_ONLY_TASKS: [DocumentedTask; 8] = [
    DocumentedTask {
        letter: 'd',
        name: "pick_plate",
        taxonomy: Taxonomy::new([T, T, T, F, F]),
        reference: stats(6.47, 6.6, 1, 1),
    },
    DocumentedTask {
        letter: 'e',
        name: "put_item_in_drawer",
        taxonomy: Taxonomy::new([T, F, F, F, F]),
        reference: stats(5.57, 8.4, 5, 3),
    },
    DocumentedTask {
        letter: 'f',
        name: "put_bottle_in_fridge",
        taxonomy: Taxonomy::new([T, F, F, F, F]),
        reference: stats(9.70, 7.8, 2, 1),
    },
    DocumentedTask {
        letter: 'g',
        name: "handover_item",
        taxonomy: Taxonomy::new([T, T, T, F, T]),
        reference: stats(7.63, 7.6, 5, 5),
    },
    DocumentedTask {
        letter: 'h',
        name: "pick_notebook",
        taxonomy: Taxonomy::new([T, T, T, F, F]),
        reference: stats(3.97, 7.2, 1, 1),
    },
    DocumentedTask {
        letter: 'i',
        name: "straighten_rope",
        taxonomy: Taxonomy::new([T, T, T, F, T]),
        reference: stats(3.83, 5.9, 1, 1),
    },
    DocumentedTask {
        letter: 'j',
        name: "sweep_dustpan",
        taxonomy: Taxonomy::new([T, T, T, F, F]),
        reference: stats(4.93, 7.3, 1, 1),
    },
    DocumentedTask {
        letter: 'm',
        name: "take_tray_out_of_oven",
        taxonomy: Taxonomy::new([T, F, F, F, F]),
        reference: stats(10.13, 8.7, 2, 1),
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamedColor {
    pub name: &'static str,
    pub rgb: [u8; 3],
}

pub const PALETTE: [NamedColor; 5] = [
    NamedColor {
        name: "red",
        rgb: [220, 40, 40],
    },
    NamedColor {
        name: "green",
        rgb: [40, 180, 60],
    },
    NamedColor {
        name: "blue",
        rgb: [40, 80, 220],
    },
    NamedColor {
        name: "yellow",
        rgb: [230, 210, 40],
    },
    NamedColor {
        name: "purple",
        rgb: [150, 60, 190],
    },
];

/// Palette indices of the two target buttons per variation.
pub const BUTTON_PAIRS: [(usize, usize); 5] = [(0, 1), (0, 2), (1, 2), (0, 3), (2, 3)];

pub const BALL_RADIUS: f64 = 0.12;
pub const BOX_HALF: [f64; 3] = [0.08, 0.15, 0.08];
pub const TARGET_AREA_HALF: f64 = 0.075;
pub const TRAY_HALF: [f64; 3] = [0.08, 0.16, 0.008];
pub const HOLDER_HALF: [f64; 3] = [0.05, 0.10, 0.05];
pub const TRAY_ITEM_HALF: f64 = 0.02;
pub const BLOCK_HALF: [f64; 3] = [0.025, 0.08, 0.025];
pub const BUTTON_RADIUS: f64 = 0.03;
pub const BUTTON_HALF_HEIGHT: f64 = 0.01;
pub const BUTTON_SPACING: f64 = 0.18;
pub const BUTTON_BASE_HALF: [f64; 3] = [0.06, 0.28, 0.01];

pub const BALL_SUCCESS_Z: f64 = 0.95;
pub const TRAY_SUCCESS_Z: f64 = 1.2;
pub const HANDOVER_SUCCESS_Z: f64 = 0.8;

/// Gripper pointing straight down, on the rotation lattice.
pub fn down_orientation() -> UnitQuaternion<f64> {
    let q = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI);
    bins_to_rotation(rotation_bins(&q))
}

pub fn home_pose(arm: Arm) -> Pose {
    let y = match arm {
        Arm::Right => -0.3,
        Arm::Left => 0.3,
    };
    Pose::from_parts(Vec3::new(-0.05, y, 1.1), down_orientation())
}

fn body(name: &str, shape: Shape, center: Vec3, color: [u8; 3], dynamics: Dynamics) -> RigidBody {
    RigidBody {
        id: 0,
        name: name.to_string(),
        shape,
        pose: Pose::from_position(center),
        mass_kg: 1.0,
        color,
        graspable: false,
        dynamics,
        resting_on: None,
    }
}

fn table() -> RigidBody {
    let mut t = body(
        "table",
        Shape::Box {
            half_extents: [0.6, 0.75, 0.025],
        },
        Vec3::new(0.2, 0.0, TABLE_Z - 0.025),
        [150, 110, 70],
        Dynamics::Static,
    );
    t.mass_kg = 50.0;
    t
}

/// Fresh world for `(task, variation, seed)` and its language goal.
pub fn reset(task: TaskId, variation: usize, seed: u64) -> Result<(WorldState, String), SimError> {
    let spec = task.spec();
    if variation >= spec.variations() {
        return Err(SimError::UnknownVariation {
            task,
            variation,
            available: spec.variations(),
        });
    }
    let mut r = rng::stream(seed);
    let mut w = WorldState::empty();
    w.seed = seed;
    w.grippers_visible = true;
    w.grippers = PerArm::new(
        GripperState::new(Arm::Right, home_pose(Arm::Right)),
        GripperState::new(Arm::Left, home_pose(Arm::Left)),
    );
    w.push_body(table());
    let top = TABLE_Z;
    let goal = match task {
        TaskId::PushBox => {
            let c = Vec3::new(
                r.random_range(0.05..=0.12),
                r.random_range(-0.08..=0.08),
                top + BOX_HALF[2],
            );
            let mut b = body(
                "box",
                Shape::Box { half_extents: BOX_HALF },
                c,
                [120, 90, 60],
                Dynamics::TwoArmPush,
            );
            b.mass_kg = 50.0;
            w.push_body(b);
            let t = Vec3::new(
                c.x + r.random_range(0.22..=0.28),
                c.y + r.random_range(-0.03..=0.03),
                top + 0.0005,
            );
            w.push_body(body(
                "target_area",
                Shape::Box {
                    half_extents: [TARGET_AREA_HALF, TARGET_AREA_HALF, 0.0005],
                },
                t,
                PALETTE[0].rgb,
                Dynamics::Static,
            ));
            spec.language_template.to_string()
        }
        TaskId::LiftBall => {
            let c = Vec3::new(
                r.random_range(0.10..=0.20),
                r.random_range(-0.06..=0.06),
                top + BALL_RADIUS,
            );
            w.push_body(body(
                "ball",
                Shape::Sphere { radius: BALL_RADIUS },
                c,
                [230, 120, 30],
                Dynamics::TwoContactLift,
            ));
            spec.language_template.to_string()
        }
        TaskId::PushButtons => {
            let (a, b) = BUTTON_PAIRS[variation];
            let spare: Vec<usize> = (0..PALETTE.len()).filter(|&i| i != a && i != b).collect();
            let third = spare[r.random_range(0..spare.len())];
            let mut colors = [a, b, third];
            // The seed decides which slot holds which color.
            for i in (1..3).rev() {
                let j = r.random_range(0..=i);
                colors.swap(i, j);
            }
            let base = Vec3::new(
                r.random_range(0.15..=0.22),
                r.random_range(-0.04..=0.04),
                top + BUTTON_BASE_HALF[2],
            );
            w.push_body(body(
                "base",
                Shape::Box {
                    half_extents: BUTTON_BASE_HALF,
                },
                base,
                [90, 90, 90],
                Dynamics::Static,
            ));
            let mut ids = [0; 3];
            for (slot, &color) in colors.iter().enumerate() {
                let c = Vec3::new(
                    base.x,
                    base.y + (slot as f64 - 1.0) * BUTTON_SPACING,
                    top + 2.0 * BUTTON_BASE_HALF[2] + BUTTON_HALF_HEIGHT,
                );
                ids[slot] = w.push_body(body(
                    &format!("button_{}", PALETTE[color].name),
                    Shape::Cylinder {
                        radius: BUTTON_RADIUS,
                        half_height: BUTTON_HALF_HEIGHT,
                    },
                    c,
                    PALETTE[color].rgb,
                    Dynamics::Button,
                ));
            }
            let slot_of = |color: usize| colors.iter().position(|&c| c == color).unwrap();
            w.press_targets = vec![ids[slot_of(a)], ids[slot_of(b)]];
            spec.language_template
                .replace("{a}", PALETTE[a].name)
                .replace("{b}", PALETTE[b].name)
        }
        TaskId::LiftTray => {
            let h = Vec3::new(
                r.random_range(0.12..=0.20),
                r.random_range(-0.05..=0.05),
                top + HOLDER_HALF[2],
            );
            let holder = w.push_body(body(
                "holder",
                Shape::Box {
                    half_extents: HOLDER_HALF,
                },
                h,
                [70, 70, 80],
                Dynamics::Static,
            ));
            let t = Vec3::new(h.x, h.y, top + 2.0 * HOLDER_HALF[2] + TRAY_HALF[2]);
            let mut tray = body(
                "tray",
                Shape::Box {
                    half_extents: TRAY_HALF,
                },
                t,
                [200, 200, 210],
                Dynamics::TwoContactLift,
            );
            tray.resting_on = Some(holder);
            let tray = w.push_body(tray);
            let i = Vec3::new(
                t.x + r.random_range(-0.02..=0.02),
                t.y + r.random_range(-0.05..=0.05),
                t.z + TRAY_HALF[2] + TRAY_ITEM_HALF,
            );
            let mut item = body(
                "item",
                Shape::Box {
                    half_extents: [TRAY_ITEM_HALF; 3],
                },
                i,
                [40, 160, 200],
                Dynamics::Free,
            );
            item.resting_on = Some(tray);
            w.push_body(item);
            spec.language_template.to_string()
        }
        TaskId::HandoverEasy => {
            let c = Vec3::new(
                r.random_range(0.10..=0.20),
                r.random_range(-0.22..=-0.12),
                top + BLOCK_HALF[2],
            );
            let mut b = body(
                "item",
                Shape::Box {
                    half_extents: BLOCK_HALF,
                },
                c,
                [200, 50, 150],
                Dynamics::Free,
            );
            b.graspable = true;
            w.push_body(b);
            spec.language_template.to_string()
        }
    };
    Ok((w, goal))
}

fn named<'a>(w: &'a WorldState, name: &str) -> Option<&'a RigidBody> {
    w.body_named(name)
}

fn holder_of(w: &WorldState, id: BodyId) -> Option<Arm> {
    Arm::BOTH
        .into_iter()
        .find(|&a| w.grippers.get(a).attached == Some(id) && !w.grippers.get(a).open)
}

pub fn success(w: &WorldState, task: TaskId) -> bool {
    match task {
        TaskId::PushBox => {
            let (Some(b), Some(t)) = (named(w, "box"), named(w, "target_area")) else {
                return false;
            };
            let d = b.pose.position - t.pose.position;
            d.x.abs() <= TARGET_AREA_HALF && d.y.abs() <= TARGET_AREA_HALF
        }
        TaskId::LiftBall => named(w, "ball").is_some_and(|b| b.pose.position.z > BALL_SUCCESS_Z),
        TaskId::PushButtons => w.press_latched,
        TaskId::LiftTray => {
            let (Some(tray), Some(item)) = (named(w, "tray"), named(w, "item")) else {
                return false;
            };
            let rel = tray.pose.inverse().transform_point(&item.pose.position);
            let on_tray = rel.x.abs() <= TRAY_HALF[0] && rel.y.abs() <= TRAY_HALF[1] && rel.z > 0.0;
            tray.pose.position.z > TRAY_SUCCESS_Z && item.pose.position.z > TRAY_SUCCESS_Z && on_tray
        }
        TaskId::HandoverEasy => {
            let Some(item) = named(w, "item") else {
                return false;
            };
            let Some(arm) = holder_of(w, item.id) else {
                return false;
            };
            let other = w.grippers.get(arm.other());
            let other_idle = other.open && other.attached.is_none();
            arm == Arm::Left && other_idle && item.pose.position.z >= HANDOVER_SUCCESS_Z
        }
    }
}
