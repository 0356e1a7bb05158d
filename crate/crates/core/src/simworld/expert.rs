//! Scripted waypoint experts.
//!
//! A script is a list of segments. Each segment moves both grippers in
//! lockstep along straight lines to their targets, then dwells for a few steps
//! and applies the gripper toggles on the last dwell step. Every segment
//! therefore produces exactly one keyframe. Waypoints sit on the action lattice
//! so an action decoder reproduces them exactly.

use super::render::{render, CameraRig};
use super::tasks::{self, down_orientation, success, TaskId};
use super::world::{step, WorldState, DT, TABLE_Z};
use crate::camvox::GridSpec;
use crate::codec::snap_pose;
use crate::demo::{Arm, ArmAction, BimanualAction, Demonstration, Observation, Step};
use crate::pose::{Pose, Vec3};

pub const DWELL_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub target: BimanualAction,
    /// Meters per second along the longer of the two paths.
    pub speed: f64,
}

fn waypoint(p: Vec3, open: bool, collide: bool) -> ArmAction {
    let raw = Pose::from_parts(p, down_orientation());
    ArmAction {
        pose: snap_pose(&raw, &GridSpec::default()).unwrap_or(raw),
        open,
        collide,
    }
}

struct Script {
    segs: Vec<Segment>,
    cur: BimanualAction,
}

impl Script {
    fn new(w: &WorldState) -> Self {
        Self {
            segs: Vec::new(),
            cur: w.hold_action(),
        }
    }

    /// Moves one or both arms. `None` keeps an arm where it is.
    fn seg(&mut self, right: Option<(Vec3, bool)>, left: Option<(Vec3, bool)>, collide: bool, speed: f64) {
        let mut next = self.cur;
        for (arm, spec) in [(Arm::Right, right), (Arm::Left, left)] {
            let a = next.get_mut(arm);
            if let Some((p, open)) = spec {
                *a = waypoint(p, open, collide);
            } else {
                a.collide = collide;
            }
        }
        self.segs.push(Segment { target: next, speed });
        self.cur = next;
    }

    fn toggle(&mut self, arm: Arm, open: bool) {
        let mut next = self.cur;
        next.get_mut(arm).open = open;
        self.segs.push(Segment {
            target: next,
            speed: 1.0,
        });
        self.cur = next;
    }
}

fn center(w: &WorldState, name: &str) -> Vec3 {
    w.body_named(name)
        .map(|b| b.pose.position)
        .unwrap_or_else(|| panic!("task world lacks `{name}`"))
}

/// Waypoint script for a freshly reset world.
pub fn plan(task: TaskId, w: &WorldState) -> Vec<Segment> {
    let mut s = Script::new(w);
    match task {
        TaskId::PushBox => {
            let b = center(w, "box");
            let t = center(w, "target_area");
            let back = b.x - tasks::BOX_HALF[0] - 0.02;
            let z = TABLE_Z + 0.06;
            let dy = 0.07;
            s.seg(
                Some((Vec3::new(back, b.y - dy, z), true)),
                Some((Vec3::new(back, b.y + dy, z), true)),
                false,
                0.25,
            );
            let push_x = t.x - tasks::BOX_HALF[0] - 0.005;
            s.seg(
                Some((Vec3::new(push_x, t.y - dy, z), true)),
                Some((Vec3::new(push_x, t.y + dy, z), true)),
                true,
                0.2,
            );
        }
        TaskId::LiftBall => {
            let c = center(w, "ball");
            let reach = tasks::BALL_RADIUS + 0.005;
            let wide = reach + 0.075;
            s.seg(
                Some((Vec3::new(c.x, c.y - wide, c.z + 0.08), true)),
                Some((Vec3::new(c.x, c.y + wide, c.z + 0.08), true)),
                false,
                0.3,
            );
            s.seg(
                Some((Vec3::new(c.x, c.y - wide, c.z), true)),
                Some((Vec3::new(c.x, c.y + wide, c.z), true)),
                false,
                0.1,
            );
            s.seg(
                Some((Vec3::new(c.x, c.y - reach, c.z), false)),
                Some((Vec3::new(c.x, c.y + reach, c.z), false)),
                true,
                0.1,
            );
            let up = c.z + 0.18;
            s.seg(
                Some((Vec3::new(c.x, c.y - reach, up), false)),
                Some((Vec3::new(c.x, c.y + reach, up), false)),
                true,
                0.2,
            );
        }
        TaskId::PushButtons => {
            let mut targets: Vec<Vec3> = w.press_targets.iter().map(|&id| w.body(id).pose.position).collect();
            targets.sort_by(|a, b| a.y.total_cmp(&b.y));
            let (r, l) = (targets[0], targets[1]);
            let top = r.z + tasks::BUTTON_HALF_HEIGHT;
            let hover = top + 0.08;
            let press = top + 0.0075;
            s.seg(
                Some((Vec3::new(r.x, r.y, hover), false)),
                Some((Vec3::new(l.x, l.y, hover), false)),
                false,
                0.3,
            );
            s.seg(
                Some((Vec3::new(r.x, r.y, press), false)),
                Some((Vec3::new(l.x, l.y, press), false)),
                true,
                0.15,
            );
            s.seg(
                Some((Vec3::new(r.x, r.y, hover + 0.03), false)),
                Some((Vec3::new(l.x, l.y, hover + 0.03), false)),
                false,
                0.15,
            );
        }
        TaskId::LiftTray => {
            let c = center(w, "tray");
            let reach = tasks::TRAY_HALF[1] + 0.005;
            let wide = reach + 0.085;
            s.seg(
                Some((Vec3::new(c.x, c.y - wide, c.z + 0.06), true)),
                Some((Vec3::new(c.x, c.y + wide, c.z + 0.06), true)),
                false,
                0.3,
            );
            s.seg(
                Some((Vec3::new(c.x, c.y - wide, c.z), true)),
                Some((Vec3::new(c.x, c.y + wide, c.z), true)),
                false,
                0.15,
            );
            s.seg(
                Some((Vec3::new(c.x, c.y - reach, c.z), false)),
                Some((Vec3::new(c.x, c.y + reach, c.z), false)),
                true,
                0.15,
            );
            let up = c.z + 0.44;
            s.seg(
                Some((Vec3::new(c.x, c.y - reach, up), false)),
                Some((Vec3::new(c.x, c.y + reach, up), false)),
                true,
                0.3,
            );
        }
        TaskId::HandoverEasy => {
            let b = center(w, "item");
            let grip = tasks::BLOCK_HALF[1] - 0.02;
            let r0 = Vec3::new(b.x, b.y - grip, b.z);
            s.seg(Some((r0 + Vec3::new(0.0, 0.0, 0.1), true)), None, false, 0.3);
            s.seg(Some((r0, false)), None, true, 0.15);
            let h = Vec3::new(0.15, -0.02, 0.95);
            s.seg(
                Some((h - Vec3::new(0.0, grip, 0.0), false)),
                Some((h + Vec3::new(0.0, 0.22, 0.0), true)),
                false,
                0.25,
            );
            s.seg(None, Some((h + Vec3::new(0.0, grip, 0.0), false)), true, 0.2);
            s.toggle(Arm::Right, true);
            s.seg(Some((Vec3::new(h.x, -0.25, 1.0), true)), None, false, 0.3);
            s.seg(None, Some((h + Vec3::new(0.0, 0.15 + grip, 0.05), false)), false, 0.25);
        }
    }
    s.segs
}

fn lerp_pose(a: &Pose, b: &Pose, t: f64) -> Pose {
    if t >= 1.0 {
        return *b;
    }
    Pose::from_parts(
        a.position + (b.position - a.position) * t,
        a.orientation
            .try_slerp(&b.orientation, t, 1e-12)
            .unwrap_or(b.orientation),
    )
}

/// Per-step commands realizing a script from the given start.
pub fn commands(start: &BimanualAction, segs: &[Segment]) -> Vec<BimanualAction> {
    let mut out = Vec::new();
    let mut cur = *start;
    for seg in segs {
        let dist = Arm::BOTH
            .iter()
            .map(|&a| (seg.target.get(a).pose.position - cur.get(a).pose.position).norm())
            .fold(0.0, f64::max);
        let n = (dist / (seg.speed * DT) - 1e-9).ceil().max(0.0) as usize;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            out.push(cur.map(|arm, a| ArmAction {
                pose: lerp_pose(&a.pose, &seg.target.get(arm).pose, t),
                open: a.open,
                collide: seg.target.get(arm).collide,
            }));
        }
        for i in 0..DWELL_STEPS {
            let last = i + 1 == DWELL_STEPS;
            out.push(seg.target.map(|arm, t| ArmAction {
                open: if last { t.open } else { cur.get(arm).open },
                ..t
            }));
        }
        cur = seg.target;
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExpertRun {
    pub demo: Demonstration,
    pub success: bool,
    pub final_world: WorldState,
}

fn observe(w: &WorldState, rig: Option<&CameraRig>) -> Observation {
    Observation {
        images: rig.map(|r| render(w, r)).unwrap_or_default(),
        proprio: w.proprio(),
        timestep_fraction: 0.0,
    }
}

/// World states visited by the expert, starting with `w`, and the commands between them.
pub fn rollout(task: TaskId, w: &WorldState) -> (Vec<WorldState>, Vec<BimanualAction>) {
    let cmds = commands(&w.hold_action(), &plan(task, w));
    let mut worlds = Vec::with_capacity(cmds.len() + 1);
    worlds.push(w.clone());
    for c in &cmds {
        let next = step(worlds.last().expect("non-empty"), c, DT);
        worlds.push(next);
    }
    (worlds, cmds)
}

/// Runs the scripted expert from `w`, recording one step per tick.
///
/// Actions record the gripper state reached at each tick together with the
/// segment's collision annotation. Images are rendered only when a rig is given.
pub fn expert(task: TaskId, w: &WorldState, goal: &str, variation: usize, rig: Option<&CameraRig>) -> ExpertRun {
    let (mut worlds, cmds) = rollout(task, w);
    let n = worlds.len();
    let steps = worlds
        .iter()
        .enumerate()
        .map(|(i, world)| {
            let mut action = world.hold_action();
            if i > 0 {
                action.right.collide = cmds[i - 1].right.collide;
                action.left.collide = cmds[i - 1].left.collide;
            }
            let mut observation = observe(world, rig);
            observation.timestep_fraction = i as f64 / (n - 1).max(1) as f64;
            Step {
                time_s: i as f64 * DT,
                observation,
                action,
            }
        })
        .collect();
    let world = worlds.pop().expect("non-empty");
    ExpertRun {
        success: success(&world, task),
        demo: Demonstration {
            duration_s: (n - 1) as f64 * DT,
            steps,
            goal: goal.to_string(),
            task_id: task.as_str().to_string(),
            variation_id: variation,
            seed: w.seed,
        },
        final_world: world,
    }
}

/// Keyframe targets of the script: one action per segment.
pub fn keyframe_waypoints(task: TaskId, w: &WorldState) -> Vec<BimanualAction> {
    plan(task, w).into_iter().map(|s| s.target).collect()
}
