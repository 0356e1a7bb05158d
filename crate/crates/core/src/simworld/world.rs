use serde::{Deserialize, Serialize};

use super::body::{BodyId, Dynamics, RigidBody, Shape};
use crate::demo::{Arm, ArmProprio, BimanualAction, PerArm};
use crate::pose::{geodesic_deg, Pose, Vec3};

pub const DT: f64 = 0.1;
pub const MAX_SPEED: f64 = 0.5;
pub const MAX_ROT_SPEED_DEG: f64 = 90.0;
pub const GRIPPER_RADIUS: f64 = 0.05;
pub const GRASP_RADIUS: f64 = 0.02;
pub const CONTACT_TOL: f64 = 0.02;
pub const ANTIPODAL_DEG: f64 = 150.0;
pub const PUSH_STANDOFF: f64 = 0.005;
/// Penetrations deeper than one step at the speed cap do not count as face contact.
const PUSH_MAX_DEPTH: f64 = MAX_SPEED * DT;
pub const PRESS_HEIGHT: f64 = 0.015;
pub const TABLE_Z: f64 = 0.752;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub arm: Arm,
    pub pose: Pose,
    pub open: bool,
    pub attached: Option<BodyId>,
    /// Body pose in the gripper frame, valid while attached.
    pub grasp_offset: Pose,
}

impl GripperState {
    pub fn new(arm: Arm, pose: Pose) -> Self {
        Self {
            arm,
            pose,
            open: true,
            attached: None,
            grasp_offset: Pose::identity(),
        }
    }

    pub fn proprio(&self) -> ArmProprio {
        ArmProprio {
            gripper_open: self.open,
            ee_pose: self.pose,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bodies: Vec<RigidBody>,
    pub grippers: PerArm<GripperState>,
    pub time_s: f64,
    pub seed: u64,
    /// Set when the grippers came too close; the world is frozen afterwards.
    pub collision: bool,
    /// Buttons pressed during the last step.
    pub pressed: Vec<BodyId>,
    /// Buttons that must be pressed together.
    pub press_targets: Vec<BodyId>,
    pub press_latched: bool,
    /// Closures that found nothing to hold or touch.
    pub grasp_misses: u32,
    pub grippers_visible: bool,
}

impl WorldState {
    /// No bodies and invisible grippers far apart.
    pub fn empty() -> Self {
        Self {
            bodies: Vec::new(),
            grippers: PerArm::new(
                GripperState::new(Arm::Right, Pose::from_position(Vec3::new(0.0, -10.0, 0.0))),
                GripperState::new(Arm::Left, Pose::from_position(Vec3::new(0.0, 10.0, 0.0))),
            ),
            time_s: 0.0,
            seed: 0,
            collision: false,
            pressed: Vec::new(),
            press_targets: Vec::new(),
            press_latched: false,
            grasp_misses: 0,
            grippers_visible: false,
        }
    }

    pub fn body(&self, id: BodyId) -> &RigidBody {
        &self.bodies[id]
    }

    pub fn body_named(&self, name: &str) -> Option<&RigidBody> {
        self.bodies.iter().find(|b| b.name == name)
    }

    pub fn proprio(&self) -> PerArm<ArmProprio> {
        self.grippers.map(|_, g| g.proprio())
    }

    /// The current gripper state expressed as an action.
    pub fn hold_action(&self) -> BimanualAction {
        self.grippers.map(|_, g| crate::demo::ArmAction {
            pose: g.pose,
            open: g.open,
            collide: false,
        })
    }

    /// Adds a body, assigning the next id.
    pub fn push_body(&mut self, mut b: RigidBody) -> BodyId {
        b.id = self.bodies.len();
        self.bodies.push(b);
        self.bodies.len() - 1
    }

    pub fn gripper_distance(&self) -> f64 {
        (self.grippers.right.pose.position - self.grippers.left.pose.position).norm()
    }
}

fn pose_finite(p: &Pose) -> bool {
    p.position.iter().all(|v| v.is_finite()) && p.wxyz().iter().all(|v| v.is_finite())
}

/// Straight-line motion toward `to`, capped in translation and rotation.
/// Lands exactly on `to` once it is within one step.
pub fn move_toward(from: &Pose, to: &Pose, dt: f64) -> Pose {
    if !pose_finite(to) || !(dt > 0.0) {
        return *from;
    }
    let dist = (to.position - from.position).norm();
    let angle = geodesic_deg(&from.orientation, &to.orientation);
    let mut frac: f64 = 1.0;
    if dist > 0.0 {
        frac = frac.min(MAX_SPEED * dt / dist);
    }
    if angle > 0.0 {
        frac = frac.min(MAX_ROT_SPEED_DEG * dt / angle);
    }
    if frac >= 1.0 {
        return *to;
    }
    let orientation = from
        .orientation
        .try_slerp(&to.orientation, frac, 1e-12)
        .unwrap_or(to.orientation);
    Pose::from_parts(from.position + (to.position - from.position) * frac, orientation)
}

/// Advances the world by `dt` seconds under `cmd`.
pub fn step(w: &WorldState, cmd: &BimanualAction, dt: f64) -> WorldState {
    let mut n = w.clone();
    n.time_s += dt;
    n.pressed.clear();
    if w.collision {
        return n;
    }

    let moved = PerArm::new(
        move_toward(&w.grippers.right.pose, &cmd.right.pose, dt),
        move_toward(&w.grippers.left.pose, &cmd.left.pose, dt),
    );
    if (moved.right.position - moved.left.position).norm() < 2.0 * GRIPPER_RADIUS {
        n.collision = true;
        return n;
    }
    for arm in Arm::BOTH {
        n.grippers.get_mut(arm).pose = *moved.get(arm);
    }

    carry_attached(w, &mut n);
    for id in 0..n.bodies.len() {
        let held = n.grippers.right.attached == Some(id) || n.grippers.left.attached == Some(id);
        if held {
            continue;
        }
        match n.bodies[id].dynamics {
            Dynamics::TwoArmPush => push_body(&mut n, id),
            Dynamics::TwoContactLift => lift_body(w, &mut n, id),
            _ => {}
        }
    }
    follow_supports(w, &mut n);
    clamp_to_table(&mut n);
    toggle_grippers(&mut n, cmd);
    detect_presses(w, &mut n);
    n
}

fn carry_attached(w: &WorldState, n: &mut WorldState) {
    for id in 0..n.bodies.len() {
        let holders: Vec<Arm> = Arm::BOTH
            .into_iter()
            .filter(|&a| w.grippers.get(a).attached == Some(id))
            .collect();
        match holders.as_slice() {
            [arm] => {
                let g = n.grippers.get(*arm);
                n.bodies[id].pose = g.pose.compose(&g.grasp_offset);
            }
            [_, _] => {
                let delta = Arm::BOTH
                    .iter()
                    .map(|&a| n.grippers.get(a).pose.position - w.grippers.get(a).pose.position)
                    .sum::<Vec3>()
                    / 2.0;
                n.bodies[id].pose.position += delta;
                let body = n.bodies[id].pose;
                for a in Arm::BOTH {
                    let g = n.grippers.get_mut(a);
                    g.grasp_offset = g.pose.inverse().compose(&body);
                }
            }
            _ => {}
        }
    }
}

fn push_body(n: &mut WorldState, id: BodyId) {
    let body = &n.bodies[id];
    let mut contacts = Vec::with_capacity(2);
    for arm in Arm::BOTH {
        let p = n.grippers.get(arm).pose.position;
        let sd = body.signed_distance(&p);
        let pen = PUSH_STANDOFF - sd;
        if pen <= 0.0 || sd < -PUSH_MAX_DEPTH {
            return;
        }
        match body.nearest_face(&p) {
            Some(face) if face.z == 0.0 => contacts.push((face, pen)),
            _ => return,
        }
    }
    let (f0, p0) = contacts[0];
    let (f1, p1) = contacts[1];
    if f0 != f1 {
        return;
    }
    let mut normal = body.pose.orientation * f0;
    normal.z = 0.0;
    let Some(normal) = normal.try_normalize(1e-12) else {
        return;
    };
    n.bodies[id].pose.position -= normal * p0.min(p1);
}

fn lift_body(w: &WorldState, n: &mut WorldState, id: BodyId) {
    let body = &w.bodies[id];
    let c = body.pose.position;
    let before = w.grippers.map(|_, g| g.pose.position);
    if Arm::BOTH
        .iter()
        .any(|&a| body.signed_distance(before.get(a)).abs() > CONTACT_TOL)
    {
        return;
    }
    let (vr, vl) = (before.right - c, before.left - c);
    let angle = vr.angle(&vl).to_degrees();
    if !(angle >= ANTIPODAL_DEG) {
        return;
    }
    let dz = PerArm::new(
        n.grippers.right.pose.position.z - before.right.z,
        n.grippers.left.pose.position.z - before.left.z,
    );
    let common = if dz.right > 0.0 && dz.left > 0.0 {
        dz.right.min(dz.left)
    } else if dz.right < 0.0 && dz.left < 0.0 {
        dz.right.max(dz.left)
    } else {
        0.0
    };
    n.bodies[id].pose.position.z += common;
}

/// Bodies resting on a moved support follow it rigidly.
fn follow_supports(w: &WorldState, n: &mut WorldState) {
    for id in 0..n.bodies.len() {
        let Some(s) = n.bodies[id].resting_on else {
            continue;
        };
        let (old, new) = (w.bodies[s].pose, n.bodies[s].pose);
        if old == new {
            continue;
        }
        let delta = new.compose(&old.inverse());
        n.bodies[id].pose = delta.compose(&n.bodies[id].pose);
    }
}

fn clamp_to_table(n: &mut WorldState) {
    for b in n.bodies.iter_mut() {
        if b.dynamics == Dynamics::Static || b.dynamics == Dynamics::Button {
            continue;
        }
        let low = b.lowest_z();
        if low < TABLE_Z {
            b.pose.position.z += TABLE_Z - low;
        }
    }
}

fn toggle_grippers(n: &mut WorldState, cmd: &BimanualAction) {
    for arm in Arm::BOTH {
        let want = cmd.get(arm).open;
        if want == n.grippers.get(arm).open {
            continue;
        }
        if want {
            let g = n.grippers.get_mut(arm);
            g.open = true;
            g.attached = None;
            continue;
        }
        let p = n.grippers.get(arm).pose.position;
        let target = n
            .bodies
            .iter()
            .filter(|b| b.graspable)
            .map(|b| (b.signed_distance(&p), b.id))
            .filter(|&(sd, _)| sd <= GRASP_RADIUS)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let touching = n.bodies.iter().any(|b| {
            matches!(
                b.dynamics,
                Dynamics::Free | Dynamics::TwoArmPush | Dynamics::TwoContactLift
            ) && b.signed_distance(&p) <= CONTACT_TOL
        });
        let g_pose = n.grippers.get(arm).pose;
        let g = n.grippers.get_mut(arm);
        g.open = false;
        match target {
            Some((_, id)) => {
                g.attached = Some(id);
                g.grasp_offset = g_pose.inverse().compose(&n.bodies[id].pose);
                n.bodies[id].resting_on = None;
            }
            None if !touching => n.grasp_misses += 1,
            None => {}
        }
    }
}

fn detect_presses(w: &WorldState, n: &mut WorldState) {
    for b in &n.bodies {
        let (Dynamics::Button, Shape::Cylinder { radius, half_height }) = (b.dynamics, b.shape) else {
            continue;
        };
        let top = b.pose.position.z + half_height;
        let pressed = Arm::BOTH.iter().any(|&a| {
            let p = n.grippers.get(a).pose.position;
            let dz = p.z - w.grippers.get(a).pose.position.z;
            let horiz = (p.x - b.pose.position.x).hypot(p.y - b.pose.position.y);
            let h = p.z - top;
            horiz <= radius && (0.0..=PRESS_HEIGHT).contains(&h) && dz <= 0.0
        });
        if pressed {
            n.pressed.push(b.id);
        }
    }
    if !n.press_targets.is_empty() && n.press_targets.iter().all(|t| n.pressed.contains(t)) {
        n.press_latched = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::ArmAction;

    fn sphere(name: &str, c: Vec3, r: f64, dynamics: Dynamics) -> RigidBody {
        RigidBody {
            id: 0,
            name: name.into(),
            shape: Shape::Sphere { radius: r },
            pose: Pose::from_position(c),
            mass_kg: 1.0,
            color: [200, 0, 0],
            graspable: dynamics == Dynamics::Free,
            dynamics,
            resting_on: None,
        }
    }

    fn world_with(bodies: Vec<RigidBody>, r: Vec3, l: Vec3) -> WorldState {
        let mut w = WorldState::empty();
        for b in bodies {
            w.push_body(b);
        }
        w.grippers.right.pose = Pose::from_position(r);
        w.grippers.left.pose = Pose::from_position(l);
        w
    }

    fn cmd(r: Vec3, ro: bool, l: Vec3, lo: bool) -> BimanualAction {
        PerArm::new(
            ArmAction {
                pose: Pose::from_position(r),
                open: ro,
                collide: false,
            },
            ArmAction {
                pose: Pose::from_position(l),
                open: lo,
                collide: false,
            },
        )
    }

    #[test]
    fn holding_still_only_advances_time() {
        let w = world_with(
            vec![sphere("ball", Vec3::new(0.2, 0.0, 0.9), 0.1, Dynamics::TwoContactLift)],
            Vec3::new(0.2, -0.105, 0.9),
            Vec3::new(0.2, 0.105, 0.9),
        );
        let n = step(&w, &w.hold_action(), DT);
        let mut expect = w.clone();
        expect.time_s = DT;
        assert_eq!(n, expect);
    }

    #[test]
    fn speed_is_capped() {
        let w = world_with(vec![], Vec3::new(0.0, -0.5, 1.0), Vec3::new(0.0, 0.5, 1.0));
        let n = step(
            &w,
            &cmd(Vec3::new(1.0, -0.5, 1.0), true, Vec3::new(0.0, 0.5, 1.0), true),
            DT,
        );
        assert!((n.grippers.right.pose.position.x - MAX_SPEED * DT).abs() < 1e-12);
        let near = step(
            &w,
            &cmd(Vec3::new(0.01, -0.5, 1.0), true, Vec3::new(0.0, 0.5, 1.0), true),
            DT,
        );
        assert_eq!(near.grippers.right.pose.position, Vec3::new(0.01, -0.5, 1.0));
    }

    #[test]
    fn grippers_collide_and_freeze() {
        let w = world_with(vec![], Vec3::new(0.0, -0.06, 1.0), Vec3::new(0.0, 0.06, 1.0));
        let n = step(
            &w,
            &cmd(Vec3::new(0.0, 0.0, 1.0), true, Vec3::new(0.0, 0.06, 1.0), true),
            DT,
        );
        assert!(n.collision);
        assert_eq!(n.grippers, w.grippers);
        let m = step(
            &n,
            &cmd(Vec3::new(0.0, -0.5, 1.0), true, Vec3::new(0.0, 0.5, 1.0), true),
            DT,
        );
        assert_eq!(m.grippers, w.grippers);
    }

    #[test]
    fn grasp_carries_and_release_holds() {
        let w = world_with(
            vec![sphere("item", Vec3::new(0.1, -0.2, 0.8), 0.02, Dynamics::Free)],
            Vec3::new(0.1, -0.2, 0.83),
            Vec3::new(0.1, 0.3, 1.0),
        );
        let here = w.hold_action();
        let mut c = here;
        c.right.open = false;
        let g = step(&w, &c, DT);
        assert_eq!(g.grippers.right.attached, Some(0));
        c.right.pose.position.z += 0.04;
        let up = step(&g, &c, DT);
        assert!((up.bodies[0].pose.position.z - 0.84).abs() < 1e-12);
        c.right.open = true;
        let rel = step(&up, &c, DT);
        assert_eq!(rel.grippers.right.attached, None);
        assert_eq!(rel.bodies[0].pose, up.bodies[0].pose);
    }

    #[test]
    fn closing_in_air_counts_a_miss() {
        let w = world_with(vec![], Vec3::new(0.0, -0.3, 1.0), Vec3::new(0.0, 0.3, 1.0));
        let mut c = w.hold_action();
        c.left.open = false;
        let n = step(&w, &c, DT);
        assert!(!n.grippers.left.open);
        assert_eq!(n.grasp_misses, 1);
    }

    #[test]
    fn antipodal_lift_integrates_exactly() {
        let c0 = Vec3::new(0.2, 0.0, 0.872);
        let mut w = world_with(
            vec![sphere("ball", c0, 0.12, Dynamics::TwoContactLift)],
            c0 - Vec3::new(0.0, 0.125, 0.0),
            c0 + Vec3::new(0.0, 0.125, 0.0),
        );
        let up = Vec3::new(0.0, 0.0, 1.0);
        let target = cmd(
            w.grippers.right.pose.position + up,
            true,
            w.grippers.left.pose.position + up,
            true,
        );
        for _ in 0..25 {
            w = step(&w, &target, DT);
        }
        assert!((w.bodies[0].pose.position.z - (c0.z + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn single_contact_does_not_lift() {
        let c0 = Vec3::new(0.2, 0.0, 0.872);
        let mut w = world_with(
            vec![sphere("ball", c0, 0.12, Dynamics::TwoContactLift)],
            c0 - Vec3::new(0.0, 0.125, 0.0),
            Vec3::new(0.2, 0.4, 1.0),
        );
        let up = Vec3::new(0.0, 0.0, 0.3);
        let target = cmd(
            w.grippers.right.pose.position + up,
            true,
            Vec3::new(0.2, 0.4, 1.3),
            true,
        );
        for _ in 0..10 {
            w = step(&w, &target, DT);
        }
        assert_eq!(w.bodies[0].pose.position, c0);
    }
}
