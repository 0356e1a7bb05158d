//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::{BTreeMap, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use bimanual_core::agents::{compose, NnPolicy, OraclePolicy, PolicyParts, Topology};
use bimanual_core::augment::{perturb, transform_actions, transform_grid, PerturbSpec, RigidTransform};
use bimanual_core::camvox::{back_project, fuse, CameraModel, GridSpec, VoxelGrid};
use bimanual_core::codec::{
    bimanual_loss, decode, encode, encode_arm, make_target, ArmLogits, DiscreteArmAction, HeadLogits, ROT_BINS,
};
use bimanual_core::demo::{ArmAction, ArmProprio, CameraImage, Observation};
use bimanual_core::harness::{evaluate, generate_dataset, load_episode, stats, EvalConfig, GenOptions};
use bimanual_core::keyframes::{extract_from_actions, KeyframeParams};
use bimanual_core::par::Execution;
use bimanual_core::pose::{geodesic_deg, pose_delta};
use bimanual_core::rng::{split, stream};
use bimanual_core::simworld::{expert, reset, success, CameraRig, TaskId};
use bimanual_core::{Arm, BimanualAction, PerArm, Pose, Vec3};
use nalgebra::{Matrix4, UnitQuaternion, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_pose(r: &mut ChaCha8Rng, spec: &GridSpec) -> Pose {
    let hi = spec.max_corner();
    let p = Vec3::new(
        r.random_range(spec.origin[0]..hi.x),
        r.random_range(spec.origin[1]..hi.y),
        r.random_range(spec.origin[2]..hi.z),
    );
    // Uniform rotation from a normalized 4-D Gaussian-ish draw.
    let q = loop {
        let v = Vector4::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0f64..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    Pose::from_arrays(p.into(), [q[0], q[1], q[2], q[3]])
}

fn random_action(r: &mut ChaCha8Rng, spec: &GridSpec) -> BimanualAction {
    let mut arm = || ArmAction {
        pose: random_pose(r, spec),
        open: r.random(),
        collide: r.random(),
    };
    PerArm::new(arm(), arm())
}

fn codec_round_trip() -> Outcome {
    let spec = GridSpec::default();
    let mut r = stream(1);
    let (mut max_t, mut max_r) = (0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let a = random_action(&mut r, &spec);
        let back = decode(&encode(&a, &spec).map_err(|e| e.to_string())?, &spec).map_err(|e| e.to_string())?;
        for arm in Arm::BOTH {
            let (dt, dr) = pose_delta(&a.get(arm).pose, &back.get(arm).pose);
            max_t = max_t.max(dt);
            max_r = max_r.max(dr);
        }
    }
    // Pitch is drawn from the range the encoder produces; other pitch bins
    // alias rotations that have a canonical encoding.
    let mut failures = 0;
    for _ in 0..100_000 {
        let mut arm = || DiscreteArmAction {
            trans: spec.dims.map(|d| r.random_range(0..d)),
            rot_bins: [
                r.random_range(0..ROT_BINS),
                (r.random_range(0..36) + 54) % ROT_BINS,
                r.random_range(0..ROT_BINS),
            ],
            open: r.random(),
            collide: r.random(),
        };
        let d = PerArm::new(arm(), arm());
        let again = decode(&d, &spec).and_then(|a| encode(&a, &spec));
        if again.as_ref().ok() != Some(&d) {
            failures += 1;
        }
    }
    let bound = 0.005 * 3f64.sqrt();
    check(
        max_t <= bound + 1e-12 && max_r <= 7.5 && failures == 0,
        format!(
            "max translation error {:.3} mm (bound {:.3}), max rotation error {max_r:.3} deg, {failures} fixed-point failures",
            max_t * 1e3,
            bound * 1e3
        ),
    )
}

fn loss_analytics() -> Outcome {
    let spec = GridSpec::default();
    let mut r = stream(2);
    let target = make_target(&random_action(&mut r, &spec), &spec).map_err(|e| e.to_string())?;
    let zeros: HeadLogits = PerArm::new(ArmLogits::zeros(&spec), ArmLogits::zeros(&spec));
    let got = bimanual_loss(&zeros, &target).map_err(|e| e.to_string())?;
    let want = 2.0 * (1e6f64.ln() + 3.0 * 72f64.ln() + 2.0 * 2f64.ln());

    let saturate = |arm: Arm| {
        let t = target.get(arm);
        let mut l = ArmLogits::zeros(&spec);
        l.trans[t.trans.index] = 100.0;
        for a in 0..3 {
            l.rot[a][t.rot[a].index] = 100.0;
        }
        l.open[t.open.index] = 100.0;
        l.collide[t.collide.index] = 100.0;
        l
    };
    let sat = PerArm::new(saturate(Arm::Right), saturate(Arm::Left));
    let sat_loss = bimanual_loss(&sat, &target).map_err(|e| e.to_string())?;

    let mut skewed = PerArm::new(ArmLogits::zeros(&spec), ArmLogits::zeros(&spec));
    for (i, v) in skewed.right.trans.iter_mut().enumerate().step_by(997) {
        *v = (i % 13) as f64 * 0.1;
    }
    skewed.left.rot[1][5] = 2.0;
    skewed.right.open = [0.3, -1.0];
    let direct = bimanual_loss(&skewed, &target).map_err(|e| e.to_string())?;
    let swapped = bimanual_loss(&skewed.clone().swapped(), &target.clone().swapped()).map_err(|e| e.to_string())?;

    check(
        (got - want).abs() < 1e-4 && sat_loss < 1e-10 && direct == swapped,
        format!(
            "zero logits {got:.6} vs formula {want:.6}, saturated {sat_loss:.2e}, swap diff {:e}",
            direct - swapped
        ),
    )
}

/// Points on pixel rays of a few cameras, rendered into sparse depth images.
fn fusion_scene(r: &mut ChaCha8Rng, spec: &GridSpec) -> (Vec<CameraModel>, BTreeMap<String, CameraImage>) {
    let center = spec.center();
    let cams: Vec<CameraModel> = (0..4)
        .map(|i| {
            let a = i as f64 * std::f64::consts::FRAC_PI_2 + r.random_range(-0.3..0.3);
            let eye = center + Vec3::new(1.5 * a.cos(), 1.5 * a.sin(), r.random_range(0.3..0.9));
            CameraModel::look_at(&format!("cam{i}"), 64, 48, 30.0, eye, center)
        })
        .collect();
    let mut images: BTreeMap<String, CameraImage> = cams
        .iter()
        .map(|c| (c.name.clone(), CameraImage::blank(c.width, c.height)))
        .collect();
    let mut placed = 0;
    while placed < 1000 {
        let cam = &cams[r.random_range(0..cams.len())];
        let (u, v) = (r.random_range(0..cam.width), r.random_range(0..cam.height));
        let img = images.get_mut(&cam.name).expect("image per camera");
        let px = v * cam.width + u;
        if img.depth[px] != 0.0 {
            continue;
        }
        img.depth[px] = r.random_range(1.3f32..2.0);
        let c: [u8; 3] = r.random();
        img.rgb[3 * px..3 * px + 3].copy_from_slice(&c);
        placed += 1;
    }
    (cams, images)
}

/// Independent back-projection through the homogeneous intrinsic inverse and
/// 4x4 extrinsic, binned by direct flooring.
fn brute_force_fusion(
    cams: &[CameraModel],
    images: &BTreeMap<String, CameraImage>,
    spec: &GridSpec,
) -> HashMap<[usize; 3], (u32, [f64; 3])> {
    let mut cells: HashMap<[usize; 3], (u32, [f64; 3])> = HashMap::new();
    for cam in cams {
        let img = &images[&cam.name];
        let k_inv = Matrix4::new(
            1.0 / cam.fx,
            0.0,
            -cam.cx / cam.fx,
            0.0,
            0.0,
            1.0 / cam.fy,
            -cam.cy / cam.fy,
            0.0,
            0.0,
            0.0,
            1.0,
            0.0,
            0.0,
            0.0,
            0.0,
            1.0,
        );
        let ext = cam
            .extrinsic
            .orientation
            .to_homogeneous()
            .append_translation(&cam.extrinsic.position);
        for v in 0..cam.height {
            for u in 0..cam.width {
                let px = v * cam.width + u;
                let d = img.depth[px] as f64;
                if d <= 0.0 {
                    continue;
                }
                let p = ext * (k_inv * Vector4::new(u as f64 * d, v as f64 * d, d, 1.0));
                let mut idx = [0usize; 3];
                let mut inside = true;
                for a in 0..3 {
                    let c = ((p[a] - spec.origin[a]) / spec.voxel_size).floor();
                    inside &= c >= 0.0 && c < spec.dims[a] as f64;
                    idx[a] = c.max(0.0) as usize;
                }
                if !inside {
                    continue;
                }
                let e = cells.entry(idx).or_insert((0, [0.0; 3]));
                e.0 += 1;
                for a in 0..3 {
                    e.1[a] += img.rgb[3 * px + a] as f64;
                }
            }
        }
    }
    cells
}

fn fusion_oracle() -> Outcome {
    let spec = GridSpec::default();
    let mut r = stream(3);
    let (cams, images) = fusion_scene(&mut r, &spec);
    let oracle = brute_force_fusion(&cams, &images, &spec);
    let proprio = ArmProprio {
        gripper_open: true,
        ee_pose: Pose::identity(),
    };
    let mut worst_color = 0.0f64;
    for perm in 0..20 {
        // Shuffle camera order and rename cameras so the image map iterates differently.
        let mut order: Vec<usize> = (0..cams.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, r.random_range(0..=i));
        }
        let renamed: Vec<CameraModel> = order
            .iter()
            .enumerate()
            .map(|(k, &i)| CameraModel {
                name: format!("p{perm}_{k}"),
                ..cams[i].clone()
            })
            .collect();
        let obs = Observation {
            images: order
                .iter()
                .enumerate()
                .map(|(k, &i)| (format!("p{perm}_{k}"), images[&cams[i].name].clone()))
                .collect(),
            proprio: PerArm::new(proprio, proprio),
            timestep_fraction: 0.0,
        };
        let exec = if perm % 2 == 0 {
            Execution::Parallel
        } else {
            Execution::Sequential
        };
        let fused = fuse(&obs, &renamed, &spec, exec).map_err(|e| e.to_string())?;

        // Serial insertion of the same points in a shuffled order.
        let mut points = Vec::new();
        for c in &renamed {
            let img = &obs.images[&c.name];
            points.extend(back_project(&img.depth, &img.rgb, img.width, img.height, c).map_err(|e| e.to_string())?);
        }
        for i in (1..points.len()).rev() {
            points.swap(i, r.random_range(0..=i));
        }
        let mut serial = VoxelGrid::empty(spec);
        for (p, c) in &points {
            serial.insert(p, *c);
        }
        if serial != fused {
            return Err(format!("permutation {perm}: serial insertion differs from fusion"));
        }
        if fused.occupied_count() != oracle.len() {
            return Err(format!(
                "permutation {perm}: {} cells vs {} in brute force",
                fused.occupied_count(),
                oracle.len()
            ));
        }
        for (idx, (count, sum)) in &oracle {
            if fused.count(*idx) != *count {
                return Err(format!("cell {idx:?}: count {} vs {count}", fused.count(*idx)));
            }
            let got = fused.color(*idx).ok_or("missing color")?;
            for a in 0..3 {
                worst_color = worst_color.max((got[a] - sum[a] / *count as f64).abs());
            }
        }
    }
    let in_grid: u32 = oracle.values().map(|c| c.0).sum();
    check(
        worst_color <= 1e-9,
        format!(
            "20 permutations, {in_grid}/1000 points in the grid over {} cells, max color error {worst_color:.1e}",
            oracle.len()
        ),
    )
}

/// Direct transcription of the two rules, the terminal rule and merging.
fn brute_force_keyframes(actions: &[BimanualAction], p: &KeyframeParams) -> Vec<usize> {
    let n = actions.len();
    let still = |arm: Arm, t: usize| -> bool {
        let lo = (t + 1).saturating_sub(p.stationary_window);
        (lo..=t).all(|s| {
            let (a, b) = (&actions[s].get(arm).pose, &actions[t].get(arm).pose);
            (a.position - b.position).norm() < p.trans_eps && geodesic_deg(&a.orientation, &b.orientation) < p.rot_eps
        })
    };
    let mut cand = Vec::new();
    for t in 1..n {
        let mut fire = false;
        for arm in Arm::BOTH {
            fire |= actions[t].get(arm).open != actions[t - 1].get(arm).open;
            fire |= still(arm, t) && !still(arm, t - 1);
        }
        if fire || t == n - 1 {
            cand.push(t);
        }
    }
    cand.iter()
        .copied()
        .filter(|&k| !cand.iter().any(|&j| j > k && j - k < p.merge_gap))
        .collect()
}

fn synthetic_trajectory(r: &mut ChaCha8Rng) -> Vec<BimanualAction> {
    let n = r.random_range(10..80);
    let mut cur = PerArm::new(
        ArmAction {
            pose: Pose::from_position(Vec3::new(0.1, -0.2, 1.0)),
            open: true,
            collide: false,
        },
        ArmAction {
            pose: Pose::from_position(Vec3::new(0.1, 0.2, 1.0)),
            open: true,
            collide: false,
        },
    );
    let mut velocity = PerArm::new((Vec3::zeros(), 0.0f64), (Vec3::zeros(), 0.0f64));
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for arm in Arm::BOTH {
            if r.random_bool(0.2) {
                *velocity.get_mut(arm) = if r.random_bool(0.4) {
                    (Vec3::zeros(), 0.0)
                } else {
                    let scale = [0.0005, 0.002, 0.02][r.random_range(0..3)];
                    (
                        Vec3::new(
                            r.random_range(-1.0..1.0),
                            r.random_range(-1.0..1.0),
                            r.random_range(-1.0..1.0),
                        ) * scale,
                        r.random_range(-2.0..2.0),
                    )
                };
            }
            let (dv, dyaw) = *velocity.get(arm);
            let a = cur.get_mut(arm);
            let rot = UnitQuaternion::from_euler_angles(0.0, 0.0, dyaw.to_radians()) * a.pose.orientation;
            a.pose = Pose::from_parts(a.pose.position + dv, rot);
            if r.random_bool(0.07) {
                a.open = !a.open;
            }
        }
        out.push(cur);
    }
    out
}

fn keyframe_oracle() -> Outcome {
    let mut r = stream(4);
    let mut total = 0;
    for i in 0..50 {
        let actions = synthetic_trajectory(&mut r);
        let p = KeyframeParams {
            stationary_window: r.random_range(2..6),
            merge_gap: r.random_range(1..4),
            ..KeyframeParams::default()
        };
        let got = extract_from_actions(&actions, &p).map_err(|e| e.to_string())?;
        let want = brute_force_keyframes(&actions, &p);
        if got.indices() != want.as_slice() {
            return Err(format!("trajectory {i}: {:?} vs brute force {want:?}", got.indices()));
        }
        total += want.len();
    }
    Ok(format!("50 trajectories agree exactly ({total} keyframes)"))
}

fn expert_robustness() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for task in TaskId::ALL {
        let nvar = task.spec().variations();
        let wins = (0..100u64)
            .filter(|&i| {
                let (w, goal) = reset(task, i as usize % nvar, split(5, i)).expect("valid variation");
                expert(task, &w, &goal, i as usize % nvar, None).success
            })
            .count();
        ok &= wins >= 95;
        lines.push(format!("{task} {wins}/100"));
    }
    check(ok, lines.join(", "))
}

fn dataset_fidelity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = GenOptions {
        images: false,
        ..GenOptions::default()
    };
    let reference = [
        (TaskId::PushBox, 2.1, 4.33, 1),
        (TaskId::LiftBall, 4.0, 4.40, 1),
        (TaskId::PushButtons, 4.0, 3.47, 5),
        (TaskId::LiftTray, 5.1, 3.77, 1),
        (TaskId::HandoverEasy, 7.5, 7.17, 1),
    ];
    for (task, ..) in reference {
        generate_dataset(task, 100, 6, dir.path(), &opts).map_err(|e| e.to_string())?;
    }
    let rows = stats(dir.path()).map_err(|e| e.to_string())?;
    let mut ok = rows.len() == 5;
    let mut lines = Vec::new();
    for (task, kf, dur, vars) in reference {
        let row = rows.iter().find(|r| r.task == task.as_str()).ok_or("missing row")?;
        let pass =
            (row.keyframes - kf).abs() <= 1.5 && (row.duration_s - dur).abs() <= 0.5 * dur && row.variations == vars;
        ok &= pass && row.episodes == 100;
        lines.push(format!(
            "{task} kf {:.2}/{kf} dur {:.2}/{dur}s var {}",
            row.keyframes, row.duration_s, row.variations
        ));
    }
    check(ok, lines.join("; "))
}

fn closed_loop() -> Outcome {
    let oracle = compose(
        PolicyParts::Bimanual(Box::new(OraclePolicy::default())),
        Topology::Joint,
    )
    .map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut lines = Vec::new();
    for task in TaskId::ALL {
        let r = evaluate(&oracle, task, 100, 7, &EvalConfig::default()).map_err(|e| e.to_string())?;
        ok &= r.success_rate >= 0.95;
        lines.push(format!("oracle {task} {:.2}", r.success_rate));
    }

    // Thread-count invariance.
    let at = |threads| EvalConfig {
        threads: Some(threads),
        ..EvalConfig::default()
    };
    let same_threads = TaskId::ALL.iter().all(|&t| {
        let a = evaluate(&oracle, t, 16, 8, &at(1)).expect("evaluation");
        let b = evaluate(&oracle, t, 16, 8, &at(8)).expect("evaluation");
        a == b
    });
    ok &= same_threads;
    lines.push(format!("1 vs 8 threads identical: {same_threads}"));

    // Nearest-neighbor replay of training seeds.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rig = CameraRig::standard(64);
    let spec = GridSpec::default();
    let mut replay = Vec::new();
    for task in TaskId::ALL {
        let opts = GenOptions {
            rig: rig.clone(),
            ..GenOptions::default()
        };
        let m = generate_dataset(task, 2, 9, dir.path(), &opts).map_err(|e| e.to_string())?;
        let demos = m
            .episode_meta
            .iter()
            .map(|e| load_episode(&dir.path().join(task.as_str()).join(&e.dir), true).map(|(_, d)| d))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let nn = NnPolicy::from_demos(&demos, &rig, &spec, &m.keyframe_params, Execution::Parallel)
            .map_err(|e| e.to_string())?;
        let policy = compose(PolicyParts::Bimanual(Box::new(nn)), Topology::Joint).map_err(|e| e.to_string())?;
        let cfg = EvalConfig {
            rig: rig.clone(),
            ..EvalConfig::default()
        };
        let first = evaluate(&policy, task, 2, 9, &cfg).map_err(|e| e.to_string())?;
        let again = evaluate(&policy, task, 2, 9, &cfg).map_err(|e| e.to_string())?;
        let replayed = first.successes == 2 && first == again;
        ok &= replayed;
        replay.push(format!("{task} {}/2", first.successes));
    }
    lines.push(format!("nn replay {}", replay.join(" ")));
    check(ok, lines.join(", "))
}

fn predicate_probes() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;

    let (mut w, _) = reset(TaskId::LiftBall, 0, 1).map_err(|e| e.to_string())?;
    let ball = w.body_named("ball").ok_or("no ball")?.id;
    let mut probe = |w: &mut bimanual_core::simworld::WorldState, task, id: usize, z: f64, want: bool, label: &str| {
        w.bodies[id].pose.position.z = z;
        let got = success(w, task);
        ok &= got == want;
        lines.push(format!("{label} {z} -> {got}"));
    };
    probe(&mut w, TaskId::LiftBall, ball, 0.951, true, "ball");
    probe(&mut w, TaskId::LiftBall, ball, 0.949, false, "ball");

    let (mut w, _) = reset(TaskId::LiftTray, 0, 1).map_err(|e| e.to_string())?;
    let tray = w.body_named("tray").ok_or("no tray")?.id;
    let item = w.body_named("item").ok_or("no item")?.id;
    let rise = |w: &mut bimanual_core::simworld::WorldState, z: f64| {
        let dz = z - w.bodies[tray].pose.position.z;
        w.bodies[tray].pose.position.z = z;
        w.bodies[item].pose.position.z += dz;
    };
    for (z, want) in [(1.201, true), (1.199, false)] {
        rise(&mut w, z);
        let got = success(&w, TaskId::LiftTray);
        ok &= got == want;
        lines.push(format!("tray {z} -> {got}"));
    }
    let mut fallen = w.clone();
    rise(&mut fallen, 1.21);
    fallen.bodies[item].pose.position.y += 0.3;
    let got = success(&fallen, TaskId::LiftTray);
    ok &= !got;
    lines.push(format!("tray 1.21 item off -> {got}"));

    let (mut w, _) = reset(TaskId::HandoverEasy, 0, 1).map_err(|e| e.to_string())?;
    let item = w.body_named("item").ok_or("no item")?.id;
    w.grippers.left.open = false;
    w.grippers.left.attached = Some(item);
    for (z, want) in [(0.801, true), (0.799, false)] {
        w.bodies[item].pose.position.z = z;
        let got = success(&w, TaskId::HandoverEasy);
        ok &= got == want;
        lines.push(format!("handover {z} -> {got}"));
    }
    w.bodies[item].pose.position.z = 0.81;
    w.grippers.right.open = false;
    let got = success(&w, TaskId::HandoverEasy);
    ok &= !got;
    lines.push(format!("handover right closed -> {got}"));
    check(ok, lines.join(", "))
}

fn augmentation_equivariance() -> Outcome {
    let spec = GridSpec::default();
    let mut r = stream(10);
    let mut checked_actions = 0;
    for trial in 0..1000 {
        let mut grid = VoxelGrid::empty(spec);
        for _ in 0..40 {
            let idx = spec.dims.map(|d| r.random_range(0..d));
            grid.insert(&spec.cell_center(idx), r.random());
        }
        let shift: [i64; 3] = std::array::from_fn(|_| r.random_range(-6..=6));
        let t = RigidTransform {
            yaw_deg: 0.0,
            translation: Vec3::new(shift[0] as f64, shift[1] as f64, shift[2] as f64) * spec.voxel_size,
            pivot: spec.center(),
        };
        let moved = transform_grid(&grid, &t);
        let shifted = |idx: [usize; 3]| -> Option<[usize; 3]> {
            let mut out = [0; 3];
            for a in 0..3 {
                let v = idx[a] as i64 + shift[a];
                if v < 0 || v >= spec.dims[a] as i64 {
                    return None;
                }
                out[a] = v as usize;
            }
            Some(out)
        };
        let want: Vec<[usize; 3]> = {
            let mut v: Vec<_> = grid.occupied().filter_map(shifted).collect();
            v.sort_by_key(|i| spec.flat(*i));
            v.dedup();
            v
        };
        let got: Vec<[usize; 3]> = moved.occupied().collect();
        if got != want {
            return Err(format!("trial {trial}: occupancy shift mismatch"));
        }

        let a = random_action(&mut r, &spec);
        let moved_a = transform_actions(&[a], &t)[0];
        for arm in Arm::BOTH {
            let before = encode_arm(a.get(arm), arm, &spec).map_err(|e| e.to_string())?;
            if let Some(expected) = shifted(before.trans) {
                let after = encode_arm(moved_a.get(arm), arm, &spec).map_err(|e| format!("trial {trial}: {e}"))?;
                if after.trans != expected {
                    return Err(format!("trial {trial}: action index {:?} vs {expected:?}", after.trans));
                }
                checked_actions += 1;
            }
        }
    }
    let mut grid = VoxelGrid::empty(spec);
    grid.insert(&Vec3::new(0.1, 0.0, 1.0), [1, 2, 3]);
    let a = random_action(&mut r, &spec);
    let id = perturb(
        &grid,
        &[a],
        &PerturbSpec {
            max_trans: 0.0,
            max_rot_z: 0.0,
            rng_seed: 11,
        },
    )
    .map_err(|e| e.to_string())?;
    let exact = id.grid == grid && id.actions == vec![a];
    check(
        exact,
        format!("1000 shifts agree, {checked_actions} in-bounds action arms checked, identity bit-exact: {exact}"),
    )
}

fn taxonomy() -> Outcome {
    const T: bool = true;
    const F: bool = false;
    // temporal, spatial, physical coupling, symmetric, synchronous
    let table = [
        (TaskId::PushBox, [T, T, F, T, T]),
        (TaskId::LiftBall, [T, T, T, T, T]),
        (TaskId::PushButtons, [T, F, F, T, F]),
        (TaskId::LiftTray, [T, T, T, T, T]),
        (TaskId::HandoverEasy, [T, T, T, F, F]),
    ];
    let bad: Vec<_> = table
        .iter()
        .filter(|(t, flags)| t.spec().taxonomy.flags() != *flags)
        .map(|(t, _)| t.as_str())
        .collect();
    check(bad.is_empty(), format!("5 rows checked, mismatches: {bad:?}"))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("codec round-trip", codec_round_trip, Some(Duration::from_secs(10))),
        ("loss analytics", loss_analytics, None),
        ("fusion oracle", fusion_oracle, None),
        ("keyframe oracle", keyframe_oracle, None),
        ("expert robustness", expert_robustness, Some(Duration::from_secs(300))),
        ("dataset fidelity", dataset_fidelity, None),
        ("closed-loop harness", closed_loop, None),
        ("success predicate probes", predicate_probes, None),
        ("augmentation equivariance", augmentation_equivariance, None),
        ("taxonomy constants", taxonomy, None),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(d), Some(l)) if elapsed > l => Err(format!("{d}; exceeded {l:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("[{tag}] {:>2} {name}: {detail} ({:.2}s)", i + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
