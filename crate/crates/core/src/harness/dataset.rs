//! On-disk demonstration datasets.
//!
//! ```text
//! <out>/<task>/manifest.json            dataset manifest, written last
//! <out>/<task>/episode_<i>/manifest.json
//!                          steps.bin    time and both arms' actions per step
//!                          proprio.bin  observed proprioception per step
//!                          cam_<name>/rgb_<step>.png
//!                          cam_<name>/depth_<step>.bin
//! ```
//!
//! `steps.bin` (little-endian): step count `u32`, then per step `time f64` and,
//! for the right arm then the left, position `3 x f64`, quaternion `w x y z`
//! as `4 x f64`, `open u8`, `collide u8`. Its version is the one recorded in
//! the episode manifest.
//!
//! `proprio.bin`: `"BPRO"`, version `u32`, step count `u32`, then per step the
//! timestep fraction `f64` and, right then left, the pose as above and `open u8`.
//!
//! Depth files are raw row-major `f32` meters with the size of the matching PNG.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, FORMAT_VERSION};
use crate::camvox::GridSpec;
use crate::demo::{Arm, ArmAction, ArmProprio, CameraImage, Demonstration, Observation, PerArm, Step};
use crate::keyframes::{extract_keyframes, KeyframeParams};
use crate::par::{self, Execution};
use crate::pose::Pose;
use crate::rng;
use crate::simworld::{expert, render, reset, rollout, CameraRig, TaskId, DEFAULT_RESOLUTION};

type Result<T> = std::result::Result<T, HarnessError>;

const PROPRIO_MAGIC: &[u8; 4] = b"BPRO";
const STEP_BYTES: usize = 8 + 2 * (7 * 8 + 2);
const PROPRIO_BYTES: usize = 8 + 2 * (7 * 8 + 1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub index: usize,
    /// Directory name relative to the task directory.
    pub dir: String,
    pub variation: usize,
    pub goal: String,
    pub seed: u64,
    pub success: bool,
    pub duration_s: f64,
    pub keyframe_count: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub format_version: u32,
    pub task_id: String,
    #[serde(flatten)]
    pub meta: EpisodeMeta,
    pub keyframes: Vec<usize>,
    /// Cameras with image files; empty for image-less datasets.
    pub cameras: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub task_id: String,
    pub episodes: usize,
    pub seed: u64,
    pub rig: CameraRig,
    pub images: bool,
    pub grid: GridSpec,
    pub keyframe_params: KeyframeParams,
    /// Seeds whose expert run failed and was replaced.
    pub failed_seeds: Vec<u64>,
    pub episode_meta: Vec<EpisodeMeta>,
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub rig: CameraRig,
    /// Render and store camera images.
    pub images: bool,
    pub grid: GridSpec,
    pub keyframe_params: KeyframeParams,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub exec: Execution,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            rig: CameraRig::standard(DEFAULT_RESOLUTION),
            images: true,
            grid: GridSpec::default(),
            keyframe_params: KeyframeParams::default(),
            threads: None,
            exec: Execution::Parallel,
        }
    }
}

pub fn episode_dir(task_dir: &Path, index: usize) -> PathBuf {
    task_dir.join(format!("episode_{index}"))
}

fn put_pose(buf: &mut Vec<u8>, p: &Pose) {
    for v in p.position.iter().chain(p.wxyz().iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.at..self.at + N].try_into().expect("length checked");
        self.at += N;
        out
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
    fn flag(&mut self) -> std::result::Result<bool, String> {
        match self.take::<1>()[0] {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(format!("flag byte {b} at offset {}", self.at - 1)),
        }
    }
    fn pose(&mut self) -> Pose {
        let position = [self.f64(), self.f64(), self.f64()];
        let wxyz = [self.f64(), self.f64(), self.f64(), self.f64()];
        Pose::from_arrays(position, wxyz)
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(HarnessError::io(path))
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(HarnessError::io(path))
}

pub fn write_steps(path: &Path, steps: &[(f64, PerArm<ArmAction>)]) -> Result<()> {
    let mut buf = Vec::with_capacity(4 + steps.len() * STEP_BYTES);
    buf.extend_from_slice(&(steps.len() as u32).to_le_bytes());
    for (t, action) in steps {
        buf.extend_from_slice(&t.to_le_bytes());
        for arm in Arm::BOTH {
            let a = action.get(arm);
            put_pose(&mut buf, &a.pose);
            buf.push(a.open as u8);
            buf.push(a.collide as u8);
        }
    }
    write_all(path, &buf)
}

pub fn read_steps(path: &Path) -> Result<Vec<(f64, PerArm<ArmAction>)>> {
    let bytes = read_all(path)?;
    if bytes.len() < 4 {
        return Err(HarnessError::corrupt(path, "missing step count"));
    }
    let mut c = Cursor { bytes: &bytes, at: 0 };
    let n = c.u32() as usize;
    if bytes.len() != 4 + n * STEP_BYTES {
        return Err(HarnessError::corrupt(
            path,
            format!("{} bytes for {n} steps, expected {}", bytes.len(), 4 + n * STEP_BYTES),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = c.f64();
        let mut arm = || -> std::result::Result<ArmAction, String> {
            let pose = c.pose();
            Ok(ArmAction {
                pose,
                open: c.flag()?,
                collide: c.flag()?,
            })
        };
        let right = arm().map_err(|m| HarnessError::corrupt(path, m))?;
        let left = arm().map_err(|m| HarnessError::corrupt(path, m))?;
        out.push((t, PerArm::new(right, left)));
    }
    Ok(out)
}

pub fn write_proprio(path: &Path, rows: &[(f64, PerArm<ArmProprio>)]) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + rows.len() * PROPRIO_BYTES);
    buf.extend_from_slice(PROPRIO_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    for (frac, p) in rows {
        buf.extend_from_slice(&frac.to_le_bytes());
        for arm in Arm::BOTH {
            put_pose(&mut buf, &p.get(arm).ee_pose);
            buf.push(p.get(arm).gripper_open as u8);
        }
    }
    write_all(path, &buf)
}

pub fn read_proprio(path: &Path) -> Result<Vec<(f64, PerArm<ArmProprio>)>> {
    let bytes = read_all(path)?;
    if bytes.len() < 12 || &bytes[..4] != PROPRIO_MAGIC {
        return Err(HarnessError::corrupt(path, "not a proprioception file"));
    }
    let mut c = Cursor { bytes: &bytes, at: 4 };
    let version = c.u32();
    if version != FORMAT_VERSION {
        return Err(HarnessError::Version {
            path: path.into(),
            found: version,
        });
    }
    let n = c.u32() as usize;
    if bytes.len() != 12 + n * PROPRIO_BYTES {
        return Err(HarnessError::corrupt(
            path,
            format!("{} bytes for {n} rows", bytes.len()),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let frac = c.f64();
        let mut arm = || -> std::result::Result<ArmProprio, String> {
            let ee_pose = c.pose();
            Ok(ArmProprio {
                ee_pose,
                gripper_open: c.flag()?,
            })
        };
        let right = arm().map_err(|m| HarnessError::corrupt(path, m))?;
        let left = arm().map_err(|m| HarnessError::corrupt(path, m))?;
        out.push((frac, PerArm::new(right, left)));
    }
    Ok(out)
}

pub fn write_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(HarnessError::io(path))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let encode = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => HarnessError::Io {
            path: path.into(),
            source,
        },
        other => HarnessError::Invalid(format!("{}: {other}", path.display())),
    };
    let mut w = enc.write_header().map_err(encode)?;
    w.write_image_data(rgb).map_err(encode)?;
    w.finish().map_err(encode)
}

/// Returns `(width, height, rgb)`.
pub fn read_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let file = File::open(path).map_err(HarnessError::io(path))?;
    let decode = |e: png::DecodingError| match e {
        png::DecodingError::IoError(source) => HarnessError::Io {
            path: path.into(),
            source,
        },
        other => HarnessError::corrupt(path, other),
    };
    let mut reader = png::Decoder::new(BufReader::new(file)).read_info().map_err(decode)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| HarnessError::corrupt(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(decode)?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(HarnessError::corrupt(path, "expected 8-bit RGB"));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, buf))
}

pub fn write_depth(path: &Path, depth: &[f32]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(HarnessError::io(path))?);
    for d in depth {
        w.write_all(&d.to_le_bytes()).map_err(HarnessError::io(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}

pub fn read_depth(path: &Path, len: usize) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(HarnessError::io(path))?;
    if bytes.len() != 4 * len {
        return Err(HarnessError::corrupt(
            path,
            format!("{} bytes, expected {}", bytes.len(), 4 * len),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")))
        .collect())
}

fn camera_dir(dir: &Path, camera: &str) -> PathBuf {
    dir.join(format!("cam_{camera}"))
}

/// Writes the images of one step.
pub fn write_step_images(dir: &Path, step: usize, images: &BTreeMap<String, CameraImage>) -> Result<()> {
    for (name, img) in images {
        let cam = camera_dir(dir, name);
        fs::create_dir_all(&cam).map_err(HarnessError::io(&cam))?;
        write_png(&cam.join(format!("rgb_{step}.png")), img.width, img.height, &img.rgb)?;
        write_depth(&cam.join(format!("depth_{step}.bin")), &img.depth)?;
    }
    Ok(())
}

fn read_step_images(dir: &Path, step: usize, cameras: &[String]) -> Result<BTreeMap<String, CameraImage>> {
    let mut out = BTreeMap::new();
    for name in cameras {
        let cam = camera_dir(dir, name);
        let (width, height, rgb) = read_png(&cam.join(format!("rgb_{step}.png")))?;
        let depth = read_depth(&cam.join(format!("depth_{step}.bin")), width * height)?;
        out.insert(
            name.clone(),
            CameraImage {
                width,
                height,
                rgb,
                depth,
            },
        );
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("manifest types serialize");
    write_all(path, format!("{text}\n").as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_all(path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| HarnessError::corrupt(path, e))?;
    let found = value.get("format_version").and_then(|v| v.as_u64());
    match found {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(HarnessError::Version {
                path: path.into(),
                found: v as u32,
            })
        }
        None => return Err(HarnessError::corrupt(path, "missing format_version")),
    }
    serde_json::from_value(value).map_err(|e| HarnessError::corrupt(path, e))
}

/// Writes manifest, steps, proprioception and any images carried by `demo`.
pub fn write_episode(dir: &Path, demo: &Demonstration, manifest: &EpisodeManifest) -> Result<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let steps: Vec<_> = demo.steps.iter().map(|s| (s.time_s, s.action)).collect();
    write_steps(&dir.join("steps.bin"), &steps)?;
    let proprio: Vec<_> = demo
        .steps
        .iter()
        .map(|s| (s.observation.timestep_fraction, s.observation.proprio))
        .collect();
    write_proprio(&dir.join("proprio.bin"), &proprio)?;
    for (i, s) in demo.steps.iter().enumerate() {
        write_step_images(dir, i, &s.observation.images)?;
    }
    write_json(&dir.join("manifest.json"), manifest)
}

/// Reads an episode back. Images are loaded only when asked for.
pub fn load_episode(dir: &Path, with_images: bool) -> Result<(EpisodeManifest, Demonstration)> {
    let manifest: EpisodeManifest = read_json(&dir.join("manifest.json"))?;
    let steps = read_steps(&dir.join("steps.bin"))?;
    let proprio = read_proprio(&dir.join("proprio.bin"))?;
    if steps.len() != proprio.len() || steps.len() != manifest.meta.steps {
        return Err(HarnessError::corrupt(
            dir,
            format!(
                "manifest lists {} steps, steps.bin has {}, proprio.bin has {}",
                manifest.meta.steps,
                steps.len(),
                proprio.len()
            ),
        ));
    }
    let mut out = Vec::with_capacity(steps.len());
    for (i, ((time_s, action), (frac, p))) in steps.into_iter().zip(proprio).enumerate() {
        let images = if with_images {
            read_step_images(dir, i, &manifest.cameras)?
        } else {
            BTreeMap::new()
        };
        out.push(Step {
            time_s,
            observation: Observation {
                images,
                proprio: p,
                timestep_fraction: frac,
            },
            action,
        });
    }
    let demo = Demonstration {
        steps: out,
        goal: manifest.meta.goal.clone(),
        task_id: manifest.task_id.clone(),
        variation_id: manifest.meta.variation,
        seed: manifest.meta.seed,
        duration_s: manifest.meta.duration_s,
    };
    Ok((manifest, demo))
}

/// Reads a task directory's manifest and checks that every listed episode exists.
pub fn load_dataset(task_dir: &Path) -> Result<DatasetManifest> {
    let path = task_dir.join("manifest.json");
    let m: DatasetManifest = read_json(&path)?;
    if m.episode_meta.len() != m.episodes {
        return Err(HarnessError::corrupt(
            &path,
            format!("{} episodes declared, {} listed", m.episodes, m.episode_meta.len()),
        ));
    }
    for e in &m.episode_meta {
        if !task_dir.join(&e.dir).join("manifest.json").is_file() {
            return Err(HarnessError::corrupt(
                &path,
                format!("episode {} ({}) is missing", e.index, e.dir),
            ));
        }
    }
    Ok(m)
}

struct Generated {
    meta: EpisodeMeta,
    failed: Vec<u64>,
}

fn generate_episode(
    task: TaskId,
    index: usize,
    seed: u64,
    task_dir: &Path,
    max_failures: usize,
    opts: &GenOptions,
) -> Result<Generated> {
    let nvar = task.spec().variations();
    let variation = index % nvar;
    let base = rng::split(seed, index as u64);
    let mut failed = Vec::new();
    for attempt in 0..=max_failures as u64 {
        let s = if attempt == 0 { base } else { rng::split(base, attempt) };
        let (w, goal) = reset(task, variation, s)?;
        let run = expert(task, &w, &goal, variation, None);
        if !run.success {
            tracing::warn!(task = %task, episode = index, seed = s, "expert failed, reseeding");
            failed.push(s);
            continue;
        }
        let ks = extract_keyframes(&run.demo, &opts.keyframe_params)?;
        let name = format!("episode_{index}");
        let meta = EpisodeMeta {
            index,
            dir: name.clone(),
            variation,
            goal,
            seed: s,
            success: true,
            duration_s: run.demo.duration_s,
            keyframe_count: ks.len(),
            steps: run.demo.len(),
        };
        let manifest = EpisodeManifest {
            format_version: FORMAT_VERSION,
            task_id: task.as_str().into(),
            meta: meta.clone(),
            keyframes: ks.indices().to_vec(),
            cameras: if opts.images { opts.rig.names() } else { Vec::new() },
        };
        let dir = task_dir.join(name);
        write_episode(&dir, &run.demo, &manifest)?;
        if opts.images {
            let (worlds, _) = rollout(task, &w);
            for (i, world) in worlds.iter().enumerate() {
                write_step_images(&dir, i, &render(world, &opts.rig))?;
            }
        }
        return Ok(Generated { meta, failed });
    }
    Err(HarnessError::TooManyFailures {
        failures: failed.len(),
        wanted: index + 1,
    })
}

/// Generates `n` successful expert episodes of `task` under `out/<task>/`.
///
/// Episode `i` uses seed `split(seed, i)` and variation `i mod variations`;
/// a failed script is retried with `split(split(seed, i), attempt)`. More than
/// `10 n` failures in total abort generation.
pub fn generate_dataset(task: TaskId, n: usize, seed: u64, out: &Path, opts: &GenOptions) -> Result<DatasetManifest> {
    opts.grid.validate()?;
    opts.keyframe_params.validate()?;
    let task_dir = out.join(task.as_str());
    fs::create_dir_all(&task_dir).map_err(HarnessError::io(&task_dir))?;
    let max_failures = 10 * n;
    let results = par::with_threads(opts.threads, || {
        par::map_range(opts.exec, n, |i| {
            generate_episode(task, i, seed, &task_dir, max_failures, opts)
        })
    });
    let mut episode_meta = Vec::with_capacity(n);
    let mut failed_seeds = Vec::new();
    for r in results {
        let g = r?;
        failed_seeds.extend(g.failed);
        episode_meta.push(g.meta);
    }
    if failed_seeds.len() > max_failures {
        return Err(HarnessError::TooManyFailures {
            failures: failed_seeds.len(),
            wanted: n,
        });
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        task_id: task.as_str().into(),
        episodes: n,
        seed,
        rig: opts.rig.clone(),
        images: opts.images,
        grid: opts.grid,
        keyframe_params: opts.keyframe_params,
        failed_seeds,
        episode_meta,
    };
    write_json(&task_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Vec3;

    fn tiny_opts(images: bool) -> GenOptions {
        GenOptions {
            rig: CameraRig::standard(12),
            images,
            ..GenOptions::default()
        }
    }

    #[test]
    fn steps_round_trip_and_reject_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("steps.bin");
        let a = ArmAction {
            pose: Pose::from_position(Vec3::new(0.1, -0.2, 0.9)),
            open: true,
            collide: false,
        };
        let rows = vec![
            (0.0, PerArm::new(a, a)),
            (0.1, PerArm::new(a, ArmAction { open: false, ..a })),
        ];
        write_steps(&path, &rows).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len() as usize, 4 + 2 * STEP_BYTES);
        assert_eq!(read_steps(&path).unwrap(), rows);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_steps(&path), Err(HarnessError::Corrupt { .. })));
    }

    #[test]
    fn proprio_version_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("proprio.bin");
        let p = ArmProprio {
            gripper_open: true,
            ee_pose: Pose::identity(),
        };
        write_proprio(&path, &[(0.5, PerArm::new(p, p))]).unwrap();
        assert_eq!(read_proprio(&path).unwrap()[0].0, 0.5);
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 9;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_proprio(&path),
            Err(HarnessError::Version { found: 9, .. })
        ));
    }

    #[test]
    fn episode_round_trip_with_images() {
        let dir = tempfile::tempdir().unwrap();
        let (w, goal) = reset(TaskId::PushButtons, 2, 5).unwrap();
        let rig = CameraRig::standard(10);
        let run = expert(TaskId::PushButtons, &w, &goal, 2, Some(&rig));
        let manifest = EpisodeManifest {
            format_version: FORMAT_VERSION,
            task_id: run.demo.task_id.clone(),
            meta: EpisodeMeta {
                index: 0,
                dir: "e".into(),
                variation: 2,
                goal,
                seed: 5,
                success: true,
                duration_s: run.demo.duration_s,
                keyframe_count: 0,
                steps: run.demo.len(),
            },
            keyframes: vec![],
            cameras: rig.names(),
        };
        let ep = dir.path().join("e");
        write_episode(&ep, &run.demo, &manifest).unwrap();
        let (m, back) = load_episode(&ep, true).unwrap();
        assert_eq!(m, manifest);
        assert_eq!(back, run.demo);
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = generate_dataset(TaskId::LiftBall, 3, 11, a.path(), &tiny_opts(true)).unwrap();
        let mb = generate_dataset(TaskId::LiftBall, 3, 11, b.path(), &tiny_opts(true)).unwrap();
        assert_eq!(ma, mb);
        for e in &ma.episode_meta {
            for file in ["steps.bin", "proprio.bin", "manifest.json", "cam_front/rgb_0.png"] {
                let pa = a.path().join("lift_ball").join(&e.dir).join(file);
                let pb = b.path().join("lift_ball").join(&e.dir).join(file);
                assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{file}");
            }
        }
        assert_eq!(load_dataset(&a.path().join("lift_ball")).unwrap(), ma);
    }

    #[test]
    fn missing_episode_is_named() {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(TaskId::PushBox, 2, 1, dir.path(), &tiny_opts(false)).unwrap();
        let task_dir = dir.path().join("push_box");
        fs::remove_dir_all(task_dir.join("episode_1")).unwrap();
        let err = load_dataset(&task_dir).unwrap_err();
        assert!(err.to_string().contains("episode_1"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = generate_dataset(TaskId::PushBox, 1, 1, &blocker, &tiny_opts(false)).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
