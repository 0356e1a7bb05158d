//! Training samples: the fused scene at the start and at each keyframe, paired
//! with the next keyframe's action as classification targets.
//!
//! `targets.bin` (little-endian): `"BTGT"`, version `u32`, grid dims `3 x u32`,
//! rotation bins `u32`, sample count `u32`, then 18 `u32` per sample: episode,
//! step, and for the right arm then the left the translation cell `i j k`, the
//! three rotation bins, open and collide. Each index is the hot entry of the
//! corresponding one-hot head. Sample `n`'s grid is `grid_<n>.bvox`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use super::dataset::{load_dataset, load_episode};
use super::{HarnessError, FORMAT_VERSION};
use crate::augment::{perturb, PerturbSpec};
use crate::camvox::{fuse, write_bvox, VoxelGrid};
use crate::codec::{make_target, target_argmax, DiscreteArmAction, DiscreteBimanual, ROT_BINS};
use crate::demo::{Arm, PerArm};
use crate::par::{self, Execution};
use crate::rng;

const MAGIC: &[u8; 4] = b"BTGT";
const WORDS_PER_SAMPLE: usize = 18;

#[derive(Debug, Clone, Default)]
pub struct TargetOptions {
    /// Random rigid perturbation per sample; `None` keeps samples as recorded.
    pub augment: Option<PerturbSpec>,
    pub exec: Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetRecord {
    pub episode: usize,
    pub step: usize,
    pub action: DiscreteBimanual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    pub dims: [usize; 3],
    pub rot_bins: usize,
    pub records: Vec<TargetRecord>,
    /// Samples dropped because augmentation pushed an action off the grid.
    pub dropped: usize,
}

struct Sample {
    record: TargetRecord,
    grid: VoxelGrid,
}

fn arm_words(a: &DiscreteArmAction) -> [u32; 8] {
    let [i, j, k] = a.trans;
    let [x, y, z] = a.rot_bins;
    [i, j, k, x, y, z, a.open as usize, a.collide as usize].map(|v| v as u32)
}

/// Builds samples for every episode of a task directory and writes them to `out`.
pub fn write_targets(task_dir: &Path, out: &Path, opts: &TargetOptions) -> Result<TargetSet, HarnessError> {
    let m = load_dataset(task_dir)?;
    if !m.images {
        return Err(HarnessError::Invalid(format!(
            "{} was generated without images; voxel grids need them",
            task_dir.display()
        )));
    }
    if let Some(spec) = &opts.augment {
        spec.validate()?;
    }
    let spec = m.grid;
    let per_episode = par::map_slice(
        opts.exec,
        &m.episode_meta,
        |e| -> Result<Vec<Option<Sample>>, HarnessError> {
            let (em, demo) = load_episode(&task_dir.join(&e.dir), true)?;
            let ks = &em.keyframes;
            if ks.is_empty() {
                return Err(HarnessError::corrupt(task_dir.join(&e.dir), "no keyframes"));
            }
            let mut queries = vec![0];
            queries.extend_from_slice(&ks[..ks.len() - 1]);
            queries
                .iter()
                .zip(ks)
                .map(|(&q, &k)| {
                    let obs = &demo.steps[q].observation;
                    let cams = m.rig.resolve(&obs.proprio);
                    let grid = fuse(obs, &cams, &spec, Execution::Sequential)?;
                    let action = demo.steps[k].action;
                    let (grid, action) = match &opts.augment {
                        Some(aug) => {
                            let s = PerturbSpec {
                                rng_seed: rng::split(rng::split(aug.rng_seed, e.index as u64), q as u64),
                                ..*aug
                            };
                            let p = perturb(&grid, &[action], &s)?;
                            (p.grid, p.actions[0])
                        }
                        None => (grid, action),
                    };
                    Ok(make_target(&action, &spec).ok().map(|t| Sample {
                        record: TargetRecord {
                            episode: e.index,
                            step: q,
                            action: target_argmax(&t, &spec),
                        },
                        grid,
                    }))
                })
                .collect()
        },
    );

    fs::create_dir_all(out).map_err(HarnessError::io(out))?;
    let mut records = Vec::new();
    let mut dropped = 0;
    for ep in per_episode {
        for s in ep? {
            let Some(s) = s else {
                dropped += 1;
                continue;
            };
            let path = out.join(format!("grid_{}.bvox", records.len()));
            let f = File::create(&path).map_err(HarnessError::io(&path))?;
            write_bvox(&s.grid, BufWriter::new(f))?;
            records.push(s.record);
        }
    }
    if dropped > 0 {
        tracing::warn!(dropped, "augmented samples left the workspace");
    }
    let set = TargetSet {
        dims: spec.dims,
        rot_bins: ROT_BINS,
        records,
        dropped,
    };
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    let mut put = |v: u32| buf.extend_from_slice(&v.to_le_bytes());
    put(FORMAT_VERSION);
    set.dims.iter().for_each(|&d| put(d as u32));
    put(set.rot_bins as u32);
    put(set.records.len() as u32);
    for r in &set.records {
        put(r.episode as u32);
        put(r.step as u32);
        for arm in Arm::BOTH {
            arm_words(r.action.get(arm)).into_iter().for_each(&mut put);
        }
    }
    let path = out.join("targets.bin");
    fs::write(&path, buf).map_err(HarnessError::io(&path))?;
    Ok(set)
}

pub fn read_targets(path: &Path) -> Result<TargetSet, HarnessError> {
    let bytes = fs::read(path).map_err(HarnessError::io(path))?;
    if bytes.len() < 28 || &bytes[..4] != MAGIC {
        return Err(HarnessError::corrupt(path, "not a targets file"));
    }
    let words: Vec<usize> = bytes[4..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")) as usize)
        .collect();
    if words[0] != FORMAT_VERSION as usize {
        return Err(HarnessError::Version {
            path: path.into(),
            found: words[0] as u32,
        });
    }
    let n = words[5];
    if (bytes.len() - 4) % 4 != 0 || words.len() != 6 + n * WORDS_PER_SAMPLE {
        return Err(HarnessError::corrupt(path, format!("size does not match {n} samples")));
    }
    let arm = |w: &[usize]| -> Result<DiscreteArmAction, HarnessError> {
        let flag = |v: usize| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(HarnessError::corrupt(path, format!("flag value {v}"))),
        };
        Ok(DiscreteArmAction {
            trans: [w[0], w[1], w[2]],
            rot_bins: [w[3], w[4], w[5]],
            open: flag(w[6])?,
            collide: flag(w[7])?,
        })
    };
    let records = words[6..]
        .chunks_exact(WORDS_PER_SAMPLE)
        .map(|w| {
            Ok(TargetRecord {
                episode: w[0],
                step: w[1],
                action: PerArm::new(arm(&w[2..10])?, arm(&w[10..18])?),
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(TargetSet {
        dims: [words[1], words[2], words[3]],
        rot_bins: words[4],
        records,
        dropped: 0,
    })
}
