use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{load_dataset, DatasetManifest};
use super::HarnessError;
use crate::simworld::TaskId;

/// One row of the dataset property table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub task: String,
    pub duration_s: f64,
    pub keyframes: f64,
    pub items: usize,
    pub variations: usize,
    pub episodes: usize,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

fn task_stats(dir: &Path, m: &DatasetManifest) -> Result<TaskStats, HarnessError> {
    let path = dir.join("manifest.json");
    let task: TaskId = m
        .task_id
        .parse()
        .map_err(|_| HarnessError::corrupt(&path, format!("unknown task `{}`", m.task_id)))?;
    for e in &m.episode_meta {
        let ok = e.success && e.duration_s.is_finite() && e.duration_s > 0.0 && e.keyframe_count >= 1 && e.steps >= 2;
        if !ok {
            return Err(HarnessError::corrupt(
                &path,
                format!("episode {} ({}) has inconsistent metadata", e.index, e.dir),
            ));
        }
    }
    let spec = task.spec();
    Ok(TaskStats {
        task: m.task_id.clone(),
        duration_s: mean(m.episode_meta.iter().map(|e| e.duration_s)),
        keyframes: mean(m.episode_meta.iter().map(|e| e.keyframe_count as f64)),
        items: spec.reference.items,
        variations: spec.variations(),
        episodes: m.episodes,
    })
}

/// Per-task averages of a dataset. `dir` is either one task directory or a
/// directory of task directories.
pub fn stats(dir: &Path) -> Result<Vec<TaskStats>, HarnessError> {
    if dir.join("manifest.json").is_file() {
        return Ok(vec![task_stats(dir, &load_dataset(dir)?)?]);
    }
    let mut task_dirs: Vec<_> = fs::read_dir(dir)
        .map_err(HarnessError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    task_dirs.sort();
    if task_dirs.is_empty() {
        return Err(HarnessError::Invalid(format!("no datasets under {}", dir.display())));
    }
    task_dirs.iter().map(|d| task_stats(d, &load_dataset(d)?)).collect()
}

pub fn write_stats_csv(path: &Path, rows: &[TaskStats]) -> Result<(), HarnessError> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::Io {
            path: path.into(),
            source,
        },
        other => HarnessError::Invalid(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(HarnessError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate_dataset, GenOptions};
    use crate::simworld::CameraRig;

    fn opts() -> GenOptions {
        GenOptions {
            rig: CameraRig::standard(8),
            images: false,
            ..GenOptions::default()
        }
    }

    #[test]
    fn averages_match_per_episode_values() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(TaskId::PushButtons, 7, 2, dir.path(), &opts()).unwrap();
        let rows = stats(dir.path()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.variations, 5);
        let ks: Vec<f64> = m.episode_meta.iter().map(|e| e.keyframe_count as f64).collect();
        assert_eq!(r.keyframes, ks.iter().sum::<f64>() / ks.len() as f64);

        let csv_path = dir.path().join("stats.csv");
        write_stats_csv(&csv_path, &rows).unwrap();
        let text = fs::read_to_string(&csv_path).unwrap();
        assert!(
            text.starts_with("task,duration_s,keyframes,items,variations,episodes\n"),
            "{text}"
        );
    }

    #[test]
    fn corrupt_episode_is_named() {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(TaskId::LiftTray, 2, 2, dir.path(), &opts()).unwrap();
        let path = dir.path().join("lift_tray/manifest.json");
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        v["episode_meta"][1]["keyframe_count"] = 0.into();
        fs::write(&path, v.to_string()).unwrap();
        let err = stats(dir.path()).unwrap_err();
        assert!(err.to_string().contains("episode_1"), "{err}");
        assert_eq!(err.exit_code(), 1);

        fs::write(&path, "{").unwrap();
        assert_eq!(stats(dir.path()).unwrap_err().exit_code(), 1);
    }
}
