//! Keyframe-granular closed-loop evaluation.
//!
//! At every keyframe the policy sees the fused scene and proprioception and
//! names the next gripper poses. The grippers then travel there with their
//! current open states, and the commanded open states are applied on one extra
//! step once they arrive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{AgentInput, BimanualPolicy, Privileged};
use crate::camvox::{fuse, GridSpec, VoxelGrid};
use crate::codec::decode;
use crate::demo::{Arm, BimanualAction, Observation};
use crate::par::{self, Execution};
use crate::pose::pose_delta;
use crate::rng;
use crate::simworld::{render_models, reset, step, success, CameraRig, TaskId, WorldState, DEFAULT_RESOLUTION, DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureTag {
    Collision,
    GraspMiss,
    Timeout,
    PredicateFail,
    /// The policy errored or produced an action outside the codec's range.
    InvalidAction,
}

impl FailureTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureTag::Collision => "collision",
            FailureTag::GraspMiss => "grasp_miss",
            FailureTag::Timeout => "timeout",
            FailureTag::PredicateFail => "predicate_fail",
            FailureTag::InvalidAction => "invalid_action",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub index: usize,
    pub seed: u64,
    pub variation: usize,
    pub success: bool,
    pub keyframes_used: usize,
    pub steps_taken: usize,
    pub failure_tag: Option<FailureTag>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task_id: String,
    pub policy: String,
    pub topology: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub failures: BTreeMap<FailureTag, usize>,
    pub episode_seeds: Vec<u64>,
    pub results: Vec<EpisodeResult>,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub grid: GridSpec,
    /// Cameras used when the policy wants observations.
    pub rig: CameraRig,
    pub keyframe_budget: usize,
    /// Simulated time allowed for reaching one keyframe.
    pub leg_timeout_s: f64,
    pub threads: Option<usize>,
    pub exec: Execution,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            rig: CameraRig::standard(DEFAULT_RESOLUTION),
            keyframe_budget: 25,
            leg_timeout_s: 10.0,
            threads: None,
            exec: Execution::Parallel,
        }
    }
}

fn reached(w: &WorldState, target: &BimanualAction) -> bool {
    Arm::BOTH.iter().all(|&a| {
        let (dt, dr) = pose_delta(&w.grippers.get(a).pose, &target.get(a).pose);
        dt < 1e-9 && dr < 1e-6
    })
}

fn observe(w: &WorldState, cfg: &EvalConfig) -> Result<VoxelGrid, HarnessError> {
    let proprio = w.proprio();
    let cams = cfg.rig.resolve(&proprio);
    let obs = Observation {
        images: render_models(w, &cams, Execution::Sequential),
        proprio,
        timestep_fraction: 0.0,
    };
    Ok(fuse(&obs, &cams, &cfg.grid, Execution::Sequential)?)
}

fn run_episode(
    policy: &BimanualPolicy,
    task: TaskId,
    index: usize,
    seed: u64,
    cfg: &EvalConfig,
) -> Result<EpisodeResult, HarnessError> {
    let variation = index % task.spec().variations();
    let ep_seed = rng::split(seed, index as u64);
    let (initial, goal) = reset(task, variation, ep_seed)?;
    let mut w = initial.clone();
    let leg_steps = (cfg.leg_timeout_s / DT).round() as usize;
    let mut result = EpisodeResult {
        index,
        seed: ep_seed,
        variation,
        success: false,
        keyframes_used: 0,
        steps_taken: 0,
        failure_tag: None,
        detail: None,
    };
    let mut timed_out = false;
    for k in 0..cfg.keyframe_budget {
        let grid = if policy.wants_observation() {
            Some(observe(&w, cfg)?)
        } else {
            None
        };
        let mut input = AgentInput::new(grid.as_ref(), w.proprio(), &goal);
        input.privileged = Some(Privileged {
            initial: &initial,
            task,
            keyframe: k,
        });
        let target = match policy
            .act(&input)
            .map_err(|e| e.to_string())
            .and_then(|d| decode(&d, &cfg.grid).map_err(|e| e.to_string()))
        {
            Ok(t) => t,
            Err(msg) => {
                result.failure_tag = Some(FailureTag::InvalidAction);
                result.detail = Some(msg);
                return Ok(result);
            }
        };
        result.keyframes_used = k + 1;

        let travel = target.map(|arm, a| crate::demo::ArmAction {
            open: w.grippers.get(arm).open,
            ..a
        });
        let mut n = 0;
        while !reached(&w, &target) && n < leg_steps && !w.collision {
            w = step(&w, &travel, DT);
            n += 1;
        }
        if !reached(&w, &target) && !w.collision {
            timed_out = true;
        }
        w = step(&w, &target, DT);
        result.steps_taken += n + 1;

        if w.collision {
            result.failure_tag = Some(FailureTag::Collision);
            return Ok(result);
        }
        if success(&w, task) {
            result.success = true;
            return Ok(result);
        }
    }
    result.failure_tag = Some(if task.closes_on_objects() && w.grasp_misses > 0 {
        FailureTag::GraspMiss
    } else if timed_out {
        FailureTag::Timeout
    } else {
        FailureTag::PredicateFail
    });
    Ok(result)
}

/// Runs `episodes` closed-loop episodes. Episode `i` starts from
/// `reset(task, i mod variations, split(seed, i))`, so reports do not depend on
/// the number of worker threads.
pub fn evaluate(
    policy: &BimanualPolicy,
    task: TaskId,
    episodes: usize,
    seed: u64,
    cfg: &EvalConfig,
) -> Result<EvalReport, HarnessError> {
    if cfg.keyframe_budget == 0 || !(cfg.leg_timeout_s > 0.0) {
        return Err(HarnessError::Invalid(
            "keyframe budget and leg timeout must be positive".into(),
        ));
    }
    let results = par::with_threads(cfg.threads, || {
        par::map_range(cfg.exec, episodes, |i| run_episode(policy, task, i, seed, cfg))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let successes = results.iter().filter(|r| r.success).count();
    let mut failures = BTreeMap::new();
    for tag in results.iter().filter_map(|r| r.failure_tag) {
        *failures.entry(tag).or_insert(0) += 1;
    }
    Ok(EvalReport {
        task_id: task.as_str().into(),
        policy: policy.name(),
        topology: policy.topology().as_str().into(),
        episodes,
        successes,
        success_rate: if episodes == 0 {
            0.0
        } else {
            successes as f64 / episodes as f64
        },
        failures,
        episode_seeds: results.iter().map(|r| r.seed).collect(),
        results,
    })
}
