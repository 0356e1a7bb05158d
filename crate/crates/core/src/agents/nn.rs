use super::{AgentError, AgentInput, ArmPolicy, BimanualPart};
use crate::camvox::{fuse, GridSpec, VoxelGrid};
use crate::codec::{encode, DiscreteArmAction, DiscreteBimanual};
use crate::demo::{Arm, ArmProprio, Demonstration, PerArm};
use crate::keyframes::{extract_keyframes, KeyframeParams};
use crate::par::{self, Execution};
use crate::simworld::CameraRig;

/// One stored observation and the next-best action that followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct NnSample {
    pub episode: usize,
    pub keyframe: usize,
    pub goal: String,
    pub occupancy: Vec<u64>,
    /// Gripper states at the query step.
    pub open: PerArm<bool>,
    pub action: DiscreteBimanual,
}

/// Retrieval baseline: returns the action of the stored sample with the same
/// goal whose occupancy is closest in Hamming distance. Ties go to the lowest
/// episode, then the lowest keyframe.
///
/// The two gripper-open bits are appended to the occupancy bits, so a pure
/// gripper toggle, which leaves the scene unchanged, still moves the query
/// to the next sample. A hidden arm's bit never counts as a mismatch.
#[derive(Debug, Clone)]
pub struct NnPolicy {
    samples: Vec<NnSample>,
}

fn hamming(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as u64).sum()
}

fn open_mismatch(stored: &PerArm<bool>, query: &PerArm<Option<ArmProprio>>) -> u64 {
    Arm::BOTH
        .iter()
        .filter(|&&a| query.get(a).is_some_and(|p| p.gripper_open != *stored.get(a)))
        .count() as u64
}

impl NnPolicy {
    pub fn from_samples(samples: Vec<NnSample>) -> Result<Self, AgentError> {
        if samples.is_empty() {
            return Err(AgentError::EmptyDataset);
        }
        Ok(Self { samples })
    }

    /// Builds samples from rendered demonstrations: the observation at the
    /// start and at every keyframe but the last, paired with the next keyframe action.
    pub fn from_demos(
        demos: &[Demonstration],
        rig: &CameraRig,
        spec: &GridSpec,
        params: &KeyframeParams,
        exec: Execution,
    ) -> Result<Self, AgentError> {
        let data = |e: &dyn std::fmt::Display| AgentError::Dataset(e.to_string());
        let mut samples = Vec::new();
        for (episode, demo) in demos.iter().enumerate() {
            let ks = extract_keyframes(demo, params).map_err(|e| data(&e))?;
            let mut queries = vec![0];
            queries.extend_from_slice(&ks.indices()[..ks.len() - 1]);
            let built = par::map_range(exec, queries.len(), |j| -> Result<NnSample, AgentError> {
                let obs = &demo.steps[queries[j]].observation;
                if obs.images.is_empty() {
                    return Err(AgentError::Dataset(format!("episode {episode} has no images")));
                }
                let cams = rig.resolve(&obs.proprio);
                let grid = fuse(obs, &cams, spec, Execution::Sequential).map_err(|e| data(&e))?;
                let target = demo.steps[ks.indices()[j]].action;
                Ok(NnSample {
                    episode,
                    keyframe: j,
                    goal: demo.goal.clone(),
                    occupancy: grid.occupancy_bits(),
                    open: obs.proprio.map(|_, p| p.gripper_open),
                    action: encode(&target, spec).map_err(|e| data(&e))?,
                })
            });
            for s in built {
                samples.push(s?);
            }
        }
        Self::from_samples(samples)
    }

    pub fn samples(&self) -> &[NnSample] {
        &self.samples
    }

    pub fn nearest(
        &self,
        grid: &VoxelGrid,
        proprio: &PerArm<Option<ArmProprio>>,
        goal: &str,
    ) -> Result<&NnSample, AgentError> {
        let query = grid.occupancy_bits();
        self.samples
            .iter()
            .filter(|s| s.goal == goal)
            .min_by_key(|s| {
                let d = hamming(&s.occupancy, &query) + open_mismatch(&s.open, proprio);
                (d, s.episode, s.keyframe)
            })
            .ok_or_else(|| AgentError::NoMatchingGoal(goal.to_string()))
    }
}

impl BimanualPart for NnPolicy {
    fn name(&self) -> String {
        "nn".into()
    }

    fn act(&self, input: &AgentInput) -> Result<DiscreteBimanual, AgentError> {
        let grid = input.grid.ok_or(AgentError::MissingObservation)?;
        Ok(self.nearest(grid, &input.proprio, input.goal)?.action)
    }
}

impl ArmPolicy for NnPolicy {
    fn name(&self) -> String {
        "nn".into()
    }

    fn act(&self, arm: Arm, input: &AgentInput) -> Result<DiscreteArmAction, AgentError> {
        BimanualPart::act(self, input).map(|d| *d.get(arm))
    }
}
