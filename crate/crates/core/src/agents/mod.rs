//! Policy interface and the three ways of combining per-arm and bimanual parts.

mod nn;
mod oracle;
mod subprocess;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::camvox::VoxelGrid;
use crate::codec::{DiscreteArmAction, DiscreteBimanual};
use crate::demo::{Arm, ArmProprio, PerArm};
use crate::simworld::{TaskId, WorldState};

pub use nn::{NnPolicy, NnSample};
pub use oracle::OraclePolicy;
pub use subprocess::{PolicyRequest, SubprocessPolicy};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("cannot compose: {0}")]
    Composition(String),
    #[error("bad training data: {0}")]
    Dataset(String),
    #[error("nearest-neighbor dataset is empty")]
    EmptyDataset,
    #[error("no stored sample has goal `{0}`")]
    NoMatchingGoal(String),
    #[error("policy needs a voxel grid but none was provided")]
    MissingObservation,
    #[error("policy needs privileged simulator state")]
    MissingPrivileged,
    #[error("policy protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Simulator state available only to upper-bound agents.
#[derive(Debug, Clone, Copy)]
pub struct Privileged<'a> {
    pub initial: &'a WorldState,
    pub task: TaskId,
    /// Zero-based keyframe counter of the running episode.
    pub keyframe: usize,
}

#[derive(Debug, Clone)]
pub struct AgentInput<'a> {
    /// Absent when no part of the policy asked for observations.
    pub grid: Option<&'a VoxelGrid>,
    /// An arm's entry is `None` when it is hidden from the receiving part.
    pub proprio: PerArm<Option<ArmProprio>>,
    pub goal: &'a str,
    /// Set only for a follower.
    pub leader_action: Option<DiscreteArmAction>,
    pub privileged: Option<Privileged<'a>>,
}

impl<'a> AgentInput<'a> {
    pub fn new(grid: Option<&'a VoxelGrid>, proprio: PerArm<ArmProprio>, goal: &'a str) -> Self {
        Self {
            grid,
            proprio: proprio.map(|_, p| Some(p)),
            goal,
            leader_action: None,
            privileged: None,
        }
    }

    fn only_arm(&self, arm: Arm) -> Self {
        let mut v = self.clone();
        *v.proprio.get_mut(arm.other()) = None;
        v.leader_action = None;
        v
    }
}

/// A policy controlling a single arm.
pub trait ArmPolicy: Send + Sync {
    fn name(&self) -> String;
    fn act(&self, arm: Arm, input: &AgentInput) -> Result<DiscreteArmAction, AgentError>;
    fn wants_observation(&self) -> bool {
        true
    }
}

/// A policy predicting both arms at once.
pub trait BimanualPart: Send + Sync {
    fn name(&self) -> String;
    fn act(&self, input: &AgentInput) -> Result<DiscreteBimanual, AgentError>;
    fn wants_observation(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Independent,
    LeaderFollower { leader: Arm },
    Joint,
}

impl Topology {
    pub const ALL: [Topology; 4] = [
        Topology::Independent,
        Topology::LeaderFollower { leader: Arm::Right },
        Topology::LeaderFollower { leader: Arm::Left },
        Topology::Joint,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::Independent => "independent",
            Topology::LeaderFollower { leader: Arm::Right } => "leader-right",
            Topology::LeaderFollower { leader: Arm::Left } => "leader-left",
            Topology::Joint => "joint",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topology::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| AgentError::Composition(format!("unknown topology `{s}`")))
    }
}

pub enum PolicyParts {
    /// One part per arm.
    PerArm(PerArm<Box<dyn ArmPolicy>>),
    Bimanual(Box<dyn BimanualPart>),
}

/// A composed policy mapping one input to both arms' discrete actions.
pub struct BimanualPolicy {
    parts: PolicyParts,
    topology: Topology,
}

pub fn compose(parts: PolicyParts, topology: Topology) -> Result<BimanualPolicy, AgentError> {
    match (&parts, topology) {
        (PolicyParts::Bimanual(_), Topology::Joint)
        | (PolicyParts::PerArm(_), Topology::Independent | Topology::LeaderFollower { .. }) => {
            Ok(BimanualPolicy { parts, topology })
        }
        (PolicyParts::Bimanual(_), t) => Err(AgentError::Composition(format!("{t} needs one part per arm"))),
        (PolicyParts::PerArm(_), t) => Err(AgentError::Composition(format!("{t} needs a single bimanual part"))),
    }
}

impl BimanualPolicy {
    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn name(&self) -> String {
        match &self.parts {
            PolicyParts::Bimanual(p) => p.name(),
            PolicyParts::PerArm(p) if p.right.name() == p.left.name() => p.right.name(),
            PolicyParts::PerArm(p) => format!("{}+{}", p.right.name(), p.left.name()),
        }
    }

    pub fn wants_observation(&self) -> bool {
        match &self.parts {
            PolicyParts::Bimanual(p) => p.wants_observation(),
            PolicyParts::PerArm(p) => p.right.wants_observation() || p.left.wants_observation(),
        }
    }

    pub fn act(&self, input: &AgentInput) -> Result<DiscreteBimanual, AgentError> {
        match (&self.parts, self.topology) {
            (PolicyParts::Bimanual(p), _) => p.act(input),
            (PolicyParts::PerArm(p), Topology::LeaderFollower { leader }) => {
                let mut base = input.clone();
                base.leader_action = None;
                let lead = p.get(leader).act(leader, &base)?;
                let follower = leader.other();
                let mut f_in = base;
                f_in.leader_action = Some(lead);
                let follow = p.get(follower).act(follower, &f_in)?;
                Ok(match leader {
                    Arm::Right => PerArm::new(lead, follow),
                    Arm::Left => PerArm::new(follow, lead),
                })
            }
            (PolicyParts::PerArm(p), _) => Ok(PerArm::new(
                p.right.act(Arm::Right, &input.only_arm(Arm::Right))?,
                p.left.act(Arm::Left, &input.only_arm(Arm::Left))?,
            )),
        }
    }
}
