use super::{AgentError, AgentInput, ArmPolicy, BimanualPart};
use crate::camvox::GridSpec;
use crate::codec::{encode, DiscreteArmAction, DiscreteBimanual};
use crate::demo::Arm;
use crate::simworld::expert::keyframe_waypoints;

/// Replays the scripted expert's waypoints from privileged simulator state.
///
/// Past the end of the script it keeps returning the final waypoint.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePolicy {
    pub spec: GridSpec,
}

impl OraclePolicy {
    pub fn new(spec: GridSpec) -> Self {
        Self { spec }
    }
}

impl BimanualPart for OraclePolicy {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn act(&self, input: &AgentInput) -> Result<DiscreteBimanual, AgentError> {
        let p = input.privileged.ok_or(AgentError::MissingPrivileged)?;
        let waypoints = keyframe_waypoints(p.task, p.initial);
        let target = waypoints
            .get(p.keyframe.min(waypoints.len().saturating_sub(1)))
            .ok_or_else(|| AgentError::Protocol("empty script".into()))?;
        encode(target, &self.spec).map_err(|e| AgentError::Protocol(e.to_string()))
    }

    fn wants_observation(&self) -> bool {
        false
    }
}

impl ArmPolicy for OraclePolicy {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn act(&self, arm: Arm, input: &AgentInput) -> Result<DiscreteArmAction, AgentError> {
        BimanualPart::act(self, input).map(|d| *d.get(arm))
    }

    fn wants_observation(&self) -> bool {
        false
    }
}
