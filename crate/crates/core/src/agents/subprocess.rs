//! External policies over newline-delimited JSON on stdin/stdout.
//!
//! Each request is one line:
//! `{"grid_ref": path|null, "proprio": {"right": {..}|null, "left": {..}|null},
//!   "goal": str, "leader_action": {..}|null, "arm": "right"|"left"|null, "keyframe": int|null}`.
//! `grid_ref` names a voxel dump file. The reply is one line
//! `{"right": {"trans": [i,j,k], "rot_bins": [a,b,c], "open": bool, "collide": bool}, "left": {..}}`;
//! for a per-arm request only the named arm is required.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AgentError, AgentInput, ArmPolicy, BimanualPart};
use crate::camvox::{write_bvox, GridSpec};
use crate::codec::{DiscreteArmAction, DiscreteBimanual};
use crate::demo::{Arm, ArmProprio, PerArm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRequest {
    pub grid_ref: Option<PathBuf>,
    pub proprio: PerArm<Option<ArmProprio>>,
    pub goal: String,
    pub leader_action: Option<DiscreteArmAction>,
    pub arm: Option<Arm>,
    pub keyframe: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct PolicyResponse {
    right: Option<DiscreteArmAction>,
    left: Option<DiscreteArmAction>,
}

struct Pipe {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    calls: u64,
}

pub struct SubprocessPolicy {
    name: String,
    spec: GridSpec,
    scratch: PathBuf,
    pipe: Mutex<Pipe>,
}

impl SubprocessPolicy {
    /// Starts `program args..`; voxel dumps for requests go to `scratch`.
    pub fn spawn(program: &str, args: &[String], scratch: &Path, spec: GridSpec) -> Result<Self, AgentError> {
        std::fs::create_dir_all(scratch)?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = BufWriter::new(child.stdin.take().expect("stdin is piped"));
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            name: format!("subprocess:{program}"),
            spec,
            scratch: scratch.to_path_buf(),
            pipe: Mutex::new(Pipe {
                child,
                stdin,
                stdout,
                calls: 0,
            }),
        })
    }

    fn call(&self, input: &AgentInput, arm: Option<Arm>) -> Result<PolicyResponse, AgentError> {
        let mut pipe = self.pipe.lock().unwrap_or_else(|e| e.into_inner());
        pipe.calls += 1;
        let grid_ref = match input.grid {
            Some(g) => {
                let path = self.scratch.join(format!("grid_{}.bvox", pipe.calls));
                let file = std::fs::File::create(&path)?;
                write_bvox(g, BufWriter::new(file)).map_err(|e| AgentError::Protocol(e.to_string()))?;
                Some(path)
            }
            None => None,
        };
        let req = PolicyRequest {
            grid_ref,
            proprio: input.proprio,
            goal: input.goal.to_string(),
            leader_action: input.leader_action,
            arm,
            keyframe: input.privileged.map(|p| p.keyframe),
        };
        let line = serde_json::to_string(&req).map_err(|e| AgentError::Protocol(e.to_string()))?;
        writeln!(pipe.stdin, "{line}")?;
        pipe.stdin.flush()?;
        let mut reply = String::new();
        if pipe.stdout.read_line(&mut reply)? == 0 {
            return Err(AgentError::Protocol("policy process closed its output".into()));
        }
        let resp: PolicyResponse =
            serde_json::from_str(reply.trim()).map_err(|e| AgentError::Protocol(format!("bad reply: {e}")))?;
        for a in [resp.right, resp.left].into_iter().flatten() {
            a.validate(&self.spec)
                .map_err(|e| AgentError::Protocol(e.to_string()))?;
        }
        Ok(resp)
    }
}

impl Drop for SubprocessPolicy {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            let _ = pipe.child.kill();
            let _ = pipe.child.wait();
        }
    }
}

impl BimanualPart for SubprocessPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn act(&self, input: &AgentInput) -> Result<DiscreteBimanual, AgentError> {
        let r = self.call(input, None)?;
        match (r.right, r.left) {
            (Some(right), Some(left)) => Ok(PerArm::new(right, left)),
            _ => Err(AgentError::Protocol("reply must contain both arms".into())),
        }
    }
}

impl ArmPolicy for SubprocessPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn act(&self, arm: Arm, input: &AgentInput) -> Result<DiscreteArmAction, AgentError> {
        let r = self.call(input, Some(arm))?;
        let a = match arm {
            Arm::Right => r.right,
            Arm::Left => r.left,
        };
        a.ok_or_else(|| AgentError::Protocol(format!("reply lacks the {arm} arm")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Pose;

    const REPLY: &str = r#"{"right":{"trans":[1,2,3],"rot_bins":[0,0,0],"open":true,"collide":false},"left":{"trans":[4,5,6],"rot_bins":[1,1,1],"open":false,"collide":true}}"#;

    fn input() -> AgentInput<'static> {
        let p = ArmProprio {
            gripper_open: true,
            ee_pose: Pose::identity(),
        };
        AgentInput::new(None, PerArm::new(p, p), "Lift the ball.")
    }

    fn responder(reply: &str) -> SubprocessPolicy {
        let script = format!("while read line; do echo '{reply}'; done");
        let dir = std::env::temp_dir().join(format!("bimanual-subproc-{}", std::process::id()));
        SubprocessPolicy::spawn("sh", &["-c".into(), script], &dir, GridSpec::default()).unwrap()
    }

    #[test]
    fn round_trip_through_shell() {
        let p = responder(REPLY);
        let out = BimanualPart::act(&p, &input()).unwrap();
        assert_eq!(out.right.trans, [1, 2, 3]);
        assert!(out.left.collide);
        assert_eq!(ArmPolicy::act(&p, Arm::Left, &input()).unwrap().trans, [4, 5, 6]);
    }

    #[test]
    fn malformed_reply_is_a_protocol_error() {
        let p = responder(r#"{"right":{"trans":[100,0,0],"rot_bins":[0,0,0],"open":true,"collide":false}}"#);
        assert!(matches!(BimanualPart::act(&p, &input()), Err(AgentError::Protocol(_))));
        let p = responder("not json");
        assert!(matches!(BimanualPart::act(&p, &input()), Err(AgentError::Protocol(_))));
    }

    #[test]
    fn request_serializes_arm_roles() {
        let req = PolicyRequest {
            grid_ref: None,
            proprio: PerArm::new(None, None),
            goal: "g".into(),
            leader_action: None,
            arm: Some(Arm::Left),
            keyframe: Some(2),
        };
        let s = serde_json::to_string(&req).unwrap();
        assert!(s.contains(r#""arm":"left""#), "{s}");
        assert_eq!(serde_json::from_str::<PolicyRequest>(&s).unwrap(), req);
    }
}
