//! Dataset generation and storage, closed-loop evaluation and dataset statistics.

mod dataset;
mod eval;
mod stats;
mod targets;

use std::path::PathBuf;

pub use dataset::{
    episode_dir, generate_dataset, load_dataset, load_episode, read_depth, read_png, read_proprio, read_steps,
    write_depth, write_episode, write_png, write_proprio, write_steps, DatasetManifest, EpisodeManifest, EpisodeMeta,
    GenOptions,
};
pub use eval::{evaluate, EpisodeResult, EvalConfig, EvalReport, FailureTag};
pub use stats::{stats, write_stats_csv, TaskStats};
pub use targets::{read_targets, write_targets, TargetOptions, TargetRecord, TargetSet};

use crate::agents::AgentError;
use crate::augment::AugmentError;
use crate::camvox::CamvoxError;
use crate::codec::CodecError;
use crate::demo::DemoError;
use crate::keyframes::KeyframeError;
use crate::simworld::SimError;

/// Version written to every manifest and binary header.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },
    #[error("{path}: unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { path: PathBuf, found: u32 },
    #[error("{0}")]
    Invalid(String),
    #[error("gave up after {failures} failed expert runs for {wanted} episodes")]
    TooManyFailures { failures: usize, wanted: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Camvox(#[from] CamvoxError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Keyframe(#[from] KeyframeError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

impl HarnessError {
    /// Process exit status: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. }
            | HarnessError::Camvox(CamvoxError::Io(_))
            | HarnessError::Agent(AgentError::Io(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, msg: impl ToString) -> HarnessError {
        HarnessError::Corrupt {
            path: path.into(),
            msg: msg.to_string(),
        }
    }
}
