use std::path::Path;

use super::config::{BackendSection, TargetSpec};
use super::files::{read_embedding, read_trajectory_csv};
use crate::acoustic::{
    make_target, wav, AcousticBackend, BackendDescriptor, BackendKind, ReferenceBackend, SyllableEmbedding,
    TargetSource, Waveform,
};
use crate::bridge::protocol::{trajectory_rows, TargetSourceMsg};
use crate::bridge::BridgeClient;
use crate::env::{RewardSignal, Trajectory};
use crate::error::{Error, Result};
use crate::fixtures;

/// The backend a run config selects.
#[derive(Debug)]
pub enum Backend {
    Reference(ReferenceBackend),
    Bridge(Box<BridgeClient>),
}

impl Backend {
    pub fn open(cfg: &BackendSection) -> Result<Self> {
        match cfg.kind {
            BackendKind::Reference => Ok(Self::Reference(ReferenceBackend::new(cfg.reference())?)),
            BackendKind::Bridge => {
                let client = BridgeClient::connect(&cfg.endpoint()?, cfg.bridge_options())?;
                log::info!("bridge backend {:?}, embedding_dim {}", client.info().backend_name, client.info().embedding_dim);
                Ok(Self::Bridge(Box::new(client)))
            }
        }
    }

    pub fn synthesize(&mut self, traj: &Trajectory, step_duration: f64) -> Result<Waveform> {
        match self {
            Self::Reference(b) => b.synthesize(traj, step_duration),
            Self::Bridge(c) => c.synthesize(traj, step_duration),
        }
    }

    fn target_from_trajectory(&mut self, trajectory: Trajectory, step_duration: f64) -> Result<SyllableEmbedding> {
        match self {
            Self::Reference(b) => make_target(&TargetSource::Trajectory { trajectory, step_duration }, b),
            Self::Bridge(c) => {
                let sample_rate = c.sample_rate();
                c.make_target(TargetSourceMsg::Trajectory {
                    trajectory: trajectory_rows(&trajectory),
                    step_duration,
                    sample_rate,
                })
            }
        }
    }

    /// Resolve a target to `(id, embedding)` in this backend's embedding space.
    pub fn make_target(&mut self, spec: &TargetSpec, step_duration: f64) -> Result<(String, SyllableEmbedding)> {
        let id = spec.id();
        let e = match spec {
            TargetSpec::Fixture(name) => {
                self.target_from_trajectory(fixtures::expert_trajectory(name)?, fixtures::STEP_DURATION)?
            }
            TargetSpec::Trajectory(p) => self.target_from_trajectory(read_trajectory_csv(p, &id)?, step_duration)?,
            TargetSpec::Wav(p) => match self {
                Self::Reference(b) => make_target(&TargetSource::WavFile(p.clone()), b)?,
                Self::Bridge(c) => c.make_target(TargetSourceMsg::WavPath(absolute(p)))?,
            },
            TargetSpec::Syllable(name) => match self {
                // The reference backend knows syllables only as fixture names.
                Self::Reference(_) => {
                    self.target_from_trajectory(fixtures::expert_trajectory(name)?, fixtures::STEP_DURATION)?
                }
                Self::Bridge(c) => c.make_target(TargetSourceMsg::Syllable(name.clone()))?,
            },
            TargetSpec::Embedding(p) => {
                let (stored, e) = read_embedding(p)?;
                return self.check_dim(&e).map(|_| (stored, e));
            }
        };
        Ok((id, e))
    }

    /// The target must live in this backend's embedding space.
    pub fn check_dim(&self, e: &SyllableEmbedding) -> Result<()> {
        let want = self.descriptor().embedding_dim;
        if e.dim() != want {
            return Err(Error::Compatibility(format!(
                "target embedding has {} dims but the {} backend produces {want}",
                e.dim(),
                self.descriptor().name
            )));
        }
        Ok(())
    }

    pub fn write_wav(&mut self, traj: &Trajectory, step_duration: f64, path: &Path) -> Result<()> {
        let w = self.synthesize(traj, step_duration)?;
        wav::write(path, &w)
    }
}

fn absolute(p: &Path) -> String {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()).to_string_lossy().into_owned()
}

impl AcousticBackend for Backend {
    fn descriptor(&self) -> BackendDescriptor {
        match self {
            Self::Reference(b) => b.descriptor(),
            Self::Bridge(c) => c.descriptor(),
        }
    }

    fn score(&mut self, t: &Trajectory, target: &SyllableEmbedding, step_duration: f64) -> Result<RewardSignal> {
        match self {
            Self::Reference(b) => b.score(t, target, step_duration),
            Self::Bridge(c) => c.score(t, target, step_duration),
        }
    }
}
