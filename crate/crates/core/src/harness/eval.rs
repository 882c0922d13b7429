use std::path::{Path, PathBuf};

use rand::Rng;

use super::backend::Backend;
use super::files::write_trajectory_csv;
use crate::acoustic::AcousticBackend;
use crate::env::{ArticulatoryEnv, EpisodeConfig, RewardSignal, Trajectory};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;

/// Label for how `total_reward` is computed.
pub const REWARD_BASIS: &str = "eval_episode_sum";

/// Outcome of one greedy evaluation episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub syllable: String,
    /// Sum of per-step rewards of the evaluation episode.
    pub total_reward: f64,
    pub best_similarity: f64,
    pub wav_path: PathBuf,
    pub trajectory_csv: PathBuf,
    /// Free text for a listener's transcription; empty unless supplied.
    pub transcription: String,
}

impl EvalReport {
    pub const CSV_HEADER: [&'static str; 7] =
        ["syllable", "total_reward", "reward_basis", "best_similarity", "wav_path", "trajectory_csv", "transcription"];

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.syllable.clone(),
            format!("{:?}", self.total_reward),
            REWARD_BASIS.to_string(),
            format!("{:?}", self.best_similarity),
            self.wav_path.display().to_string(),
            self.trajectory_csv.display().to_string(),
            self.transcription.clone(),
        ]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let err = |e: csv::Error| Error::Csv { path: path.to_path_buf(), message: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(Self::CSV_HEADER).map_err(err)?;
        w.write_record(self.csv_record()).map_err(err)?;
        w.flush()?;
        Ok(())
    }
}

/// How actions are chosen in [`run_episode`].
pub enum ActionMode<'a, R: Rng> {
    /// Policy mean.
    Greedy,
    /// Draw from the policy's Gaussian.
    Sample(&'a mut R),
}

/// One full episode; returns the trajectory and every step's signal.
pub fn run_episode<R: Rng>(
    params: &PolicyParams,
    episode: &EpisodeConfig,
    backend: &mut dyn AcousticBackend,
    mut mode: ActionMode<'_, R>,
) -> Result<(Trajectory, Vec<RewardSignal>, f64)> {
    let mut env = ArticulatoryEnv::new(episode.clone())?;
    let mut obs = env.reset().to_vec();
    let mut signals = Vec::new();
    let mut total = 0.0;
    loop {
        let action = match &mut mode {
            ActionMode::Greedy => params.actor_forward(&obs)?.to_vec(),
            ActionMode::Sample(rng) => params.sample_flat(&obs, *rng)?.action_raw,
        };
        let out = env.step(&action, backend)?;
        total += out.reward;
        signals.extend(out.signal);
        if out.done {
            break;
        }
        obs = out.observation.to_vec();
    }
    Ok((env.trajectory().clone(), signals, total))
}

/// Checkpoint, target and backend must agree on shapes.
pub fn check_compatible(params: &PolicyParams, episode: &EpisodeConfig, backend: &dyn AcousticBackend) -> Result<()> {
    let d = backend.descriptor();
    if episode.target.dim() != d.embedding_dim {
        return Err(Error::Compatibility(format!(
            "checkpoint target has {} dims but backend {:?} produces {}",
            episode.target.dim(),
            d.name,
            d.embedding_dim
        )));
    }
    if params.arch.obs_dim != crate::env::OBS_DIM || params.arch.action_dim != crate::env::FRAME_DIM {
        return Err(Error::Compatibility(format!(
            "policy maps {} -> {}, environment needs {} -> {}",
            params.arch.obs_dim,
            params.arch.action_dim,
            crate::env::OBS_DIM,
            crate::env::FRAME_DIM
        )));
    }
    Ok(())
}

/// Greedy (mean-action) episode; writes `<out>/eval_<id>.wav` and
/// `<out>/eval_<id>_trajectory.csv`.
pub fn evaluate(
    params: &PolicyParams,
    episode: &EpisodeConfig,
    backend: &mut Backend,
    out_dir: &Path,
    transcription: &str,
) -> Result<EvalReport> {
    check_compatible(params, episode, backend)?;
    let (traj, signals, total) = run_episode::<rand_chacha::ChaCha8Rng>(params, episode, backend, ActionMode::Greedy)?;
    let best = signals.iter().map(|s| s.value).fold(-1.0, f64::max);
    std::fs::create_dir_all(out_dir)?;
    let id = &episode.target_id;
    let wav_path = out_dir.join(format!("eval_{id}.wav"));
    let trajectory_csv = out_dir.join(format!("eval_{id}_trajectory.csv"));
    backend.write_wav(&traj, episode.step_duration, &wav_path)?;
    write_trajectory_csv(&traj, &trajectory_csv)?;
    Ok(EvalReport {
        syllable: id.clone(),
        total_reward: total,
        best_similarity: best,
        wav_path,
        trajectory_csv,
        transcription: transcription.to_string(),
    })
}
