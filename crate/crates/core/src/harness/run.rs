//! Training driver: stats CSV, periodic checkpoints, resume.
//!
//! Output layout under `output.dir`:
//!
//! ```text
//! stats.csv              one row per update
//! target.json            target embedding used by the run
//! checkpoints/ep<N>.ckpt every checkpoint_interval episodes
//! checkpoints/latest.ckpt
//! checkpoints/final.ckpt when training ends normally
//! checkpoints/aborted.ckpt when training stops on an error
//! ```

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::backend::Backend;
use super::config::RunConfig;
use super::files::write_embedding;
use crate::checkpoint::Checkpoint;
use crate::env::EpisodeConfig;
use crate::error::{Error, Result};
use crate::ppo::{TrainOutcome, Trainer, UpdateStats};

pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
    pub fn stats(&self) -> PathBuf {
        self.dir.join("stats.csv")
    }
    pub fn target(&self) -> PathBuf {
        self.dir.join("target.json")
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.dir.join("checkpoints")
    }
    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.checkpoints().join(format!("{name}.ckpt"))
    }
}

/// Episode settings from the config around a resolved target.
pub fn episode_config(cfg: &RunConfig, target_id: String, target: crate::acoustic::SyllableEmbedding) -> EpisodeConfig {
    EpisodeConfig::new(target, target_id)
        .with_horizon(cfg.episode.horizon)
        .with_step_duration(cfg.episode.step_duration)
        .with_reward_mode(cfg.episode.reward_mode)
}

/// Build a trainer: fresh from the config's target, or from a checkpoint.
pub fn prepare(cfg: &RunConfig, backend: &mut Backend, resume: Option<&Checkpoint>) -> Result<Trainer> {
    match resume {
        Some(ckpt) => {
            backend.check_dim(&ckpt.target)?;
            if ckpt.params.arch != cfg.arch() {
                return Err(Error::Compatibility(format!(
                    "checkpoint hidden layers {:?} differ from config {:?}",
                    ckpt.params.arch.hidden,
                    cfg.arch().hidden
                )));
            }
            let ep = episode_config(cfg, ckpt.target_id.clone(), ckpt.target.clone());
            Trainer::resume(cfg.train.clone(), ep, ckpt.clone())
        }
        None => {
            let spec = cfg
                .target
                .spec()?
                .ok_or_else(|| Error::Config("no target: set one of target.fixture/trajectory/wav/syllable/embedding".into()))?;
            let (id, e) = backend.make_target(&spec, cfg.episode.step_duration)?;
            backend.check_dim(&e)?;
            Trainer::new(cfg.train.clone(), episode_config(cfg, id, e), &cfg.arch())
        }
    }
}

/// Run training to completion, writing artefacts under `paths`. On resume
/// `stats.csv` is appended to; otherwise it is replaced.
pub fn train(
    cfg: &RunConfig,
    backend: &mut Backend,
    resume: Option<&Checkpoint>,
    paths: &RunPaths,
) -> Result<TrainOutcome> {
    let mut trainer = prepare(cfg, backend, resume)?;
    std::fs::create_dir_all(paths.checkpoints())?;
    let ep = trainer.episode_config();
    write_embedding(&ep.target_id, &ep.target, &paths.target())?;

    let stats_path = paths.stats();
    let appending = resume.is_some() && stats_path.is_file();
    let file = if appending {
        truncate_stats(&stats_path, trainer.episodes_done())?;
        OpenOptions::new().append(true).open(&stats_path)?
    } else {
        File::create(&stats_path)?
    };
    let mut stats = BufWriter::new(file);
    if !appending {
        writeln!(stats, "{}", UpdateStats::CSV_HEADER)?;
    }

    let interval = cfg.output.checkpoint_interval;
    let mut next_ckpt = if interval == 0 { u64::MAX } else { (trainer.episodes_done() / interval + 1) * interval };
    let mut observer = |t: &Trainer, s: &UpdateStats| -> Result<()> {
        writeln!(stats, "{}", s.csv_row())?;
        stats.flush()?;
        if s.episode >= next_ckpt {
            let ck = t.checkpoint();
            ck.save(&paths.checkpoint(&format!("ep{}", s.episode)))?;
            ck.save(&paths.checkpoint("latest"))?;
            while next_ckpt <= s.episode {
                next_ckpt += interval;
            }
            log::info!(
                "episode {} mean_reward {:.4} best_similarity {:.4} std {}",
                s.episode,
                s.mean_reward,
                s.best_similarity,
                s.std
            );
        }
        Ok(())
    };
    match trainer.train(backend, &mut observer) {
        Ok(outcome) => {
            trainer.checkpoint().save(&paths.checkpoint("final"))?;
            Ok(outcome)
        }
        Err(e) => {
            let aborted = paths.checkpoint("aborted");
            if let Err(save) = trainer.checkpoint().save(&aborted) {
                log::error!("could not write {}: {save}", aborted.display());
            } else {
                log::error!("training stopped; last consistent state in {}", aborted.display());
            }
            Err(e)
        }
    }
}

/// Drop rows written after `episode`, so a resume from an older checkpoint
/// does not leave duplicates behind.
fn truncate_stats(path: &Path, episode: u64) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == UpdateStats::CSV_HEADER => {}
        _ => return Err(Error::Csv { path: path.to_path_buf(), message: "not a stats file".into() }),
    }
    let mut kept = format!("{}\n", UpdateStats::CSV_HEADER);
    for line in lines {
        let ep: u64 = line
            .split(',')
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Csv { path: path.to_path_buf(), message: format!("bad row {line:?}") })?;
        if ep > episode {
            break;
        }
        kept.push_str(line);
        kept.push('\n');
    }
    if kept.len() != text.len() {
        std::fs::write(path, kept)?;
    }
    Ok(())
}

/// Latest checkpoint in a run directory, if any.
pub fn latest_checkpoint(dir: &Path) -> Option<PathBuf> {
    let p = RunPaths::new(dir);
    ["latest", "final"].iter().map(|n| p.checkpoint(n)).find(|p| p.is_file())
}
