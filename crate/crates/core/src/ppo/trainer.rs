use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{std_schedule, Adam, RolloutBuffer, TrainConfig};
use crate::acoustic::AcousticBackend;
use crate::checkpoint::{Checkpoint, RngState};
use crate::env::{ArticulatoryEnv, EpisodeConfig};
use crate::error::{Error, Result};
use crate::policy::{gradients, ArchConfig, Minibatch, PolicyParams};

/// Totals for one training episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub total_reward: f64,
    /// Highest scored similarity in the episode, −1 if nothing was detected.
    pub best_similarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateStats {
    /// Episodes completed once this update's rollouts were collected.
    pub episode: u64,
    /// Mean total episode reward over the update's rollouts.
    pub mean_reward: f64,
    /// Mean of the per-episode best similarities.
    pub best_similarity: f64,
    /// Max of the per-episode best similarities.
    pub max_similarity: f64,
    pub surrogate_loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    /// Exploration std used for the rollouts.
    pub std: f64,
    pub episodes: Vec<EpisodeSummary>,
}

impl UpdateStats {
    pub const CSV_HEADER: &'static str =
        "episode,mean_reward,best_similarity,surrogate_loss,value_loss,clip_fraction,std";

    /// One CSV row; floats use the shortest round-trip form.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.mean_reward,
            self.best_similarity,
            self.surrogate_loss,
            self.value_loss,
            self.clip_fraction,
            self.std
        )
    }
}

/// Called after every update; may persist stats or checkpoints.
pub trait TrainObserver {
    fn on_update(&mut self, trainer: &Trainer, stats: &UpdateStats) -> Result<()>;
}

impl TrainObserver for () {
    fn on_update(&mut self, _: &Trainer, _: &UpdateStats) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&Trainer, &UpdateStats) -> Result<()>> TrainObserver for F {
    fn on_update(&mut self, trainer: &Trainer, stats: &UpdateStats) -> Result<()> {
        self(trainer, stats)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    TotalEpisodes,
    Threshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainOutcome {
    pub updates: u64,
    pub episodes: u64,
    pub reason: StopReason,
}

/// Single-worker, deterministic PPO loop. All randomness (action noise and
/// minibatch shuffles) comes from one seeded stream that is checkpointed.
#[derive(Clone, Debug)]
pub struct Trainer {
    cfg: TrainConfig,
    env: ArticulatoryEnv,
    params: PolicyParams,
    adam: Adam,
    rng: ChaCha8Rng,
    episode: u64,
    stop_streak: u32,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, episode: EpisodeConfig, arch: &ArchConfig) -> Result<Self> {
        cfg.validate()?;
        let params = PolicyParams::init(cfg.seed, arch)?;
        let adam = Adam::new(&params);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let env = ArticulatoryEnv::new(episode)?;
        Ok(Self { cfg, env, params, adam, rng, episode: 0, stop_streak: 0 })
    }

    /// Continue from a checkpoint. The target stored in the checkpoint wins
    /// over the one in `episode`.
    pub fn resume(cfg: TrainConfig, episode: EpisodeConfig, ckpt: Checkpoint) -> Result<Self> {
        cfg.validate()?;
        let episode = EpisodeConfig { target: ckpt.target, target_id: ckpt.target_id, ..episode };
        let env = ArticulatoryEnv::new(episode)?;
        Ok(Self {
            cfg,
            env,
            params: ckpt.params,
            adam: ckpt.adam,
            rng: ckpt.rng.restore(),
            episode: ckpt.episode,
            stop_streak: ckpt.stop_streak,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            rng: RngState::capture(&self.rng),
            episode: self.episode,
            stop_streak: self.stop_streak,
            target_id: self.env.config().target_id.clone(),
            target: self.env.config().target.clone(),
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn episode_config(&self) -> &EpisodeConfig {
        self.env.config()
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn episodes_done(&self) -> u64 {
        self.episode
    }

    fn run_episode(&mut self, backend: &mut dyn AcousticBackend, buf: &mut RolloutBuffer) -> Result<EpisodeSummary> {
        let mut obs = self.env.reset().to_vec();
        let mut total = 0.0;
        let mut best = f64::NEG_INFINITY;
        loop {
            let s = self.params.sample_flat(&obs, &mut self.rng)?;
            let value = self.params.critic_forward(&obs)?;
            let out = self.env.step(&s.action_raw, backend)?;
            if let Some(sig) = out.signal {
                best = best.max(sig.value);
            }
            total += out.reward;
            buf.push(&obs, &s.action_raw, s.log_prob, out.reward, value, out.done);
            if out.done {
                break;
            }
            obs = out.observation.to_vec();
        }
        Ok(EpisodeSummary { total_reward: total, best_similarity: if best.is_finite() { best } else { -1.0 } })
    }

    /// Collect one batch of episodes and optimise on it.
    ///
    /// On error the trainer is left as it was before the call, so a
    /// checkpoint taken afterwards resumes cleanly.
    pub fn update(&mut self, backend: &mut dyn AcousticBackend) -> Result<UpdateStats> {
        let saved_rng = self.rng.clone();
        let saved = (self.params.clone(), self.adam.clone());
        let result = self.update_inner(backend);
        if result.is_err() {
            self.rng = saved_rng;
            (self.params, self.adam) = saved;
        }
        result
    }

    fn update_inner(&mut self, backend: &mut dyn AcousticBackend) -> Result<UpdateStats> {
        let std = std_schedule(self.episode, &self.cfg);
        self.params.set_std(std);
        let remaining = self.cfg.total_episodes.saturating_sub(self.episode).max(1);
        let n_episodes = (self.cfg.episodes_per_update as u64).min(remaining) as usize;

        let arch = &self.params.arch;
        let mut buf = RolloutBuffer::new(arch.obs_dim, arch.action_dim);
        let mut episodes = Vec::with_capacity(n_episodes);
        for _ in 0..n_episodes {
            episodes.push(self.run_episode(backend, &mut buf)?);
        }
        buf.finish(self.cfg.gamma, self.cfg.gae_lambda, 0.0)?;

        let spec = self.cfg.loss_spec();
        let adam_cfg = self.cfg.adam();
        let mut idx: Vec<usize> = (0..buf.len()).collect();
        let (mut surrogate, mut value, mut clip, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for _ in 0..self.cfg.epochs_per_update {
            idx.shuffle(&mut self.rng);
            for chunk in idx.chunks(self.cfg.minibatch_size) {
                let (obs, actions) = buf.gather(chunk);
                let pick = |v: &[f64]| chunk.iter().map(|&i| v[i]).collect::<Vec<f64>>();
                let (old, adv, ret) = (pick(&buf.log_probs), pick(&buf.advantages), pick(&buf.returns));
                let mb = Minibatch {
                    obs: obs.view(),
                    actions: actions.view(),
                    old_log_probs: &old,
                    advantages: &adv,
                    returns: &ret,
                    index: batches,
                };
                let (loss, mut grads) = gradients(&self.params, &mb, &spec)?;
                // The schedule owns the std.
                grads.log_std.fill(0.0);
                self.adam.step(&adam_cfg, &mut self.params, &grads);
                if !self.params.is_finite() {
                    return Err(Error::Numeric {
                        batch: batches,
                        what: format!("parameters became non-finite (loss {loss:?})"),
                    });
                }
                surrogate += loss.surrogate;
                value += loss.value;
                clip += loss.clip_fraction;
                batches += 1;
            }
        }
        self.params.set_std(std);
        self.episode += n_episodes as u64;

        let nb = batches as f64;
        let ne = n_episodes as f64;
        let best_similarity = episodes.iter().map(|e| e.best_similarity).sum::<f64>() / ne;
        if let Some(rule) = self.cfg.stop {
            self.stop_streak = if best_similarity >= rule.threshold { self.stop_streak + 1 } else { 0 };
        }
        Ok(UpdateStats {
            episode: self.episode,
            mean_reward: episodes.iter().map(|e| e.total_reward).sum::<f64>() / ne,
            best_similarity,
            max_similarity: episodes.iter().map(|e| e.best_similarity).fold(f64::NEG_INFINITY, f64::max),
            surrogate_loss: surrogate / nb,
            value_loss: value / nb,
            clip_fraction: clip / nb,
            std,
            episodes,
        })
    }

    fn stop_reached(&self) -> bool {
        self.cfg.stop.is_some_and(|r| self.stop_streak >= r.patience)
    }

    /// Update until `total_episodes` or the stop rule fires.
    pub fn train(
        &mut self,
        backend: &mut dyn AcousticBackend,
        observer: &mut dyn TrainObserver,
    ) -> Result<TrainOutcome> {
        let mut updates = 0;
        loop {
            if self.stop_reached() {
                return Ok(TrainOutcome { updates, episodes: self.episode, reason: StopReason::Threshold });
            }
            if self.episode >= self.cfg.total_episodes {
                return Ok(TrainOutcome { updates, episodes: self.episode, reason: StopReason::TotalEpisodes });
            }
            let stats = self.update(backend)?;
            log::debug!("{}", stats.csv_row());
            updates += 1;
            observer.on_update(self, &stats)?;
        }
    }
}
