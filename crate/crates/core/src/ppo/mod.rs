//! Proximal policy optimisation.

mod adam;
mod buffer;
mod gae;
pub mod loss;
mod trainer;

use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use buffer::RolloutBuffer;
pub use gae::compute_gae;
pub use loss::{clipped_surrogate, ppo_loss, PpoLoss, SurrogateTerm};
pub use trainer::{EpisodeSummary, StopReason, TrainObserver, TrainOutcome, Trainer, UpdateStats};

use crate::error::{Error, Result};
use crate::policy::LossSpec;

/// Early stop once the mean episode-best similarity of an update is at
/// least `threshold` for `patience` consecutive updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub threshold: f64,
    #[serde(default = "default_patience")]
    pub patience: u32,
}

fn default_patience() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub episodes_per_update: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub total_episodes: u64,
    pub std_init: f64,
    pub std_decay: f64,
    /// Episodes between decrements.
    pub std_interval: u64,
    pub std_floor: f64,
    pub seed: u64,
    pub stop: Option<StopRule>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            lr: 3e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs_per_update: 10,
            minibatch_size: 128,
            episodes_per_update: 10,
            value_coef: 0.5,
            entropy_coef: 0.0,
            total_episodes: 25_000,
            std_init: 0.7,
            std_decay: 0.01,
            std_interval: 100,
            std_floor: 0.05,
            seed: 0,
            stop: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must be in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be positive");
        }
        if !(self.lr > 0.0 && self.adam_eps > 0.0)
            || !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
        {
            return bad("invalid Adam settings");
        }
        if self.epochs_per_update == 0 || self.minibatch_size == 0 || self.episodes_per_update == 0 {
            return bad("epochs_per_update, minibatch_size and episodes_per_update must be at least 1");
        }
        if self.std_interval == 0 {
            return bad("std_interval must be at least 1");
        }
        if !(self.std_floor > 0.0 && self.std_floor <= self.std_init) || !(self.std_decay >= 0.0) {
            return bad("std schedule needs 0 < std_floor <= std_init and std_decay >= 0");
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        if let Some(s) = self.stop {
            if s.patience == 0 || !s.threshold.is_finite() {
                return bad("stop rule needs a finite threshold and patience >= 1");
            }
        }
        Ok(())
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec { clip_eps: self.clip_eps, value_coef: self.value_coef, entropy_coef: self.entropy_coef }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.adam_beta1, beta2: self.adam_beta2, eps: self.adam_eps }
    }
}

/// `max(std_floor, std_init − std_decay·⌊episode/std_interval⌋)`.
pub fn std_schedule(episode: u64, cfg: &TrainConfig) -> f64 {
    let steps = (episode / cfg.std_interval) as f64;
    (cfg.std_init - cfg.std_decay * steps).max(cfg.std_floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_points() {
        let cfg = TrainConfig::default();
        assert_eq!(std_schedule(0, &cfg), 0.7);
        assert!((std_schedule(99, &cfg) - 0.7).abs() < 1e-15);
        assert!((std_schedule(1000, &cfg) - 0.60).abs() < 1e-12);
        assert!((std_schedule(6500, &cfg) - 0.05).abs() < 1e-12);
        assert_eq!(std_schedule(100_000, &cfg), 0.05);
    }

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
        let bad = TrainConfig { std_floor: 0.9, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { gamma: 0.0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
    }
}
