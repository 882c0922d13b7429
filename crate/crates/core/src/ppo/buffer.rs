use ndarray::{Array2, ArrayView2};

use super::gae::compute_gae;
use crate::error::{Error, Result};

/// Per-step rollout records for one update.
#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    obs_dim: usize,
    action_dim: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// GAE output before normalisation.
    pub raw_advantages: Vec<f64>,
    /// Zero mean, unit variance over the whole buffer.
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, action_dim: usize) -> Self {
        Self {
            obs_dim,
            action_dim,
            obs: Vec::new(),
            actions: Vec::new(),
            log_probs: Vec::new(),
            rewards: Vec::new(),
            values: Vec::new(),
            dones: Vec::new(),
            raw_advantages: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], log_prob: f64, reward: f64, value: f64, done: bool) {
        assert_eq!(obs.len(), self.obs_dim);
        assert_eq!(action.len(), self.action_dim);
        self.obs.extend_from_slice(obs);
        self.actions.extend_from_slice(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    pub fn obs(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.len(), self.obs_dim), &self.obs).expect("buffer shape")
    }

    pub fn actions(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.len(), self.action_dim), &self.actions).expect("buffer shape")
    }

    /// Rows `idx` of the observation and action matrices.
    pub fn gather(&self, idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let mut o = Array2::zeros((idx.len(), self.obs_dim));
        let mut a = Array2::zeros((idx.len(), self.action_dim));
        for (r, &i) in idx.iter().enumerate() {
            o.row_mut(r).assign(&ndarray::ArrayView1::from(&self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]));
            a.row_mut(r)
                .assign(&ndarray::ArrayView1::from(&self.actions[i * self.action_dim..(i + 1) * self.action_dim]));
        }
        (o, a)
    }

    /// Run GAE over each episode (split at `done`), then normalise.
    /// A trailing unfinished segment is bootstrapped with `last_value`.
    pub fn finish(&mut self, gamma: f64, lambda: f64, last_value: f64) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyInput("rollout buffer"));
        }
        self.raw_advantages.clear();
        self.returns.clear();
        let mut start = 0;
        for end in 1..=self.len() {
            let closes = self.dones[end - 1];
            if closes || end == self.len() {
                let bootstrap = if closes { 0.0 } else { last_value };
                let (a, r) =
                    compute_gae(&self.rewards[start..end], &self.values[start..end], bootstrap, gamma, lambda)?;
                self.raw_advantages.extend(a);
                self.returns.extend(r);
                start = end;
            }
        }
        let n = self.len() as f64;
        let mean = self.raw_advantages.iter().sum::<f64>() / n;
        let var = self.raw_advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt() + 1e-8;
        self.advantages = self.raw_advantages.iter().map(|a| (a - mean) / sd).collect();
        Ok(())
    }
}
