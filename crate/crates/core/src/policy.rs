//! Gaussian MLP actor-critic.
//!
//! The actor maps a 195-dim observation to the mean of a diagonal Gaussian
//! over the 13 action channels; the critic maps it to a state value. The two
//! networks share nothing. `log_std` is one scalar per action channel and is
//! driven by the exploration schedule rather than learned, but its gradient
//! is still computed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::env::{Observation, FRAME_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::mlp::{Linear, Mlp};
use crate::ppo::loss::clipped_surrogate;

/// `½ ln 2π`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

pub const INITIAL_STD: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchConfig {
    pub obs_dim: usize,
    pub hidden: Vec<usize>,
    pub action_dim: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self { obs_dim: OBS_DIM, hidden: vec![256, 256], action_dim: FRAME_DIM }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.action_dim == 0 || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config(format!("zero-width layer in {self:?}")));
        }
        Ok(())
    }

    fn widths(&self, out: usize) -> Vec<usize> {
        let mut w = vec![self.obs_dim];
        w.extend(&self.hidden);
        w.push(out);
        w
    }
}

/// Actor, critic and log standard deviation. Also used as the gradient
/// container ([`ParamGrads`]).
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub arch: ArchConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub log_std: Array1<f64>,
}

pub type ParamGrads = PolicyParams;

impl PolicyParams {
    /// Scaled-uniform fan-in initialisation. The actor's output layer is
    /// shrunk by 100× so initial means sit near zero.
    pub fn init(seed: u64, arch: &ArchConfig) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut build = |out: usize, last_scale: f64| {
            let w = arch.widths(out);
            let n = w.len() - 1;
            let layers = (0..n)
                .map(|i| {
                    let scale = if i == n - 1 { last_scale } else { 1.0 };
                    Linear::uniform_fan_in(w[i], w[i + 1], scale, &mut rng)
                })
                .collect();
            Mlp { layers }
        };
        let actor = build(arch.action_dim, 0.01);
        let critic = build(1, 1.0);
        Ok(Self {
            arch: arch.clone(),
            actor,
            critic,
            log_std: Array1::from_elem(arch.action_dim, INITIAL_STD.ln()),
        })
    }

    /// All weights and biases zero; `log_std = ln 0.7`.
    pub fn zeros(arch: &ArchConfig) -> Result<Self> {
        arch.validate()?;
        let build = |out: usize| {
            let w = arch.widths(out);
            Mlp { layers: (0..w.len() - 1).map(|i| Linear::zeros(w[i], w[i + 1])).collect() }
        };
        Ok(Self {
            arch: arch.clone(),
            actor: build(arch.action_dim),
            critic: build(1),
            log_std: Array1::from_elem(arch.action_dim, INITIAL_STD.ln()),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            arch: self.arch.clone(),
            actor: self.actor.zeros_like(),
            critic: self.critic.zeros_like(),
            log_std: Array1::zeros(self.log_std.len()),
        }
    }

    pub fn actor_param_count(&self) -> usize {
        self.actor.param_count()
    }

    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.critic.param_count() + self.log_std.len()
    }

    pub fn set_std(&mut self, std: f64) {
        self.log_std.fill(std.ln());
    }

    pub fn std(&self) -> Array1<f64> {
        self.log_std.mapv(f64::exp)
    }

    /// Parameter tensors in a fixed order: actor (weight, bias) per layer,
    /// critic (weight, bias) per layer, then `log_std`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in self.actor.layers.iter().chain(&self.critic.layers) {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.log_std.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in self.actor.layers.iter_mut().chain(self.critic.layers.iter_mut()) {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.log_std.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    fn check_obs(&self, len: usize) -> Result<()> {
        if len != self.arch.obs_dim {
            return Err(Error::Shape(format!(
                "observation has {len} values, network expects {}",
                self.arch.obs_dim
            )));
        }
        Ok(())
    }

    pub fn actor_forward(&self, obs: &[f64]) -> Result<Array1<f64>> {
        self.check_obs(obs.len())?;
        Ok(self.actor.forward_one(ArrayView1::from(obs)))
    }

    pub fn critic_forward(&self, obs: &[f64]) -> Result<f64> {
        self.check_obs(obs.len())?;
        Ok(self.critic.forward_one(ArrayView1::from(obs))[0])
    }

    /// Draw `mean + std ⊙ ε`, `ε ~ N(0, I)`. The log-probability is of the
    /// unclamped draw.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &Observation, rng: &mut R) -> GaussianSample {
        let x = obs.to_vec();
        self.sample_flat(&x, rng).expect("observation has the configured width")
    }

    pub fn sample_flat<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<GaussianSample> {
        let mean = self.actor_forward(obs)?.to_vec();
        let std: Vec<f64> = self.std().to_vec();
        let action_raw: Vec<f64> = mean
            .iter()
            .zip(&std)
            .map(|(m, s)| {
                let eps: f64 = rng.sample(StandardNormal);
                m + s * eps
            })
            .collect();
        let log_prob = gaussian_log_prob(&action_raw, &mean, self.log_std.as_slice().expect("contiguous"));
        Ok(GaussianSample { action_raw, log_prob, mean, std })
    }
}

/// A draw from the policy.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSample {
    pub action_raw: Vec<f64>,
    pub log_prob: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// `Σ_i −(a_i−μ_i)²/(2σ_i²) − ln σ_i − ½ ln 2π`.
pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// Coefficients of the PPO objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self { clip_eps: 0.2, value_coef: 0.5, entropy_coef: 0.0 }
    }
}

/// A batch of rollout samples. Rows of `obs` and `actions` are samples.
#[derive(Clone, Copy, Debug)]
pub struct Minibatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub actions: ArrayView2<'a, f64>,
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
    /// Index reported in numeric errors.
    pub index: usize,
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Loss value and its parts. `total = surrogate + value_coef·value − entropy_coef·entropy`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossOutput {
    pub total: f64,
    pub surrogate: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

struct Forward {
    mean: Array2<f64>,
    actor_cache: crate::mlp::ForwardCache,
    values: Array2<f64>,
    critic_cache: crate::mlp::ForwardCache,
}

fn check_batch(params: &PolicyParams, mb: &Minibatch<'_>) -> Result<()> {
    let n = mb.len();
    if n == 0 {
        return Err(Error::EmptyInput("minibatch"));
    }
    if mb.obs.ncols() != params.arch.obs_dim || mb.actions.ncols() != params.arch.action_dim {
        return Err(Error::Shape(format!(
            "minibatch has obs width {} and action width {}",
            mb.obs.ncols(),
            mb.actions.ncols()
        )));
    }
    if [mb.actions.nrows(), mb.old_log_probs.len(), mb.advantages.len(), mb.returns.len()]
        .iter()
        .any(|&l| l != n)
    {
        return Err(Error::Shape("minibatch columns have different lengths".into()));
    }
    Ok(())
}

fn forward(params: &PolicyParams, mb: &Minibatch<'_>) -> Forward {
    let (mean, actor_cache) = params.actor.forward(mb.obs);
    let (values, critic_cache) = params.critic.forward(mb.obs);
    Forward { mean, actor_cache, values, critic_cache }
}

/// PPO loss and exact gradients with respect to every parameter.
pub fn gradients(params: &PolicyParams, mb: &Minibatch<'_>, spec: &LossSpec) -> Result<(LossOutput, ParamGrads)> {
    evaluate(params, mb, spec, true).map(|(l, g)| (l, g.expect("gradients requested")))
}

/// PPO loss only.
pub fn loss(params: &PolicyParams, mb: &Minibatch<'_>, spec: &LossSpec) -> Result<LossOutput> {
    evaluate(params, mb, spec, false).map(|(l, _)| l)
}

fn evaluate(
    params: &PolicyParams,
    mb: &Minibatch<'_>,
    spec: &LossSpec,
    want_grads: bool,
) -> Result<(LossOutput, Option<ParamGrads>)> {
    check_batch(params, mb)?;
    let n = mb.len();
    let nf = n as f64;
    let dim = params.arch.action_dim;
    let fw = forward(params, mb);
    let log_std = params.log_std.as_slice().expect("contiguous");
    let inv_var: Vec<f64> = log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();

    let mut surrogate = 0.0;
    let mut value_loss = 0.0;
    let mut clipped = 0usize;
    let mut d_mean = Array2::<f64>::zeros((n, dim));
    let mut d_values = Array2::<f64>::zeros((n, 1));
    let mut d_log_std = Array1::<f64>::zeros(dim);

    for i in 0..n {
        let a = mb.actions.row(i);
        let mu = fw.mean.row(i);
        let logp = gaussian_log_prob(
            a.as_slice().expect("contiguous row"),
            mu.as_slice().expect("contiguous row"),
            log_std,
        );
        let ratio = (logp - mb.old_log_probs[i]).exp();
        if !ratio.is_finite() {
            return Err(Error::Numeric { batch: mb.index, what: format!("non-finite ratio at row {i}") });
        }
        let term = clipped_surrogate(ratio, mb.advantages[i], spec.clip_eps);
        surrogate -= term.value;
        clipped += term.clipped as usize;

        let v = fw.values[[i, 0]];
        let err = v - mb.returns[i];
        value_loss += err * err;

        if want_grads {
            // d(−term)/d(logp) = −ratio·A when the unclipped branch is active.
            let g_logp = if term.gradient_flows { -ratio * mb.advantages[i] / nf } else { 0.0 };
            if g_logp != 0.0 {
                for j in 0..dim {
                    let diff = a[j] - mu[j];
                    d_mean[[i, j]] = g_logp * diff * inv_var[j];
                    d_log_std[j] += g_logp * (diff * diff * inv_var[j] - 1.0);
                }
            }
            d_values[[i, 0]] = spec.value_coef * 2.0 * err / nf;
        }
    }
    surrogate /= nf;
    value_loss /= nf;
    let entropy: f64 = log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum();
    let total = surrogate + spec.value_coef * value_loss - spec.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(Error::Numeric { batch: mb.index, what: format!("non-finite loss {total}") });
    }
    let out = LossOutput {
        total,
        surrogate,
        value: value_loss,
        entropy,
        clip_fraction: clipped as f64 / nf,
    };
    if !want_grads {
        return Ok((out, None));
    }

    let mut grads = params.zeros_like();
    params.actor.backward(mb.obs, &fw.actor_cache, d_mean, &mut grads.actor);
    params.critic.backward(mb.obs, &fw.critic_cache, d_values, &mut grads.critic);
    d_log_std -= spec.entropy_coef;
    grads.log_std = d_log_std;
    Ok((out, Some(grads)))
}

/// Critic values for a batch of observations.
pub fn critic_batch(params: &PolicyParams, obs: ArrayView2<f64>) -> Vec<f64> {
    params.critic.forward(obs).0.index_axis(Axis(1), 0).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn same_seed_same_params() {
        let arch = ArchConfig::default();
        assert_eq!(PolicyParams::init(7, &arch).unwrap(), PolicyParams::init(7, &arch).unwrap());
        assert_ne!(PolicyParams::init(7, &arch).unwrap(), PolicyParams::init(8, &arch).unwrap());
    }

    #[test]
    fn initial_std_is_point_seven() {
        let p = PolicyParams::init(0, &ArchConfig::default()).unwrap();
        for s in p.std().iter() {
            assert!((s - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn actor_param_count() {
        let p = PolicyParams::init(0, &ArchConfig::default()).unwrap();
        assert_eq!(p.actor_param_count(), 195 * 256 + 256 + 256 * 256 + 256 + 256 * 13 + 13);
        assert_eq!(p.actor_param_count(), 119_309);
    }

    #[test]
    fn zero_width_rejected() {
        let arch = ArchConfig { hidden: vec![0], ..ArchConfig::default() };
        assert!(matches!(PolicyParams::init(0, &arch), Err(Error::Config(_))));
    }

    #[test]
    fn zero_params_give_zero_outputs() {
        let p = PolicyParams::zeros(&ArchConfig::default()).unwrap();
        let obs = vec![0.5; OBS_DIM];
        assert!(p.actor_forward(&obs).unwrap().iter().all(|&m| m == 0.0));
        assert_eq!(p.critic_forward(&obs).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let p = PolicyParams::zeros(&ArchConfig::default()).unwrap();
        assert!(matches!(p.actor_forward(&[0.0; 10]), Err(Error::Shape(_))));
    }

    #[test]
    fn outputs_finite_at_bounds() {
        let p = PolicyParams::init(3, &ArchConfig::default()).unwrap();
        for v in [3.0, -3.0] {
            let obs = vec![v; OBS_DIM];
            assert!(p.actor_forward(&obs).unwrap().iter().all(|m| m.is_finite()));
            assert!(p.critic_forward(&obs).unwrap().is_finite());
        }
    }

    #[test]
    fn toy_critic_by_hand() {
        let arch = ArchConfig { obs_dim: 1, hidden: vec![1], action_dim: 1 };
        let mut p = PolicyParams::zeros(&arch).unwrap();
        p.critic.layers[0] = Linear { weight: array![[0.8]], bias: array![-0.1] };
        p.critic.layers[1] = Linear { weight: array![[2.0]], bias: array![0.3] };
        let v = p.critic_forward(&[0.5]).unwrap();
        assert!((v - (2.0 * (0.8f64 * 0.5 - 0.1).tanh() + 0.3)).abs() < 1e-15);
        assert_eq!(v, p.critic_forward(&[0.5]).unwrap());
    }

    #[test]
    fn log_prob_at_mean_unit_std() {
        let lp = gaussian_log_prob(&[0.0; 13], &[0.0; 13], &[0.0; 13]);
        assert!((lp - (-13.0 * HALF_LN_2PI)).abs() < 1e-12);
        assert!((lp + 11.946_2).abs() < 1e-4);
    }

    #[test]
    fn tiny_std_sample_is_mean() {
        let mut p = PolicyParams::init(1, &ArchConfig::default()).unwrap();
        p.set_std(1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = p.sample(&Observation::zeros(), &mut rng);
        for (a, m) in s.action_raw.iter().zip(&s.mean) {
            assert!((a - m).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = PolicyParams::init(1, &ArchConfig::default()).unwrap();
        let a = p.sample(&Observation::zeros(), &mut ChaCha8Rng::seed_from_u64(5));
        let b = p.sample(&Observation::zeros(), &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        let lp = gaussian_log_prob(&a.action_raw, &a.mean, p.log_std.as_slice().unwrap());
        assert_eq!(lp, a.log_prob);
    }

    #[test]
    fn critic_gradient_zero_at_perfect_fit() {
        let arch = ArchConfig { obs_dim: 195, hidden: vec![8, 8], action_dim: 13 };
        let p = PolicyParams::init(4, &arch).unwrap();
        let obs = Array2::from_shape_fn((5, 195), |(i, j)| ((i * 7 + j) as f64 * 0.37).sin());
        let returns = critic_batch(&p, obs.view());
        let actions = Array2::zeros((5, 13));
        let mb = Minibatch {
            obs: obs.view(),
            actions: actions.view(),
            old_log_probs: &[0.0; 5],
            advantages: &[0.0; 5],
            returns: &returns,
            index: 0,
        };
        let (_, g) = gradients(&p, &mb, &LossSpec::default()).unwrap();
        assert!(g.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn empty_minibatch_rejected() {
        let p = PolicyParams::zeros(&ArchConfig::default()).unwrap();
        let obs = Array2::zeros((0, 195));
        let actions = Array2::zeros((0, 13));
        let mb = Minibatch {
            obs: obs.view(),
            actions: actions.view(),
            old_log_probs: &[],
            advantages: &[],
            returns: &[],
            index: 3,
        };
        assert!(matches!(loss(&p, &mb, &LossSpec::default()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn non_finite_ratio_reports_batch() {
        let arch = ArchConfig { obs_dim: 195, hidden: vec![4], action_dim: 13 };
        let p = PolicyParams::zeros(&arch).unwrap();
        let obs = Array2::zeros((1, 195));
        let actions = Array2::zeros((1, 13));
        let mb = Minibatch {
            obs: obs.view(),
            actions: actions.view(),
            old_log_probs: &[-1e6],
            advantages: &[1.0],
            returns: &[0.0],
            index: 9,
        };
        assert!(matches!(loss(&p, &mb, &LossSpec::default()), Err(Error::Numeric { batch: 9, .. })));
    }
}
