//! Clipped surrogate objective.

use crate::error::{Error, Result};

/// One sample's contribution `min(ρA, clip(ρ, 1−ε, 1+ε)·A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateTerm {
    pub value: f64,
    /// The clipped branch is the minimum, so the term is flat in `ρ`.
    pub clipped: bool,
    /// `d value / d ρ = A` (the unclipped branch is active).
    pub gradient_flows: bool,
}

pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> SurrogateTerm {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if clipped < unclipped {
        SurrogateTerm { value: clipped, clipped: true, gradient_flows: false }
    } else {
        SurrogateTerm { value: unclipped, clipped: false, gradient_flows: true }
    }
}

/// Scalar PPO loss and its parts from per-sample quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpoLoss {
    pub total: f64,
    /// `−E[min(ρA, clip(ρ)A)]`.
    pub surrogate: f64,
    /// `E[(V − R)²]`.
    pub value: f64,
    pub clip_fraction: f64,
}

/// `L = −E[min(ρA, clip(ρ,1−ε,1+ε)A)] + c_v·E[(V−R)²] − c_e·H` with
/// `ρ = exp(logπ_new − logπ_old)`.
#[allow(clippy::too_many_arguments)]
pub fn ppo_loss(
    new_log_probs: &[f64],
    old_log_probs: &[f64],
    advantages: &[f64],
    values: &[f64],
    returns: &[f64],
    entropy: f64,
    clip_eps: f64,
    value_coef: f64,
    entropy_coef: f64,
) -> Result<PpoLoss> {
    let n = new_log_probs.len();
    if n == 0 {
        return Err(Error::EmptyInput("loss batch"));
    }
    if [old_log_probs.len(), advantages.len(), values.len(), returns.len()].iter().any(|&l| l != n) {
        return Err(Error::Shape("loss inputs have different lengths".into()));
    }
    let mut surrogate = 0.0;
    let mut value = 0.0;
    let mut clipped = 0usize;
    for i in 0..n {
        let ratio = (new_log_probs[i] - old_log_probs[i]).exp();
        if !ratio.is_finite() {
            return Err(Error::Numeric { batch: 0, what: format!("non-finite ratio at row {i}") });
        }
        let t = clipped_surrogate(ratio, advantages[i], clip_eps);
        surrogate -= t.value;
        clipped += t.clipped as usize;
        value += (values[i] - returns[i]).powi(2);
    }
    let nf = n as f64;
    let (surrogate, value) = (surrogate / nf, value / nf);
    Ok(PpoLoss {
        total: surrogate + value_coef * value - entropy_coef * entropy,
        surrogate,
        value,
        clip_fraction: clipped as f64 / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let t = clipped_surrogate(1.5, 1.0, 0.2);
        assert!((t.value - 1.2).abs() < 1e-12);
        assert!(t.clipped && !t.gradient_flows);

        let t = clipped_surrogate(0.5, -1.0, 0.2);
        assert!((t.value + 0.8).abs() < 1e-12);
        assert!(t.clipped && !t.gradient_flows);

        // Outside the band but on the side where the clip is not the minimum.
        let t = clipped_surrogate(0.5, 1.0, 0.2);
        assert_eq!(t.value, 0.5);
        assert!(t.gradient_flows);
    }

    #[test]
    fn unit_ratio_never_clips() {
        let adv = [1.0, -1.0, 0.3, -0.7];
        let lp = [-1.0, -2.0, -3.0, -4.0];
        let l = ppo_loss(&lp, &lp, &adv, &[0.0; 4], &[0.0; 4], 0.0, 0.2, 0.5, 0.0).unwrap();
        assert_eq!(l.clip_fraction, 0.0);
        assert!((l.surrogate + adv.iter().sum::<f64>() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(ppo_loss(&[0.0], &[0.0, 1.0], &[0.0], &[0.0], &[0.0], 0.0, 0.2, 0.5, 0.0).is_err());
    }
}
