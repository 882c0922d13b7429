//! Generalized advantage estimation.

use crate::error::{Error, Result};

/// Advantages and returns for one episode segment.
///
/// `δ_t = r_t + γ v_{t+1} − v_t` with `v_T = bootstrap`,
/// `A_t = Σ_k (γλ)^k δ_{t+k}`, `returns = A + values`. Pass `bootstrap = 0`
/// when the segment ends the episode.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if rewards.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} rewards but {} values",
            rewards.len(),
            values.len()
        )));
    }
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_example() {
        let (a, r) = compute_gae(&[1.0, 1.0], &[0.0, 0.0], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![2.0, 1.0]);
        assert_eq!(r, vec![2.0, 1.0]);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let r = [0.5, -1.0, 0.25];
        let v = [0.1, 0.2, -0.3];
        let (a, _) = compute_gae(&r, &v, 0.7, 0.9, 0.0).unwrap();
        assert_eq!(a[0], 0.5 + 0.9 * 0.2 - 0.1);
        assert_eq!(a[1], -1.0 + 0.9 * -0.3 - 0.2);
        assert_eq!(a[2], 0.25 + 0.9 * 0.7 + 0.3);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(compute_gae(&[1.0], &[], 0.0, 0.99, 0.95), Err(Error::Shape(_))));
    }
}
