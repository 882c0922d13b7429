//! Compare analytic PPO gradients with central differences on a small net.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use artic::env::{FRAME_DIM, OBS_DIM};
use artic::policy::{gradients, loss, ArchConfig, LossSpec, Minibatch, PolicyParams};
use ndarray::Array2;
use rand::{Rng, SeedableRng};

fn main() -> artic::Result<()> {
    let arch = ArchConfig { hidden: vec![8, 8], ..ArchConfig::default() };
    let params = PolicyParams::init(5, &arch)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let n = 16;
    let obs = Array2::from_shape_fn((n, OBS_DIM), |_| rng.random_range(-1.0..1.0));
    let mut actions = Array2::zeros((n, FRAME_DIM));
    let mut old = Vec::with_capacity(n);
    for i in 0..n {
        let s = params.sample_flat(obs.row(i).as_slice().unwrap(), &mut rng)?;
        actions.row_mut(i).assign(&ndarray::ArrayView1::from(&s.action_raw));
        // Old log-probs near the current ones keep most samples inside the clip band.
        old.push(s.log_prob + rng.random_range(-0.1..0.1));
    }
    let adv: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ret: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mb = Minibatch { obs: obs.view(), actions: actions.view(), old_log_probs: &old, advantages: &adv, returns: &ret, index: 0 };
    let spec = LossSpec::default();

    let (_, g) = gradients(&params, &mb, &spec)?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let tensors = params.tensors().len();
    for t in 0..tensors {
        let len = params.tensors()[t].len();
        for k in (0..len).step_by((len / 5).max(1)) {
            let mut p = params.clone();
            p.tensors_mut()[t][k] += h;
            let up = loss(&p, &mb, &spec)?.total;
            p.tensors_mut()[t][k] -= 2.0 * h;
            let down = loss(&p, &mb, &spec)?.total;
            let fd = (up - down) / (2.0 * h);
            let an = g.tensors()[t][k];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            worst = worst.max(rel);
            println!("tensor {t:>2} [{k:>4}]  analytic {an:+.8e}  numeric {fd:+.8e}  rel {rel:.2e}");
        }
    }
    println!("worst relative error {worst:.3e}");
    Ok(())
}
