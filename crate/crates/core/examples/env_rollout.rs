//! Step the environment with random actions and print the per-step reward.
//!
//! ```text
//! cargo run --release --example env_rollout -- iy 3
//! ```

use artic::acoustic::{make_target, ReferenceBackend, ReferenceConfig, TargetSource};
use artic::env::{ArticulatoryEnv, EpisodeConfig, ACTION_BOUND, FRAME_DIM};
use artic::fixtures;
use rand::{Rng, SeedableRng};

fn main() -> artic::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "aa".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let mut backend = ReferenceBackend::new(ReferenceConfig::default())?;
    let trajectory = fixtures::expert_trajectory(&name)?;
    let target = make_target(&TargetSource::Trajectory { trajectory, step_duration: fixtures::STEP_DURATION }, &backend)?;
    let mut env = ArticulatoryEnv::new(EpisodeConfig::new(target, name))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    env.reset();
    let mut total = 0.0;
    println!("step,reward,detected,loudness");
    while !env.is_done() {
        // Loudness gets a push upwards so something is audible.
        let mut a: Vec<f64> = (0..FRAME_DIM).map(|_| rng.random_range(-ACTION_BOUND..=ACTION_BOUND)).collect();
        a[FRAME_DIM - 1] = 0.3;
        let out = env.step(&a, &mut backend)?;
        total += out.reward;
        let detected = out.signal.is_some_and(|s| s.detected);
        println!("{},{:.4},{},{:.3}", env.steps(), out.reward, detected, env.current_frame().loudness());
    }
    println!("total reward {total:.3}");
    Ok(())
}
