//! Train a policy on one shipped vowel target with the reference backend.
//!
//! ```text
//! cargo run --release --example train_syllable -- aa 5000
//! ```

use artic::acoustic::{make_target, ReferenceBackend, ReferenceConfig, TargetSource};
use artic::env::EpisodeConfig;
use artic::fixtures;
use artic::policy::ArchConfig;
use artic::ppo::{TrainConfig, Trainer, UpdateStats};

fn main() -> artic::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "aa".into());
    let episodes: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let mut backend = ReferenceBackend::new(ReferenceConfig::default())?;
    let expert = fixtures::expert_trajectory(&name)?;
    let target =
        make_target(&TargetSource::Trajectory { trajectory: expert, step_duration: 0.02 }, &backend)?;

    let cfg = TrainConfig { total_episodes: episodes, seed, ..TrainConfig::default() };
    let mut trainer = Trainer::new(cfg, EpisodeConfig::new(target, name), &ArchConfig::default())?;
    let start = std::time::Instant::now();
    println!("{}", UpdateStats::CSV_HEADER);
    let mut log = |_: &Trainer, s: &UpdateStats| {
        if s.episode % 100 == 0 {
            println!("{}  max={:.3} t={:.0}s", s.csv_row(), s.max_similarity, start.elapsed().as_secs_f64());
        }
        Ok(())
    };
    trainer.train(&mut backend, &mut log)?;
    Ok(())
}
