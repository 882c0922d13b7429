//! Interrupt a short run, resume it from a checkpoint file, and check that
//! it continues exactly as the uninterrupted run.
//!
//! ```text
//! cargo run --release --example checkpoint_resume
//! ```

use artic::acoustic::{make_target, ReferenceBackend, ReferenceConfig, TargetSource};
use artic::checkpoint::Checkpoint;
use artic::env::EpisodeConfig;
use artic::fixtures;
use artic::policy::ArchConfig;
use artic::ppo::{TrainConfig, Trainer};

fn main() -> artic::Result<()> {
    let mut backend = ReferenceBackend::new(ReferenceConfig::default())?;
    let trajectory = fixtures::expert_trajectory("uw")?;
    let target = make_target(&TargetSource::Trajectory { trajectory, step_duration: fixtures::STEP_DURATION }, &backend)?;
    let ep = EpisodeConfig::new(target, "uw");
    let arch = ArchConfig { hidden: vec![64, 64], ..ArchConfig::default() };
    let cfg = TrainConfig { total_episodes: 60, seed: 11, ..TrainConfig::default() };

    let mut straight = Trainer::new(cfg.clone(), ep.clone(), &arch)?;
    let mut rows_a = Vec::new();
    straight.train(&mut backend, &mut |_: &Trainer, s: &artic::ppo::UpdateStats| {
        rows_a.push(s.csv_row());
        Ok(())
    })?;

    let mut first = Trainer::new(TrainConfig { total_episodes: 30, ..cfg.clone() }, ep.clone(), &arch)?;
    let mut rows_b = Vec::new();
    first.train(&mut backend, &mut |_: &Trainer, s: &artic::ppo::UpdateStats| {
        rows_b.push(s.csv_row());
        Ok(())
    })?;
    let path = std::env::temp_dir().join("artic_example_resume.ckpt");
    first.checkpoint().save(&path)?;
    println!("saved after {} episodes to {}", first.episodes_done(), path.display());

    let mut resumed = Trainer::resume(cfg, ep, Checkpoint::load(&path)?)?;
    resumed.train(&mut backend, &mut |_: &Trainer, s: &artic::ppo::UpdateStats| {
        rows_b.push(s.csv_row());
        Ok(())
    })?;
    std::fs::remove_file(&path)?;

    for (a, b) in rows_a.iter().zip(&rows_b) {
        println!("{} {a}", if a == b { "same" } else { "DIFF" });
    }
    let same = rows_a == rows_b && straight.params() == resumed.params();
    println!("resumed run identical: {same}");
    Ok(())
}
