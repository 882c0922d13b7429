//! Similarity of every shipped expert trajectory against every target.
//! The diagonal should dominate.
//!
//! ```text
//! cargo run --release --example score_trajectory
//! ```

use artic::acoustic::{make_target, AcousticBackend, ReferenceBackend, ReferenceConfig, TargetSource};
use artic::fixtures;

fn main() -> artic::Result<()> {
    let mut backend = ReferenceBackend::new(ReferenceConfig::default())?;
    let dt = fixtures::STEP_DURATION;
    let mut targets = Vec::new();
    for name in fixtures::NAMES {
        let trajectory = fixtures::expert_trajectory(name)?;
        targets.push(make_target(&TargetSource::Trajectory { trajectory, step_duration: dt }, &backend)?);
    }
    print!("{:>8}", "");
    for name in fixtures::NAMES {
        print!("{name:>8}");
    }
    println!();
    for name in fixtures::NAMES {
        let traj = fixtures::expert_trajectory(name)?;
        print!("{name:>8}");
        for t in &targets {
            let s = backend.score(&traj, t, dt)?;
            print!("{:>8.3}", s.value);
        }
        println!();
    }
    Ok(())
}
