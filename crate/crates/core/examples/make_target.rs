//! Target embeddings from a trajectory and from a WAV of the same sound.
//!
//! ```text
//! cargo run --release --example make_target -- iy
//! ```

use artic::acoustic::{cosine, make_target, wav, ReferenceBackend, ReferenceConfig, TargetSource};
use artic::fixtures;

fn main() -> artic::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "iy".into());
    let backend = ReferenceBackend::new(ReferenceConfig::default())?;
    let trajectory = fixtures::expert_trajectory(&name)?;
    let dt = fixtures::STEP_DURATION;

    let from_traj = make_target(&TargetSource::Trajectory { trajectory: trajectory.clone(), step_duration: dt }, &backend)?;

    let path = std::env::temp_dir().join(format!("artic_target_{name}.wav"));
    wav::write(&path, &backend.synthesize(&trajectory, dt)?)?;
    let from_wav = make_target(&TargetSource::WavFile(path.clone()), &backend)?;

    println!("{name}: {} dims, norm {:.6}", from_traj.dim(), from_traj.norm());
    println!("first values {:?}", &from_traj.values()[..4]);
    // 16-bit quantisation is the only difference.
    println!("cosine(trajectory, wav) = {:.6}", cosine(&from_traj, &from_wav)?);
    std::fs::remove_file(path)?;
    Ok(())
}
