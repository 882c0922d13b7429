//! Render a shipped expert trajectory to a WAV and list detected syllables.
//!
//! ```text
//! cargo run --release --example synthesize_vowel -- uw /tmp/uw.wav
//! ```

use artic::acoustic::{wav, ReferenceBackend, ReferenceConfig};
use artic::fixtures;

fn main() -> artic::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "aa".into());
    let out = args.next().unwrap_or_else(|| format!("{name}.wav"));

    let backend = ReferenceBackend::new(ReferenceConfig::default())?;
    let traj = fixtures::expert_trajectory(&name)?;
    let w = backend.synthesize(&traj, fixtures::STEP_DURATION)?;
    wav::write(&out, &w)?;
    let peak = w.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    println!("{name}: {} samples at {} Hz, {:.2} s, peak {peak:.3}", w.len(), w.sample_rate, w.duration());
    for seg in backend.detect(&w)? {
        let sr = w.sample_rate as f64;
        println!("  syllable {:.3}s .. {:.3}s", seg.start_sample as f64 / sr, seg.end_sample as f64 / sr);
    }
    println!("wrote {out}");
    Ok(())
}
