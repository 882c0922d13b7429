use std::path::PathBuf;

use super::{wav, ReferenceBackend, SyllableEmbedding, Waveform};
use crate::env::Trajectory;
use crate::error::{Error, Result};

/// Where a target syllable comes from.
#[derive(Clone, Debug)]
pub enum TargetSource {
    /// An articulatory trajectory, rendered with the reference synthesizer.
    Trajectory { trajectory: Trajectory, step_duration: f64 },
    /// Recorded audio, resampled to the backend rate if needed.
    Audio(Waveform),
    WavFile(PathBuf),
}

/// Embedding of the last syllable detected in the source.
pub fn make_target(source: &TargetSource, backend: &ReferenceBackend) -> Result<SyllableEmbedding> {
    let rate = backend.config().sample_rate;
    let audio = match source {
        TargetSource::Trajectory { trajectory, step_duration } => {
            if trajectory.is_empty() {
                return Err(Error::InvalidTarget("empty trajectory".into()));
            }
            backend.synthesize(trajectory, *step_duration)?
        }
        TargetSource::Audio(w) => resample_linear(w, rate),
        TargetSource::WavFile(p) => resample_linear(&wav::read(p)?, rate),
    };
    backend
        .last_syllable(&audio)?
        .ok_or_else(|| Error::InvalidTarget("no syllable detected in target audio".into()))
}

/// Linear-interpolation resampling. Output length is
/// `round(len · rate / w.sample_rate)`.
pub fn resample_linear(w: &Waveform, rate: u32) -> Waveform {
    if w.sample_rate == rate || w.samples.is_empty() {
        return Waveform::new(w.samples.clone(), rate);
    }
    let ratio = w.sample_rate as f64 / rate as f64;
    let n_out = (w.samples.len() as f64 / ratio).round() as usize;
    let last = w.samples.len() - 1;
    let samples = (0..n_out)
        .map(|i| {
            let x = i as f64 * ratio;
            let j = (x.floor() as usize).min(last);
            let frac = x - j as f64;
            let a = w.samples[j];
            let b = w.samples[(j + 1).min(last)];
            a + (b - a) * frac
        })
        .collect();
    Waveform::new(samples, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic::{cosine, ReferenceConfig};
    use crate::env::ArticulatorFrame;
    use crate::fixtures;

    #[test]
    fn expert_fixture_gives_unit_embedding() {
        let b = ReferenceBackend::new(ReferenceConfig::default()).unwrap();
        for name in fixtures::NAMES {
            let t = fixtures::expert_trajectory(name).unwrap();
            let e = make_target(&TargetSource::Trajectory { trajectory: t, step_duration: 0.02 }, &b)
                .unwrap();
            assert!((e.norm() - 1.0).abs() < 1e-9, "{name}");
        }
    }

    #[test]
    fn silent_trajectory_is_invalid_target() {
        let b = ReferenceBackend::new(ReferenceConfig::default()).unwrap();
        let t = Trajectory::from_frames(vec![ArticulatorFrame::zero(); 50], "s");
        let err = make_target(&TargetSource::Trajectory { trajectory: t, step_duration: 0.02 }, &b)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidTarget(_)));
    }

    /// Band-limited interpolation of a whole-second signal by zero-padding its spectrum.
    fn fourier_resample(w: &Waveform, rate: u32) -> Waveform {
        use rustfft::{num_complex::Complex, FftPlanner};
        let (n, m) = (w.len(), (w.len() as u64 * rate as u64 / w.sample_rate as u64) as usize);
        let mut planner = FftPlanner::new();
        let mut spec: Vec<Complex<f64>> = w.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut spec);
        let mut out = vec![Complex::new(0.0, 0.0); m];
        let half = n / 2;
        for k in 0..half {
            out[k] = spec[k];
            if k > 0 {
                out[m - k] = spec[n - k];
            }
        }
        planner.plan_fft_inverse(m).process(&mut out);
        Waveform::new(out.iter().map(|c| c.re / n as f64).collect(), rate)
    }

    #[test]
    fn resampled_wav_matches_native_rate() {
        let b = ReferenceBackend::new(ReferenceConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for name in fixtures::NAMES {
            let t = fixtures::expert_trajectory(name).unwrap();
            let mut native = b.synthesize(&t, 0.02).unwrap();
            native.samples.resize(16_000, 0.0);
            let direct = make_target(&TargetSource::Audio(native.clone()), &b).unwrap();
            for rate in [22_050, 44_100, 48_000] {
                let path = dir.path().join(format!("{name}_{rate}.wav"));
                wav::write(&path, &fourier_resample(&native, rate)).unwrap();
                let via_file = make_target(&TargetSource::WavFile(path), &b).unwrap();
                let c = cosine(&direct, &via_file).unwrap();
                assert!(c >= 0.99, "{name} at {rate} Hz: cosine {c}");
            }
        }
    }

    #[test]
    fn resample_length() {
        let w = Waveform::new(vec![0.0; 441], 44_100);
        assert_eq!(resample_linear(&w, 16_000).len(), 160);
        let up = resample_linear(&Waveform::new(vec![0.0, 1.0], 8_000), 16_000);
        assert_eq!(up.samples, vec![0.0, 0.5, 1.0, 1.0]);
    }
}
