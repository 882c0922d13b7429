//! Reference source-filter synthesizer.
//!
//! Per frame: amplitude `A = max(0, L)/3` scaled by lip aperture
//! `g = clamp(UL_y - LL_y + 1, 0, 1)`, a 120 Hz pulse source and a parallel
//! bank of three constant-peak-gain resonators with
//!
//! ```text
//! F1 = 500 + 200·(-TD_y)   F2 = 1500 + 400·(-TD_x)   F3 = 2500 + 150·(-TT_y)
//! ```
//!
//! each clamped to `[150, 0.45·sample_rate]` Hz.
//!
//! Parameters ramp linearly across each frame from the previous frame's
//! value to the current one (the reset posture precedes frame 0), so the
//! samples of frame `k` depend only on frames `..=k`. Rendering a prefix of a
//! trajectory therefore reproduces the head of rendering the whole of it,
//! which lets per-step scoring render incrementally.

use std::f64::consts::PI;

use super::Waveform;
use crate::env::{Articulator, ArticulatorFrame, Trajectory, POSITION_BOUND};
use crate::error::{Error, Result};

pub const DEFAULT_F0: f64 = 120.0;
const FORMANT_FLOOR_HZ: f64 = 150.0;
const FORMANT_CEIL_FRACTION: f64 = 0.45;
const BANDWIDTHS_HZ: [f64; 3] = [90.0, 120.0, 160.0];
/// Relative level of each resonance in the parallel bank.
const FORMANT_GAINS: [f64; 3] = [1.0, 0.8, 0.6];
/// Highest source harmonic, so every sample rate renders the same band.
const SOURCE_BAND_HZ: f64 = 7800.0;
/// Brings a fully open, full-loudness vowel to roughly 0.3 RMS.
const OUTPUT_GAIN: f64 = 3.0;

/// Acoustic parameters derived from one articulator frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormantFrame {
    pub amplitude: f64,
    pub formants: [f64; 3],
}

impl FormantFrame {
    pub fn from_articulators(frame: &ArticulatorFrame, sample_rate: u32) -> Self {
        let ceil = FORMANT_CEIL_FRACTION * sample_rate as f64;
        let clampf = |f: f64| f.clamp(FORMANT_FLOOR_HZ, ceil);
        let aperture = (frame.y(Articulator::UL) - frame.y(Articulator::LL) + 1.0).clamp(0.0, 1.0);
        let amplitude = frame.loudness().max(0.0) / POSITION_BOUND * aperture;
        Self {
            amplitude,
            formants: [
                clampf(500.0 + 200.0 * -frame.y(Articulator::TD)),
                clampf(1500.0 + 400.0 * -frame.x(Articulator::TD)),
                clampf(2500.0 + 150.0 * -frame.y(Articulator::TT)),
            ],
        }
    }

    fn lerp(&self, other: &Self, t: f64) -> Self {
        let mix = |a: f64, b: f64| a + (b - a) * t;
        Self {
            amplitude: mix(self.amplitude, other.amplitude),
            formants: [
                mix(self.formants[0], other.formants[0]),
                mix(self.formants[1], other.formants[1]),
                mix(self.formants[2], other.formants[2]),
            ],
        }
    }
}

/// Band-pass biquad with 0 dB gain at its centre frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Resonator {
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    #[inline]
    fn process(&mut self, x: f64, freq: f64, bw: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        let alpha = w.sin() * bw / (2.0 * freq);
        let a0 = 1.0 + alpha;
        let y = (alpha * (x - self.x2) + 2.0 * w.cos() * self.y1 - (1.0 - alpha) * self.y2) / a0;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Streaming synthesizer. Feed frames in order with [`Synthesizer::render_frame`].
#[derive(Clone, Debug)]
pub struct Synthesizer {
    sample_rate: u32,
    samples_per_frame: usize,
    f0: f64,
    phase: f64,
    harmonics: usize,
    prev: FormantFrame,
    tract: [Resonator; 3],
    frames_rendered: usize,
}

impl Synthesizer {
    pub fn new(step_duration: f64, sample_rate: u32) -> Result<Self> {
        Self::with_f0(step_duration, sample_rate, DEFAULT_F0)
    }

    pub fn with_f0(step_duration: f64, sample_rate: u32, f0: f64) -> Result<Self> {
        let samples_per_frame = samples_per_frame(step_duration, sample_rate)?;
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(Error::Config(format!("f0 must be positive, got {f0}")));
        }
        Ok(Self {
            sample_rate,
            samples_per_frame,
            f0,
            phase: 0.0,
            harmonics: ((SOURCE_BAND_HZ.min(0.5 * sample_rate as f64) / f0).floor() as usize).max(1),
            prev: FormantFrame::from_articulators(&ArticulatorFrame::zero(), sample_rate),
            tract: [Resonator::default(); 3],
            frames_rendered: 0,
        })
    }

    pub fn samples_per_frame(&self) -> usize {
        self.samples_per_frame
    }

    pub fn frames_rendered(&self) -> usize {
        self.frames_rendered
    }

    /// Append one frame's worth of samples to `out`.
    pub fn render_frame(&mut self, frame: &ArticulatorFrame, out: &mut Vec<f64>) {
        let sr = self.sample_rate as f64;
        let cur = FormantFrame::from_articulators(frame, self.sample_rate);
        let n = self.samples_per_frame;
        let inc = self.f0 / sr;
        out.reserve(n);
        for j in 0..n {
            let p = self.prev.lerp(&cur, (j + 1) as f64 / n as f64);
            let pulse = band_limited_pulse(self.phase, self.harmonics);
            self.phase += inc;
            if self.phase >= 1.0 {
                self.phase -= 1.0;
            }
            let mut s = 0.0;
            for (k, res) in self.tract.iter_mut().enumerate() {
                s += FORMANT_GAINS[k] * res.process(pulse, p.formants[k], BANDWIDTHS_HZ[k], sr);
            }
            let y = (s * p.amplitude * OUTPUT_GAIN * (sr / self.f0).sqrt()).clamp(-1.0, 1.0);
            // Keep exact zeros exact for silent stretches.
            out.push(if p.amplitude == 0.0 { 0.0 } else { y });
        }
        self.prev = cur;
        self.frames_rendered += 1;
    }
}

/// `(1/K) Σ_{k=1..K} cos(2πk·phase)`, evaluated with the Dirichlet kernel.
/// Peaks at 1 once per period.
#[inline]
fn band_limited_pulse(phase: f64, harmonics: usize) -> f64 {
    let half = PI * phase;
    let den = half.sin();
    let k = harmonics as f64;
    if den.abs() < 1e-9 {
        return 1.0;
    }
    ((((2.0 * k + 1.0) * half).sin() / (2.0 * den)) - 0.5) / k
}

/// Samples per frame, required to be a whole number.
pub fn samples_per_frame(step_duration: f64, sample_rate: u32) -> Result<usize> {
    if sample_rate == 0 {
        return Err(Error::Config("sample_rate must be positive".into()));
    }
    let exact = step_duration * sample_rate as f64;
    let n = exact.round();
    if !(step_duration > 0.0) || n < 1.0 || (exact - n).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "step_duration {step_duration} s is not a whole number of samples at {sample_rate} Hz"
        )));
    }
    Ok(n as usize)
}

/// Render a whole trajectory. Length is `frames × step_duration × sample_rate`.
pub fn synthesize(trajectory: &Trajectory, step_duration: f64, sample_rate: u32) -> Result<Waveform> {
    if trajectory.is_empty() {
        return Err(Error::EmptyInput("trajectory"));
    }
    let mut synth = Synthesizer::new(step_duration, sample_rate)?;
    let mut samples = Vec::with_capacity(trajectory.len() * synth.samples_per_frame());
    for f in &trajectory.frames {
        synth.render_frame(f, &mut samples);
    }
    Ok(Waveform::new(samples, sample_rate))
}
