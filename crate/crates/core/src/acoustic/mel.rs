//! Time-averaged log-mel embedding.
//!
//! 40 HTK-mel bands over 25 ms Hann windows every 10 ms, power floored at
//! `1e-10` before the log. The per-window log-mel vectors are averaged over
//! the segment, mean-subtracted across bands and L2-normalized. Scaling the
//! audio by `c` adds `2 ln c` to every band, which the mean subtraction
//! removes.

use std::ops::Range;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{SyllableEmbedding, Waveform};
use crate::error::{Error, Result};

pub const N_MELS: usize = 40;
const WINDOW_SECONDS: f64 = 0.025;
const HOP_SECONDS: f64 = 0.010;
const POWER_FLOOR: f64 = 1e-10;

pub type MelFrame = [f64; N_MELS];

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Sparse triangular filter: first FFT bin and its weights.
#[derive(Clone, Debug)]
struct MelFilter {
    first_bin: usize,
    weights: Vec<f64>,
}

#[derive(Clone)]
pub struct MelAnalyzer {
    sample_rate: u32,
    window_len: usize,
    hop: usize,
    n_fft: usize,
    window: Vec<f64>,
    filters: Vec<MelFilter>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MelAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MelAnalyzer")
            .field("sample_rate", &self.sample_rate)
            .field("window_len", &self.window_len)
            .field("hop", &self.hop)
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl MelAnalyzer {
    pub fn new(sample_rate: u32) -> Self {
        let sr = sample_rate as f64;
        let window_len = (WINDOW_SECONDS * sr).round() as usize;
        let hop = (HOP_SECONDS * sr).round() as usize;
        let n_fft = window_len.next_power_of_two();
        // Periodic Hann.
        let window = (0..window_len)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / window_len as f64).cos())
            .collect();

        let n_bins = n_fft / 2 + 1;
        let bin_hz = sr / n_fft as f64;
        let (mel_lo, mel_hi) = (hz_to_mel(0.0), hz_to_mel(sr / 2.0));
        let edges: Vec<f64> = (0..N_MELS + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (N_MELS + 1) as f64))
            .collect();
        let filters = (0..N_MELS)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let mut first_bin = None;
                let mut weights = Vec::new();
                for k in 0..n_bins {
                    let f = k as f64 * bin_hz;
                    let w = if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    };
                    if w > 0.0 {
                        first_bin.get_or_insert(k);
                        weights.push(w);
                    } else if first_bin.is_some() {
                        break;
                    }
                }
                // Narrow low bands may fall between bins; give them the nearest bin.
                let first_bin = first_bin.unwrap_or_else(|| {
                    weights.push(1.0);
                    ((mid / bin_hz).round() as usize).min(n_bins - 1)
                });
                MelFilter { first_bin, weights }
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Self { sample_rate, window_len, hop, n_fft, window, filters, fft }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Log-mel vector for `window_len` samples starting at `frame[0]`.
    pub fn log_mel_frame(&self, frame: &[f64]) -> MelFrame {
        debug_assert!(frame.len() >= self.window_len);
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        for ((b, &s), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
            b.re = s * w;
        }
        self.fft.process(&mut buf);
        let mut out = [0.0; N_MELS];
        for (o, filt) in out.iter_mut().zip(&self.filters) {
            let energy: f64 = filt
                .weights
                .iter()
                .zip(&buf[filt.first_bin..])
                .map(|(w, c)| w * c.norm_sqr())
                .sum();
            *o = energy.max(POWER_FLOOR).ln();
        }
        out
    }

    /// Number of analysis windows that fit in `len` samples.
    pub fn n_windows(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }

    pub fn embed(&self, w: &Waveform, range: Range<usize>) -> Result<SyllableEmbedding> {
        if range.end > w.len() || range.start > range.end {
            return Err(Error::Shape(format!(
                "segment {range:?} outside waveform of {} samples",
                w.len()
            )));
        }
        let len = range.end - range.start;
        let n = self.n_windows(len);
        if n == 0 {
            return Err(Error::TooShort { len, min: self.window_len });
        }
        let frames: Vec<MelFrame> = (0..n)
            .map(|i| {
                let s = range.start + i * self.hop;
                self.log_mel_frame(&w.samples[s..s + self.window_len])
            })
            .collect();
        embedding_from_frames(&frames)
    }
}

/// Average, mean-subtract and L2-normalize a run of log-mel frames.
pub(crate) fn embedding_from_frames(frames: &[MelFrame]) -> Result<SyllableEmbedding> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("mel frames"));
    }
    let mut mean = [0.0; N_MELS];
    for f in frames {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    let n = frames.len() as f64;
    for m in &mut mean {
        *m /= n;
    }
    let centre = mean.iter().sum::<f64>() / N_MELS as f64;
    for m in &mut mean {
        *m -= centre;
    }
    let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return Err(Error::UndefinedSimilarity);
    }
    SyllableEmbedding::new(mean.iter().map(|v| v / norm).collect())
}

/// Embed a sample range of `w` with a fresh analyzer at `w`'s rate.
pub fn embed(w: &Waveform, range: Range<usize>) -> Result<SyllableEmbedding> {
    MelAnalyzer::new(w.sample_rate).embed(w, range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic::cosine;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tone(freq: f64, n: usize) -> Waveform {
        Waveform::new((0..n).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / 16_000.0).sin()).collect(), 16_000)
    }

    #[test]
    fn geometry() {
        let a = MelAnalyzer::new(16_000);
        assert_eq!((a.window_len(), a.hop(), a.n_fft), (400, 160, 512));
        assert_eq!(a.n_windows(399), 0);
        assert_eq!(a.n_windows(400), 1);
        assert_eq!(a.n_windows(960), 4);
    }

    #[test]
    fn unit_norm() {
        let w = tone(440.0, 4000);
        let e = embed(&w, 0..4000).unwrap();
        assert_eq!(e.dim(), N_MELS);
        assert!((e.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn amplitude_scaling_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..8000).map(|_| rng.random_range(-0.8..0.8)).collect();
        let half: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        let a = embed(&Waveform::new(x, 16_000), 0..8000).unwrap();
        let b = embed(&Waveform::new(half, 16_000), 0..8000).unwrap();
        for (p, q) in a.values().iter().zip(b.values()) {
            assert!((p - q).abs() < 1e-9);
        }
        assert!(1.0 - cosine(&a, &b).unwrap() < 1e-6);
    }

    #[test]
    fn distinct_tones_are_dissimilar() {
        let a = embed(&tone(300.0, 4000), 0..4000).unwrap();
        let b = embed(&tone(3000.0, 4000), 0..4000).unwrap();
        assert!(cosine(&a, &b).unwrap() < 0.9);
    }

    #[test]
    fn too_short_range() {
        let w = tone(440.0, 1000);
        assert!(matches!(embed(&w, 100..450), Err(Error::TooShort { len: 350, min: 400 })));
        assert!(matches!(embed(&w, 0..2000), Err(Error::Shape(_))));
    }

    #[test]
    fn every_band_has_weight() {
        let a = MelAnalyzer::new(16_000);
        assert!(a.filters.iter().all(|f| !f.weights.is_empty()));
    }
}
