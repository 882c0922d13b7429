//! Energy-based syllable detection: RMS over 10 ms hops, a syllable is a
//! maximal run of hops at or above threshold lasting at least 60 ms.

use super::mel::MelAnalyzer;
use super::{SyllableSegment, Waveform};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    pub hop_seconds: f64,
    pub rms_threshold: f64,
    pub min_duration_seconds: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { hop_seconds: 0.010, rms_threshold: 0.02, min_duration_seconds: 0.060 }
    }
}

impl DetectorConfig {
    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop_seconds * sample_rate as f64).round() as usize).max(1)
    }

    /// Shortest run, in hops, that counts as a syllable.
    pub fn min_hops(&self, sample_rate: u32) -> usize {
        let hop = self.hop_samples(sample_rate) as f64;
        let min_samples = self.min_duration_seconds * sample_rate as f64;
        ((min_samples / hop) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.hop_seconds > 0.0
            && self.rms_threshold > 0.0
            && self.min_duration_seconds >= 0.0
            && self.hop_seconds.is_finite()
            && self.rms_threshold.is_finite()
            && self.min_duration_seconds.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid detector settings {self:?}")))
        }
    }
}

/// RMS of each complete hop. A trailing partial hop is ignored.
pub fn hop_rms(samples: &[f64], hop: usize) -> Vec<f64> {
    samples.chunks_exact(hop).map(hop_rms_one).collect()
}

#[inline]
pub(crate) fn hop_rms_one(chunk: &[f64]) -> f64 {
    (chunk.iter().map(|s| s * s).sum::<f64>() / chunk.len() as f64).sqrt()
}

/// Runs of hops with `rms >= threshold` at least `min_hops` long, as hop
/// index ranges `[start, end)`.
pub fn segments_from_rms(rms: &[f64], threshold: f64, min_hops: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &r) in rms.iter().enumerate() {
        match (r >= threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_hops {
                    out.push((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if rms.len() - s >= min_hops {
            out.push((s, rms.len()));
        }
    }
    out
}

/// Detect syllables and embed each one. Silence yields an empty list.
pub fn detect_syllables(
    w: &Waveform,
    cfg: &DetectorConfig,
    analyzer: &MelAnalyzer,
) -> Result<Vec<SyllableSegment>> {
    let hop = cfg.hop_samples(w.sample_rate);
    let rms = hop_rms(&w.samples, hop);
    segments_from_rms(&rms, cfg.rms_threshold, cfg.min_hops(w.sample_rate))
        .into_iter()
        .map(|(a, b)| {
            let (start, end) = (a * hop, b * hop);
            Ok(SyllableSegment {
                start_sample: start,
                end_sample: end,
                embedding: analyzer.embed(w, start..end)?,
            })
        })
        .collect()
}
