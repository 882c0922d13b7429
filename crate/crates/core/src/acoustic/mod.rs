//! Decode-and-perceive backends.
//!
//! A backend turns an articulatory trajectory into audio, finds syllables in
//! that audio, embeds the most recent one and compares it with a target
//! embedding. [`ReferenceBackend`] does this locally with a source-filter
//! synthesizer and a log-mel perceiver; [`crate::bridge::BridgeBackend`]
//! forwards the same calls to an external process.

mod detect;
mod mel;
mod reference;
mod synth;
mod target;
pub mod wav;

use serde::{Deserialize, Serialize};

pub use detect::{detect_syllables, hop_rms, segments_from_rms, DetectorConfig};
pub use mel::{embed, MelAnalyzer, N_MELS};
pub use reference::{ReferenceBackend, ReferenceConfig};
pub use synth::{synthesize, FormantFrame, Synthesizer};
pub use target::{make_target, resample_linear, TargetSource};

use crate::env::{RewardSignal, Trajectory};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono audio in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Fixed-length syllable embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyllableEmbedding {
    values: Vec<f64>,
}

impl SyllableEmbedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTarget("embedding has non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().map(|v| -v).collect() }
    }
}

/// A detected syllable: `[start_sample, end_sample)` plus its embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct SyllableSegment {
    pub start_sample: usize,
    pub end_sample: usize,
    pub embedding: SyllableEmbedding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Reference,
    Bridge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackendDescriptor {
    pub name: String,
    pub embedding_dim: usize,
    pub kind: BackendKind,
}

impl BackendDescriptor {
    pub fn reference(name: impl Into<String>, embedding_dim: usize) -> Self {
        Self { name: name.into(), embedding_dim, kind: BackendKind::Reference }
    }
}

/// Decode-and-perceive scorer used by the environment.
pub trait AcousticBackend {
    fn descriptor(&self) -> BackendDescriptor;

    /// Decode `trajectory`, find the most recently detected syllable and
    /// compare it to `target`. No detection yields a reward of exactly -1.
    fn score(
        &mut self,
        trajectory: &Trajectory,
        target: &SyllableEmbedding,
        step_duration: f64,
    ) -> Result<RewardSignal>;
}

impl<B: AcousticBackend + ?Sized> AcousticBackend for Box<B> {
    fn descriptor(&self) -> BackendDescriptor {
        (**self).descriptor()
    }

    fn score(
        &mut self,
        trajectory: &Trajectory,
        target: &SyllableEmbedding,
        step_duration: f64,
    ) -> Result<RewardSignal> {
        (**self).score(trajectory, target, step_duration)
    }
}

/// Cosine similarity, `a·b / (|a||b|)`, clamped into `[-1, 1]`.
pub fn cosine(a: &SyllableEmbedding, b: &SyllableEmbedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), got: b.dim() });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
