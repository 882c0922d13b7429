use std::ops::Range;
use std::sync::Arc;

use super::detect::{hop_rms_one, segments_from_rms};
use super::mel::{embedding_from_frames, MelFrame};
use super::synth::{synthesize, Synthesizer, DEFAULT_F0};
use super::{
    cosine, detect_syllables, AcousticBackend, BackendDescriptor, DetectorConfig, MelAnalyzer,
    SyllableEmbedding, SyllableSegment, Waveform, DEFAULT_SAMPLE_RATE, N_MELS,
};
use crate::env::{ArticulatorFrame, RewardSignal, Trajectory};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceConfig {
    pub sample_rate: u32,
    pub f0: f64,
    pub detector: DetectorConfig,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { sample_rate: DEFAULT_SAMPLE_RATE, f0: DEFAULT_F0, detector: DetectorConfig::default() }
    }
}

/// Local decode-and-perceive backend.
///
/// Each instance keeps a render cache for the trajectory it scored last:
/// when the next trajectory extends it (the per-step case) only the new
/// frames are synthesized and analysed. Results are identical to the
/// uncached path. Clone one instance per rollout worker.
#[derive(Clone, Debug)]
pub struct ReferenceBackend {
    config: ReferenceConfig,
    analyzer: Arc<MelAnalyzer>,
    cache: Option<RenderCache>,
}

#[derive(Clone, Debug)]
struct RenderCache {
    step_duration: f64,
    frames: Vec<ArticulatorFrame>,
    synth: Synthesizer,
    samples: Vec<f64>,
    rms: Vec<f64>,
    /// Log-mel of the window starting at each hop boundary.
    mel: Vec<MelFrame>,
}

impl ReferenceBackend {
    pub fn new(config: ReferenceConfig) -> Result<Self> {
        config.detector.validate()?;
        if config.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        // Segment boundaries sit on hop boundaries; mel windows are cached per hop.
        let analyzer = MelAnalyzer::new(config.sample_rate);
        if config.detector.hop_samples(config.sample_rate) != analyzer.hop() {
            return Err(Error::Config("detector hop must equal the 10 ms analysis hop".into()));
        }
        Ok(Self { config, analyzer: Arc::new(analyzer), cache: None })
    }

    pub fn config(&self) -> &ReferenceConfig {
        &self.config
    }

    pub fn analyzer(&self) -> &MelAnalyzer {
        &self.analyzer
    }

    pub fn synthesize(&self, trajectory: &Trajectory, step_duration: f64) -> Result<Waveform> {
        if self.config.f0 == DEFAULT_F0 {
            return synthesize(trajectory, step_duration, self.config.sample_rate);
        }
        if trajectory.is_empty() {
            return Err(Error::EmptyInput("trajectory"));
        }
        let mut synth = Synthesizer::with_f0(step_duration, self.config.sample_rate, self.config.f0)?;
        let mut samples = Vec::new();
        for f in &trajectory.frames {
            synth.render_frame(f, &mut samples);
        }
        Ok(Waveform::new(samples, self.config.sample_rate))
    }

    pub fn detect(&self, w: &Waveform) -> Result<Vec<SyllableSegment>> {
        detect_syllables(w, &self.config.detector, &self.analyzer)
    }

    /// Uncached scoring: synthesize, detect, compare the last syllable.
    pub fn score_uncached(
        &self,
        trajectory: &Trajectory,
        target: &SyllableEmbedding,
        step_duration: f64,
    ) -> Result<RewardSignal> {
        let w = self.synthesize(trajectory, step_duration)?;
        let segs = self.detect(&w)?;
        match segs.last() {
            None => Ok(RewardSignal::undetected()),
            Some(seg) => Ok(RewardSignal::detected(cosine(&seg.embedding, target)?)),
        }
    }

    /// Embedding of the last detected syllable, if any.
    pub fn last_syllable(&self, w: &Waveform) -> Result<Option<SyllableEmbedding>> {
        Ok(self.detect(w)?.pop().map(|s| s.embedding))
    }

    fn refresh_cache(&mut self, trajectory: &Trajectory, step_duration: f64) -> Result<&RenderCache> {
        let reusable = self.cache.as_ref().is_some_and(|c| {
            c.step_duration == step_duration
                && c.frames.len() <= trajectory.len()
                && c.frames[..] == trajectory.frames[..c.frames.len()]
        });
        if !reusable {
            self.cache = Some(RenderCache {
                step_duration,
                frames: Vec::with_capacity(trajectory.len()),
                synth: Synthesizer::with_f0(step_duration, self.config.sample_rate, self.config.f0)?,
                samples: Vec::new(),
                rms: Vec::new(),
                mel: Vec::new(),
            });
        }
        let hop = self.analyzer.hop();
        let analyzer = Arc::clone(&self.analyzer);
        let cache = self.cache.as_mut().expect("cache initialised above");
        for f in &trajectory.frames[cache.frames.len()..] {
            cache.synth.render_frame(f, &mut cache.samples);
            cache.frames.push(*f);
        }
        while (cache.rms.len() + 1) * hop <= cache.samples.len() {
            let s = cache.rms.len() * hop;
            cache.rms.push(hop_rms_one(&cache.samples[s..s + hop]));
        }
        while cache.mel.len() * hop + analyzer.window_len() <= cache.samples.len() {
            let s = cache.mel.len() * hop;
            cache.mel.push(analyzer.log_mel_frame(&cache.samples[s..s + analyzer.window_len()]));
        }
        Ok(cache)
    }
}

impl AcousticBackend for ReferenceBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::reference("reference", N_MELS)
    }

    fn score(
        &mut self,
        trajectory: &Trajectory,
        target: &SyllableEmbedding,
        step_duration: f64,
    ) -> Result<RewardSignal> {
        self.score_with_segments(trajectory, target, step_duration).map(|(r, _)| r)
    }
}

impl ReferenceBackend {
    /// Cached score plus the sample ranges of every detected syllable.
    pub fn score_with_segments(
        &mut self,
        trajectory: &Trajectory,
        target: &SyllableEmbedding,
        step_duration: f64,
    ) -> Result<(RewardSignal, Vec<Range<usize>>)> {
        if trajectory.is_empty() {
            return Err(Error::EmptyInput("trajectory"));
        }
        if target.dim() != N_MELS {
            return Err(Error::DimMismatch { expected: N_MELS, got: target.dim() });
        }
        let detector = self.config.detector;
        let sample_rate = self.config.sample_rate;
        let window_len = self.analyzer.window_len();
        let hop = self.analyzer.hop();
        let cache = self.refresh_cache(trajectory, step_duration)?;
        let segs = segments_from_rms(&cache.rms, detector.rms_threshold, detector.min_hops(sample_rate));
        let ranges = segs.iter().map(|&(a, b)| a * hop..b * hop).collect();
        let Some(&(a, b)) = segs.last() else {
            return Ok((RewardSignal::undetected(), ranges));
        };
        // Same windows as MelAnalyzer::embed over [a·hop, b·hop).
        let len = (b - a) * hop;
        if len < window_len {
            return Err(Error::TooShort { len, min: window_len });
        }
        let n = (len - window_len) / hop + 1;
        let emb = embedding_from_frames(&cache.mel[a..a + n])?;
        Ok((RewardSignal::detected(cosine(&emb, target)?), ranges))
    }
}
