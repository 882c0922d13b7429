//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [episode]
//! horizon = 50
//! step_duration = 0.02
//! reward_mode = "per_step"      # or "terminal_only"
//!
//! [train]                       # any TrainConfig field
//! total_episodes = 20000
//!
//! [backend]
//! kind = "reference"            # or "bridge"
//! # command = ["python", "-m", "server"]   # bridge over stdio
//! # address = "127.0.0.1:7000"             # bridge over TCP
//!
//! [target]
//! fixture = "aa"                # or trajectory / wav / syllable / embedding
//!
//! [output]
//! dir = "runs/aa"
//! checkpoint_interval = 1000
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::acoustic::{BackendKind, DetectorConfig, ReferenceConfig, DEFAULT_SAMPLE_RATE};
use crate::bridge::{BridgeOptions, Endpoint};
use crate::env::{RewardMode, DEFAULT_HORIZON, DEFAULT_STEP_DURATION};
use crate::error::{Error, Result};
use crate::policy::ArchConfig;
use crate::ppo::TrainConfig;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSection {
    pub horizon: usize,
    pub step_duration: f64,
    pub reward_mode: RewardMode,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        Self { horizon: DEFAULT_HORIZON, step_duration: DEFAULT_STEP_DURATION, reward_mode: RewardMode::PerStep }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub sample_rate: u32,
    pub rms_threshold: f64,
    pub min_duration: f64,
    pub command: Option<Vec<String>>,
    pub address: Option<String>,
    /// Seconds to wait for each bridge response.
    pub timeout: f64,
}

impl Default for BackendSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            kind: BackendKind::Reference,
            sample_rate: DEFAULT_SAMPLE_RATE,
            rms_threshold: d.rms_threshold,
            min_duration: d.min_duration_seconds,
            command: None,
            address: None,
            timeout: 30.0,
        }
    }
}

impl BackendSection {
    pub fn reference(&self) -> ReferenceConfig {
        ReferenceConfig {
            sample_rate: self.sample_rate,
            detector: DetectorConfig {
                rms_threshold: self.rms_threshold,
                min_duration_seconds: self.min_duration,
                ..DetectorConfig::default()
            },
            ..ReferenceConfig::default()
        }
    }

    pub fn endpoint(&self) -> Result<Endpoint> {
        match (&self.command, &self.address) {
            (Some(c), None) => Ok(Endpoint::Command(c.clone())),
            (None, Some(a)) => Ok(Endpoint::Tcp(a.clone())),
            _ => Err(Error::Config("backend.kind = \"bridge\" needs exactly one of backend.command or backend.address".into())),
        }
    }

    pub fn bridge_options(&self) -> BridgeOptions {
        BridgeOptions { timeout: Duration::from_secs_f64(self.timeout), sample_rate: self.sample_rate }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    /// Shipped expert trajectory name.
    pub fixture: Option<String>,
    /// Trajectory CSV.
    pub trajectory: Option<PathBuf>,
    pub wav: Option<PathBuf>,
    /// Syllable id understood by the backend.
    pub syllable: Option<String>,
    /// Embedding JSON written by `make-target`.
    pub embedding: Option<PathBuf>,
}

/// The one target source a config names.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Fixture(String),
    Trajectory(PathBuf),
    Wav(PathBuf),
    Syllable(String),
    Embedding(PathBuf),
}

impl TargetSpec {
    /// Identifier recorded with the target.
    pub fn id(&self) -> String {
        let stem = |p: &Path| p.file_stem().map_or_else(|| "target".into(), |s| s.to_string_lossy().into_owned());
        match self {
            Self::Fixture(n) | Self::Syllable(n) => n.clone(),
            Self::Trajectory(p) | Self::Wav(p) | Self::Embedding(p) => stem(p),
        }
    }
}

impl TargetSection {
    pub fn spec(&self) -> Result<Option<TargetSpec>> {
        let mut found = Vec::new();
        if let Some(v) = &self.fixture {
            found.push(TargetSpec::Fixture(v.clone()));
        }
        if let Some(v) = &self.trajectory {
            found.push(TargetSpec::Trajectory(v.clone()));
        }
        if let Some(v) = &self.wav {
            found.push(TargetSpec::Wav(v.clone()));
        }
        if let Some(v) = &self.syllable {
            found.push(TargetSpec::Syllable(v.clone()));
        }
        if let Some(v) = &self.embedding {
            found.push(TargetSpec::Embedding(v.clone()));
        }
        match found.len() {
            0 => Ok(None),
            1 => Ok(found.pop()),
            _ => Err(Error::Config(
                "target: give exactly one of fixture, trajectory, wav, syllable, embedding".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Episodes between periodic checkpoints; 0 disables them.
    pub checkpoint_interval: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs"), checkpoint_interval: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchSection {
    pub hidden: Vec<usize>,
}

impl Default for ArchSection {
    fn default() -> Self {
        Self { hidden: ArchConfig::default().hidden }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `train.seed` when set.
    pub seed: Option<u64>,
    pub episode: EpisodeSection,
    pub train: TrainConfig,
    pub arch: ArchSection,
    pub backend: BackendSection,
    pub target: TargetSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(seed) = cfg.seed {
            cfg.train.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and resolve relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.target.trajectory, &mut self.target.wav, &mut self.target.embedding]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    /// Referenced input files must exist.
    pub fn check_paths(&self) -> Result<()> {
        for p in [&self.target.trajectory, &self.target.wav, &self.target.embedding].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("target file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.episode.horizon == 0 || !(self.episode.step_duration > 0.0) {
            return Err(Error::Config("episode.horizon must be >= 1 and episode.step_duration > 0".into()));
        }
        self.target.spec()?;
        if self.backend.kind == BackendKind::Bridge {
            self.backend.endpoint()?;
        }
        if !(self.backend.timeout > 0.0) {
            return Err(Error::Config("backend.timeout must be positive".into()));
        }
        self.arch().validate()
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig { hidden: self.arch.hidden.clone(), ..ArchConfig::default() }
    }
}
