//! The articulatory control environment.
//!
//! Six articulators (tongue dorsum, tongue blade, tongue tip, lower incisor,
//! upper lip, lower lip) each move in x and y, plus a loudness channel: 13
//! scalars per [`ArticulatorFrame`]. Actions are per-step velocities bounded
//! to `[-0.5, 0.5]`, integrated with a unit-gain Euler step and clamped to the
//! state box `[-3, 3]`. The policy observes the last 15 frames.
//!
//! Rewards come from an [`AcousticBackend`] that decodes the trajectory so far
//! and compares the most recently detected syllable against the target.

use std::fmt;

use crate::acoustic::{AcousticBackend, SyllableEmbedding};
use crate::error::{Error, Result};

pub const NUM_ARTICULATORS: usize = 6;
/// Scalars per frame: 6 × (x, y) + loudness.
pub const FRAME_DIM: usize = 13;
/// Frames in one observation.
pub const STACK_LEN: usize = 15;
pub const OBS_DIM: usize = FRAME_DIM * STACK_LEN;
pub const POSITION_BOUND: f64 = 3.0;
pub const ACTION_BOUND: f64 = 0.5;

pub const DEFAULT_HORIZON: usize = 50;
pub const DEFAULT_STEP_DURATION: f64 = 0.02;

/// Column labels in flattening order.
pub const CHANNEL_NAMES: [&str; FRAME_DIM] = [
    "TD_x", "TD_y", "TB_x", "TB_y", "TT_x", "TT_y", "LI_x", "LI_y", "UL_x", "UL_y", "LL_x", "LL_y",
    "L",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Articulator {
    /// Tongue dorsum.
    TD = 0,
    /// Tongue blade.
    TB = 1,
    /// Tongue tip.
    TT = 2,
    /// Lower incisor.
    LI = 3,
    /// Upper lip.
    UL = 4,
    /// Lower lip.
    LL = 5,
}

impl Articulator {
    pub const ALL: [Articulator; NUM_ARTICULATORS] = [
        Articulator::TD,
        Articulator::TB,
        Articulator::TT,
        Articulator::LI,
        Articulator::UL,
        Articulator::LL,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Flat index of this articulator's x coordinate; y follows at `+1`.
    pub fn x_channel(self) -> usize {
        2 * self.index()
    }

    pub fn y_channel(self) -> usize {
        2 * self.index() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Articulator::TD => "TD",
            Articulator::TB => "TB",
            Articulator::TT => "TT",
            Articulator::LI => "LI",
            Articulator::UL => "UL",
            Articulator::LL => "LL",
        }
    }
}

impl fmt::Display for Articulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One timestep of articulator positions plus loudness, stored flat in
/// channel order `TD_x, TD_y, ..., LL_x, LL_y, L`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ArticulatorFrame([f64; FRAME_DIM]);

impl ArticulatorFrame {
    pub const LOUDNESS: usize = FRAME_DIM - 1;

    pub fn zero() -> Self {
        Self([0.0; FRAME_DIM])
    }

    pub fn from_array(values: [f64; FRAME_DIM]) -> Self {
        Self(values)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; FRAME_DIM] = values.try_into().map_err(|_| {
            Error::Shape(format!("frame needs {FRAME_DIM} values, got {}", values.len()))
        })?;
        Ok(Self(arr))
    }

    pub fn as_array(&self) -> &[f64; FRAME_DIM] {
        &self.0
    }

    pub fn x(&self, art: Articulator) -> f64 {
        self.0[art.x_channel()]
    }

    pub fn y(&self, art: Articulator) -> f64 {
        self.0[art.y_channel()]
    }

    pub fn loudness(&self) -> f64 {
        self.0[Self::LOUDNESS]
    }

    pub fn set_position(&mut self, art: Articulator, x: f64, y: f64) {
        self.0[art.x_channel()] = x;
        self.0[art.y_channel()] = y;
    }

    pub fn set_loudness(&mut self, l: f64) {
        self.0[Self::LOUDNESS] = l;
    }

    pub fn is_within_bounds(&self) -> bool {
        self.0.iter().all(|v| (-POSITION_BOUND..=POSITION_BOUND).contains(v))
    }

    /// Explicit Euler step: `clamp(p + v, -3, 3)` per channel.
    pub fn integrate(&self, action: &Action) -> Self {
        let mut out = [0.0; FRAME_DIM];
        for (o, (p, v)) in out.iter_mut().zip(self.0.iter().zip(action.0.iter())) {
            *o = (p + v).clamp(-POSITION_BOUND, POSITION_BOUND);
        }
        Self(out)
    }
}

impl std::ops::Index<usize> for ArticulatorFrame {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Velocity command, every component in `[-0.5, 0.5]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action([f64; FRAME_DIM]);

impl Action {
    /// Clamps a raw policy output into the action box. Order is preserved.
    pub fn clamp(raw: &[f64]) -> Result<Self> {
        if raw.len() != FRAME_DIM {
            return Err(Error::Shape(format!(
                "action needs {FRAME_DIM} values, got {}",
                raw.len()
            )));
        }
        let mut out = [0.0; FRAME_DIM];
        for (i, (o, &r)) in out.iter_mut().zip(raw).enumerate() {
            if !r.is_finite() {
                return Err(Error::Action { index: i, value: r });
            }
            *o = r.clamp(-ACTION_BOUND, ACTION_BOUND);
        }
        Ok(Self(out))
    }

    pub fn zero() -> Self {
        Self([0.0; FRAME_DIM])
    }

    pub fn as_array(&self) -> &[f64; FRAME_DIM] {
        &self.0
    }
}

/// The last 15 frames, oldest first. `frames()[14]` is the current frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    frames: [ArticulatorFrame; STACK_LEN],
}

impl Observation {
    pub fn zeros() -> Self {
        Self { frames: [ArticulatorFrame::zero(); STACK_LEN] }
    }

    pub fn frames(&self) -> &[ArticulatorFrame; STACK_LEN] {
        &self.frames
    }

    pub fn current(&self) -> &ArticulatorFrame {
        &self.frames[STACK_LEN - 1]
    }

    /// Flattened 195-vector, frame-major.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(OBS_DIM);
        for f in &self.frames {
            out.extend_from_slice(f.as_array());
        }
        out
    }

    pub fn write_into(&self, out: &mut [f64]) {
        for (chunk, f) in out.chunks_exact_mut(FRAME_DIM).zip(&self.frames) {
            chunk.copy_from_slice(f.as_array());
        }
    }

    fn push(&mut self, frame: ArticulatorFrame) {
        self.frames.rotate_left(1);
        self.frames[STACK_LEN - 1] = frame;
    }
}

/// Frames produced by one episode, one per completed step. The reset frame
/// is not included.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trajectory {
    pub frames: Vec<ArticulatorFrame>,
    pub target_id: String,
}

impl Trajectory {
    pub fn new(target_id: impl Into<String>) -> Self {
        Self { frames: Vec::new(), target_id: target_id.into() }
    }

    pub fn from_frames(frames: Vec<ArticulatorFrame>, target_id: impl Into<String>) -> Self {
        Self { frames, target_id: target_id.into() }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn prefix(&self, len: usize) -> Trajectory {
        Trajectory {
            frames: self.frames[..len.min(self.frames.len())].to_vec(),
            target_id: self.target_id.clone(),
        }
    }
}

/// Per-step acoustic reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSignal {
    pub value: f64,
    pub detected: bool,
    /// Only meaningful when `detected`.
    pub similarity: f64,
}

impl RewardSignal {
    pub const NO_SYLLABLE_PENALTY: f64 = -1.0;

    pub fn undetected() -> Self {
        Self { value: Self::NO_SYLLABLE_PENALTY, detected: false, similarity: 0.0 }
    }

    /// Similarity is clamped into `[-1, 1]` to absorb rounding.
    pub fn detected(similarity: f64) -> Self {
        let s = similarity.clamp(-1.0, 1.0);
        Self { value: s, detected: true, similarity: s }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    PerStep,
    /// Only the final step is scored; earlier steps get reward 0.
    TerminalOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub horizon: usize,
    pub step_duration: f64,
    pub target: SyllableEmbedding,
    pub target_id: String,
    pub reward_mode: RewardMode,
}

impl EpisodeConfig {
    pub fn new(target: SyllableEmbedding, target_id: impl Into<String>) -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            step_duration: DEFAULT_STEP_DURATION,
            target,
            target_id: target_id.into(),
            reward_mode: RewardMode::PerStep,
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_step_duration(mut self, step_duration: f64) -> Self {
        self.step_duration = step_duration;
        self
    }

    pub fn with_reward_mode(mut self, mode: RewardMode) -> Self {
        self.reward_mode = mode;
        self
    }

    pub fn episode_seconds(&self) -> f64 {
        self.horizon as f64 * self.step_duration
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.step_duration.is_finite() && self.step_duration > 0.0) {
            return Err(Error::Config(format!(
                "step_duration must be positive, got {}",
                self.step_duration
            )));
        }
        if self.target.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("target embedding has non-finite values".into()));
        }
        Ok(())
    }
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    /// Scalar reward fed to the learner: the signal's value, or 0 on steps
    /// that are not scored in terminal-only mode.
    pub reward: f64,
    pub signal: Option<RewardSignal>,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct ArticulatoryEnv {
    config: EpisodeConfig,
    obs: Observation,
    trajectory: Trajectory,
    steps: usize,
}

impl ArticulatoryEnv {
    pub fn new(config: EpisodeConfig) -> Result<Self> {
        config.validate()?;
        let trajectory = Trajectory::new(config.target_id.clone());
        Ok(Self { config, obs: Observation::zeros(), trajectory, steps: 0 })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    /// Zero every articulator and the frame stack, clear the trajectory.
    pub fn reset(&mut self) -> Observation {
        self.obs = Observation::zeros();
        self.trajectory.frames.clear();
        self.trajectory.target_id.clone_from(&self.config.target_id);
        self.steps = 0;
        self.obs.clone()
    }

    /// Replace the episode configuration and reset.
    pub fn reset_with(&mut self, config: EpisodeConfig) -> Result<Observation> {
        config.validate()?;
        self.config = config;
        Ok(self.reset())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.config.horizon
    }

    pub fn current_frame(&self) -> &ArticulatorFrame {
        self.obs.current()
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn step(&mut self, action_raw: &[f64], backend: &mut dyn AcousticBackend) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::EpisodeFinished { horizon: self.config.horizon });
        }
        let action = Action::clamp(action_raw)?;
        let next = self.obs.current().integrate(&action);
        self.obs.push(next);
        self.trajectory.frames.push(next);
        self.steps += 1;
        let done = self.steps == self.config.horizon;

        let scored = match self.config.reward_mode {
            RewardMode::PerStep => true,
            RewardMode::TerminalOnly => done,
        };
        let signal = if scored {
            let s = backend
                .score(&self.trajectory, &self.config.target, self.config.step_duration)
                .map_err(|e| Error::BackendAtStep { step: self.steps, source: Box::new(e) })?;
            Some(s)
        } else {
            None
        };
        Ok(StepOutcome {
            observation: self.obs.clone(),
            reward: signal.map_or(0.0, |s| s.value),
            signal,
            done,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic::BackendDescriptor;

    /// Scores loud frames as a perfect match and silence as undetected.
    struct LoudnessBackend;

    impl AcousticBackend for LoudnessBackend {
        fn descriptor(&self) -> BackendDescriptor {
            BackendDescriptor::reference("loudness-stub", 1)
        }

        fn score(&mut self, t: &Trajectory, _: &SyllableEmbedding, _: f64) -> Result<RewardSignal> {
            if t.frames.last().is_some_and(|f| f.loudness() > 0.0) {
                Ok(RewardSignal::detected(1.0))
            } else {
                Ok(RewardSignal::undetected())
            }
        }
    }

    fn env(horizon: usize) -> ArticulatoryEnv {
        let target = SyllableEmbedding::new(vec![1.0]).unwrap();
        ArticulatoryEnv::new(EpisodeConfig::new(target, "t").with_horizon(horizon)).unwrap()
    }

    #[test]
    fn articulator_indices_are_fixed() {
        let idx: Vec<usize> = Articulator::ALL.iter().map(|a| a.index()).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(Articulator::LL.y_channel(), 11);
        assert_eq!(CHANNEL_NAMES[Articulator::TT.x_channel()], "TT_x");
    }

    #[test]
    fn reset_gives_zero_observation() {
        let mut e = env(50);
        let obs = e.reset();
        assert_eq!(obs.to_vec(), vec![0.0; OBS_DIM]);
        assert_eq!(e.steps(), 0);
    }

    #[test]
    fn single_step_episode_duration() {
        let e = env(1);
        assert!((e.config().episode_seconds() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn invalid_config_rejected() {
        let target = SyllableEmbedding::new(vec![1.0]).unwrap();
        let cfg = EpisodeConfig::new(target.clone(), "t").with_horizon(0);
        assert!(matches!(ArticulatoryEnv::new(cfg), Err(Error::Config(_))));
        let cfg = EpisodeConfig::new(target, "t").with_step_duration(0.0);
        assert!(matches!(ArticulatoryEnv::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn clamp_action_examples() {
        let mut raw = [0.0; FRAME_DIM];
        raw[0] = 0.7;
        raw[1] = -0.62;
        raw[2] = 0.0;
        raw[3] = 0.3;
        let a = Action::clamp(&raw).unwrap();
        assert_eq!(a.as_array()[0], 0.5);
        assert_eq!(a.as_array()[1], -0.5);
        assert_eq!(a.as_array()[2], 0.0);
        assert_eq!(a.as_array()[3], 0.3);
    }

    #[test]
    fn clamp_action_rejects_non_finite() {
        let mut raw = [0.0; FRAME_DIM];
        raw[4] = f64::NAN;
        assert!(matches!(Action::clamp(&raw), Err(Error::Action { index: 4, .. })));
    }

    #[test]
    fn integrate_examples() {
        let mut raw = [0.0; FRAME_DIM];
        raw[0] = 0.3;
        raw[1] = 0.3;
        raw[2] = -0.5;
        let action = Action::clamp(&raw).unwrap();
        let mut frame = ArticulatorFrame::zero();
        frame.set_position(Articulator::TB, -2.8, 0.0);
        frame.set_position(Articulator::TD, 0.0, 2.9);
        let out = frame.integrate(&action);
        assert_eq!(out.x(Articulator::TD), 0.3);
        assert_eq!(out.y(Articulator::TD), 3.0);
        assert_eq!(out.x(Articulator::TB), -3.0);
    }

    #[test]
    fn zero_action_keeps_zero_observation() {
        let mut e = env(50);
        e.reset();
        let out = e.step(&[0.0; FRAME_DIM], &mut LoudnessBackend).unwrap();
        assert_eq!(out.observation, Observation::zeros());
        assert!(!out.done);
        let s = out.signal.unwrap();
        assert!(!s.detected);
        assert_eq!(s.value, -1.0);
    }

    #[test]
    fn episode_ends_at_horizon() {
        let mut e = env(50);
        e.reset();
        for i in 1..=50 {
            let out = e.step(&[0.1; FRAME_DIM], &mut LoudnessBackend).unwrap();
            assert_eq!(out.done, i == 50);
        }
        assert_eq!(e.trajectory().len(), 50);
        let err = e.step(&[0.0; FRAME_DIM], &mut LoudnessBackend).unwrap_err();
        assert!(matches!(err, Error::EpisodeFinished { horizon: 50 }));
    }

    #[test]
    fn terminal_only_scores_last_step() {
        let target = SyllableEmbedding::new(vec![1.0]).unwrap();
        let cfg = EpisodeConfig::new(target, "t")
            .with_horizon(3)
            .with_reward_mode(RewardMode::TerminalOnly);
        let mut e = ArticulatoryEnv::new(cfg).unwrap();
        e.reset();
        let a = e.step(&[0.2; FRAME_DIM], &mut LoudnessBackend).unwrap();
        assert_eq!((a.reward, a.signal), (0.0, None));
        e.step(&[0.2; FRAME_DIM], &mut LoudnessBackend).unwrap();
        let c = e.step(&[0.2; FRAME_DIM], &mut LoudnessBackend).unwrap();
        assert_eq!(c.reward, 1.0);
        assert!(c.done);
    }

    #[test]
    fn backend_failure_carries_step_index() {
        struct Failing;
        impl AcousticBackend for Failing {
            fn descriptor(&self) -> BackendDescriptor {
                BackendDescriptor::reference("failing", 1)
            }
            fn score(&mut self, _: &Trajectory, _: &SyllableEmbedding, _: f64) -> Result<RewardSignal> {
                Err(Error::Backend("boom".into()))
            }
        }
        let mut e = env(5);
        e.reset();
        let err = e.step(&[0.0; FRAME_DIM], &mut Failing).unwrap_err();
        assert!(matches!(err, Error::BackendAtStep { step: 1, .. }));
    }
}
