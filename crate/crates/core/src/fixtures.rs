//! Scripted "expert" trajectories used as synthetic syllable targets.
//!
//! Each one moves from the zero posture toward a vowel posture, ramps the
//! loudness up, holds, and releases. Every per-step change is within the
//! action bound, so a policy starting from reset can reproduce them exactly.

use crate::env::{Action, Articulator, ArticulatorFrame, Trajectory, DEFAULT_HORIZON, FRAME_DIM};
use crate::error::{Error, Result};

pub const NAMES: [&str; 3] = ["aa", "iy", "uw"];

/// Seconds per frame the fixtures are designed for.
pub const STEP_DURATION: f64 = 0.02;

const MAX_SPEED: f64 = 0.4;
const PEAK_LOUDNESS: f64 = 1.8;
const RELEASE_STEP: usize = 40;

/// Vowel posture as a full frame (loudness channel ignored).
fn posture(name: &str) -> Option<ArticulatorFrame> {
    let mut f = ArticulatorFrame::zero();
    match name {
        // Open, central: high F1, mid F2.
        "aa" => {
            f.set_position(Articulator::TD, 0.8, -1.5);
            f.set_position(Articulator::TT, 0.0, -0.5);
            f.set_position(Articulator::LI, 0.0, -1.0);
        }
        // Close, front: low F1, high F2.
        "iy" => {
            f.set_position(Articulator::TD, -2.0, 1.5);
            f.set_position(Articulator::TT, 0.5, -1.5);
        }
        // Close, back, rounded: low F1, low F2, narrowed lips.
        "uw" => {
            f.set_position(Articulator::TD, 2.0, 1.2);
            f.set_position(Articulator::TT, 0.0, 1.0);
            f.set_position(Articulator::UL, 0.4, -0.3);
            f.set_position(Articulator::LL, 0.4, 0.2);
        }
        _ => return None,
    }
    Some(f)
}

/// 50-step expert trajectory for one of [`NAMES`].
pub fn expert_trajectory(name: &str) -> Result<Trajectory> {
    let goal = posture(name).ok_or_else(|| {
        Error::InvalidTarget(format!("unknown fixture '{name}', expected one of {NAMES:?}"))
    })?;
    let mut frame = ArticulatorFrame::zero();
    let mut frames = Vec::with_capacity(DEFAULT_HORIZON);
    for step in 0..DEFAULT_HORIZON {
        let mut v = [0.0; FRAME_DIM];
        for (i, vi) in v.iter_mut().enumerate().take(FRAME_DIM - 1) {
            *vi = (goal[i] - frame[i]).clamp(-MAX_SPEED, MAX_SPEED);
        }
        let l = frame.loudness();
        v[FRAME_DIM - 1] = if step < RELEASE_STEP {
            (PEAK_LOUDNESS - l).clamp(-MAX_SPEED, 0.3)
        } else {
            (-l).clamp(-MAX_SPEED, 0.0)
        };
        frame = frame.integrate(&Action::clamp(&v)?);
        frames.push(frame);
    }
    Ok(Trajectory::from_frames(frames, name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ACTION_BOUND;

    #[test]
    fn fixtures_are_reachable() {
        for name in NAMES {
            let t = expert_trajectory(name).unwrap();
            assert_eq!(t.len(), DEFAULT_HORIZON);
            let mut prev = ArticulatorFrame::zero();
            for f in &t.frames {
                assert!(f.is_within_bounds());
                for i in 0..FRAME_DIM {
                    assert!((f[i] - prev[i]).abs() <= ACTION_BOUND + 1e-12);
                }
                prev = *f;
            }
            assert_eq!(t.frames.last().unwrap().loudness(), 0.0);
        }
    }

    #[test]
    fn unknown_fixture() {
        assert!(expert_trajectory("zz").is_err());
    }
}
