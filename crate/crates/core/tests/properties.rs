use artic::acoustic::{synthesize, wav, AcousticBackend, ReferenceBackend, ReferenceConfig, SyllableEmbedding, Waveform};
use artic::checkpoint::Checkpoint;
use artic::env::{Action, ArticulatorFrame, Trajectory, FRAME_DIM, POSITION_BOUND};
use artic::policy::{ArchConfig, PolicyParams};
use artic::ppo::{compute_gae, std_schedule, TrainConfig};
use proptest::prelude::*;

fn frame() -> impl Strategy<Value = ArticulatorFrame> {
    proptest::array::uniform13(-3.0f64..=3.0).prop_map(ArticulatorFrame::from_array)
}

fn trajectory(max: usize) -> impl Strategy<Value = Trajectory> {
    proptest::collection::vec(frame(), 1..=max).prop_map(|f| Trajectory::from_frames(f, "p"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_stays_in_box(f in frame(), raw in proptest::array::uniform13(-10.0f64..10.0)) {
        let a = Action::clamp(&raw).unwrap();
        prop_assert!(a.as_array().iter().all(|v| v.abs() <= 0.5));
        let next = f.integrate(&a);
        prop_assert!(next.is_within_bounds());
        for j in 0..FRAME_DIM {
            let want = (f[j] + raw[j].clamp(-0.5, 0.5)).clamp(-POSITION_BOUND, POSITION_BOUND);
            prop_assert_eq!(next[j], want);
        }
    }

    #[test]
    fn rendering_a_prefix_gives_a_prefix(t in trajectory(20), cut in 1usize..20) {
        let k = cut.min(t.len());
        let full = synthesize(&t, 0.02, 16_000).unwrap();
        let part = synthesize(&t.prefix(k), 0.02, 16_000).unwrap();
        prop_assert_eq!(&full.samples[..part.len()], &part.samples[..]);
        prop_assert!(full.samples.iter().all(|s| s.abs() <= 1.0));
    }

    #[test]
    fn reward_in_range(t in trajectory(30), target in proptest::collection::vec(-1.0f64..1.0, 40)) {
        prop_assume!(target.iter().any(|v| v.abs() > 1e-3));
        let mut b = ReferenceBackend::new(ReferenceConfig::default()).unwrap();
        let e = SyllableEmbedding::new(target).unwrap();
        let s = b.score(&t, &e, 0.02).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s.value));
        prop_assert!(s.detected || s.value == -1.0);
    }

    #[test]
    fn wav_round_trip_within_half_lsb(samples in proptest::collection::vec(-1.0f64..=1.0, 1..500)) {
        let w = Waveform::new(samples, 16_000);
        let back = wav::decode(&wav::encode_pcm16_mono(&w)).unwrap();
        prop_assert_eq!(back.sample_rate, 16_000);
        for (a, b) in w.samples.iter().zip(&back.samples) {
            let tol = if *a > 32767.0 / 32768.0 { 1.0 / 32768.0 } else { 0.5 / 32768.0 };
            prop_assert!((a - b).abs() <= tol + 1e-15, "{a} -> {b}");
        }
    }

    #[test]
    fn gae_with_lambda_zero_is_td_error(
        rv in proptest::collection::vec((-1.0f64..1.0, -3.0f64..3.0), 1..12),
        boot in -3.0f64..3.0,
        gamma in 0.5f64..=1.0,
    ) {
        let (r, v): (Vec<f64>, Vec<f64>) = rv.into_iter().unzip();
        let (adv, ret) = compute_gae(&r, &v, boot, gamma, 0.0).unwrap();
        for t in 0..r.len() {
            let next = if t + 1 < r.len() { v[t + 1] } else { boot };
            prop_assert_eq!(adv[t], r[t] + gamma * next - v[t]);
            prop_assert_eq!(ret[t], adv[t] + v[t]);
        }
    }

    #[test]
    fn std_schedule_monotone_and_floored(e in 0u64..100_000) {
        let cfg = TrainConfig::default();
        let s = std_schedule(e, &cfg);
        prop_assert!(s >= 0.05 && s <= 0.7);
        prop_assert!(std_schedule(e + 1, &cfg) <= s);
    }

    #[test]
    fn checkpoint_bytes_round_trip(seed in any::<u64>(), episode in any::<u64>()) {
        let arch = ArchConfig { hidden: vec![4], ..ArchConfig::default() };
        let mut ck = sample_checkpoint(seed, &arch);
        ck.episode = episode;
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
    }
}

fn sample_checkpoint(seed: u64, arch: &ArchConfig) -> Checkpoint {
    use artic::env::EpisodeConfig;
    use artic::ppo::Trainer;
    let target = SyllableEmbedding::new(vec![0.25; 40]).unwrap();
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let t = Trainer::new(cfg, EpisodeConfig::new(target, "ck"), arch).unwrap();
    let _ = PolicyParams::zeros(arch).unwrap();
    t.checkpoint()
}
