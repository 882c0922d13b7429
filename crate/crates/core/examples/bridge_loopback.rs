//! Talk to the reference backend through the bridge protocol, in process,
//! and compare against calling it directly.
//!
//! ```text
//! cargo run --release --example bridge_loopback
//! ```

use std::io::BufReader;

use artic::acoustic::{make_target, AcousticBackend, ReferenceBackend, ReferenceConfig, TargetSource};
use artic::bridge::protocol::TargetSourceMsg;
use artic::bridge::{BridgeClient, BridgeOptions, LoopbackServer, ServerOptions};
use artic::fixtures;

fn main() -> artic::Result<()> {
    let (req_r, req_w) = std::io::pipe()?;
    let (resp_r, resp_w) = std::io::pipe()?;
    std::thread::spawn(move || {
        let mut server = LoopbackServer::new(ServerOptions::default()).expect("server");
        let _ = server.serve(BufReader::new(req_r), resp_w);
    });
    let mut client = BridgeClient::from_streams(BufReader::new(resp_r), req_w, BridgeOptions::default())?;
    println!("connected: {:?}", client.info());

    let mut local = ReferenceBackend::new(ReferenceConfig::default())?;
    let dt = fixtures::STEP_DURATION;
    let target = client.make_target(TargetSourceMsg::Syllable("aa".into()))?;
    let local_target =
        make_target(&TargetSource::Trajectory { trajectory: fixtures::expert_trajectory("aa")?, step_duration: dt }, &local)?;
    println!("target max abs diff {:.3e}", max_diff(target.values(), local_target.values()));

    for name in fixtures::NAMES {
        let traj = fixtures::expert_trajectory(name)?;
        let (remote, segments) = client.score_remote(&traj, &target, dt)?;
        let direct = local.score(&traj, &target, dt)?;
        println!(
            "{name}: bridge {:.12} direct {:.12} segments {:?}",
            remote.value,
            direct.value,
            segments.iter().map(|s| (s.start_s, s.end_s)).collect::<Vec<_>>()
        );
    }
    Ok(())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
