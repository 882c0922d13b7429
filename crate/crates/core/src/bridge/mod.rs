//! Line-delimited JSON bridge to an external decode-and-perceive process.
//!
//! [`BridgeClient`] speaks protocol v1 over a spawned child's stdio or a
//! local TCP socket and implements [`AcousticBackend`](crate::acoustic::AcousticBackend).
//! [`LoopbackServer`] serves the same protocol around the reference
//! backend; it is what `artic serve-reference` runs.

mod client;
pub mod protocol;
mod server;

pub use client::{BridgeClient, BridgeOptions, Endpoint};
pub use protocol::PROTOCOL_VERSION;
pub use server::{LoopbackServer, ServerOptions};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic::{AcousticBackend, ReferenceBackend, ReferenceConfig, SyllableEmbedding};
    use crate::env::{ArticulatorFrame, Trajectory};
    use crate::error::Error;
    use crate::fixtures;
    use std::io::{BufRead, BufReader, Write};
    use std::thread;
    use std::time::Duration;

    fn loopback(opts: ServerOptions) -> crate::Result<BridgeClient> {
        let (req_r, req_w) = std::io::pipe().unwrap();
        let (resp_r, resp_w) = std::io::pipe().unwrap();
        thread::spawn(move || {
            let mut s = LoopbackServer::new(opts).unwrap();
            let _ = s.serve(BufReader::new(req_r), resp_w);
        });
        BridgeClient::from_streams(BufReader::new(resp_r), req_w, BridgeOptions::default())
    }

    /// Server that answers with a scripted line per request.
    fn scripted(answer: impl Fn(u64) -> String + Send + 'static) -> crate::Result<BridgeClient> {
        let (req_r, req_w) = std::io::pipe().unwrap();
        let (resp_r, mut resp_w) = std::io::pipe().unwrap();
        thread::spawn(move || {
            let mut n = 0;
            for line in BufReader::new(req_r).lines() {
                if line.is_err() {
                    break;
                }
                n += 1;
                if resp_w.write_all(answer(n).as_bytes()).is_err() {
                    break;
                }
            }
        });
        let opts = BridgeOptions { timeout: Duration::from_millis(500), ..BridgeOptions::default() };
        BridgeClient::from_streams(BufReader::new(resp_r), req_w, opts)
    }

    const HANDSHAKE_OK: &str =
        "{\"id\":1,\"ok\":true,\"payload\":{\"embedding_dim\":40,\"backend_name\":\"s\",\"protocol_version\":1}}\n";

    #[test]
    fn handshake_reports_dim_and_version() {
        let c = loopback(ServerOptions::default()).unwrap();
        assert_eq!(c.info().embedding_dim, 40);
        assert_eq!(c.info().protocol_version, 1);
        assert_eq!(c.next_id(), 2);
    }

    #[test]
    fn version_two_rejected() {
        let err = loopback(ServerOptions { protocol_version: 2, ..ServerOptions::default() }).unwrap_err();
        assert!(matches!(err, Error::IncompatibleProtocol { got: 2, expected: 1 }), "{err}");
    }

    #[test]
    fn silence_scores_minus_one() {
        let mut c = loopback(ServerOptions::default()).unwrap();
        let t = Trajectory::from_frames(vec![ArticulatorFrame::zero(); 20], "s");
        let target = SyllableEmbedding::new(vec![1.0; 40]).unwrap();
        let (sig, segs) = c.score_remote(&t, &target, 0.02).unwrap();
        assert_eq!(sig.value, -1.0);
        assert!(!sig.detected && segs.is_empty());
    }

    #[test]
    fn fixture_target_matches_local() {
        let mut c = loopback(ServerOptions::default()).unwrap();
        let remote = c.make_target(protocol::TargetSourceMsg::Syllable("iy".into())).unwrap();
        let local = crate::acoustic::make_target(
            &crate::acoustic::TargetSource::Trajectory {
                trajectory: fixtures::expert_trajectory("iy").unwrap(),
                step_duration: 0.02,
            },
            &ReferenceBackend::new(ReferenceConfig::default()).unwrap(),
        )
        .unwrap();
        assert_eq!(remote, local);
        let t = fixtures::expert_trajectory("iy").unwrap();
        let w = c.synthesize(&t, 0.02).unwrap();
        assert_eq!(w, ReferenceBackend::new(ReferenceConfig::default()).unwrap().synthesize(&t, 0.02).unwrap());
        let s = c.score(&t, &remote, 0.02).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_order_id_is_protocol_error() {
        let mut c = scripted(|n| {
            if n == 1 {
                HANDSHAKE_OK.to_string()
            } else {
                format!("{{\"id\":{},\"ok\":true,\"payload\":{{}}}}\n", n + 5)
            }
        })
        .unwrap();
        let t = Trajectory::from_frames(vec![ArticulatorFrame::zero()], "s");
        let err = c.score(&t, &SyllableEmbedding::new(vec![1.0; 40]).unwrap(), 0.02).unwrap_err();
        assert!(matches!(err, Error::Protocol(ref m) if m.contains("out-of-order")), "{err}");
    }

    #[test]
    fn malformed_line_is_protocol_error_with_offset() {
        let mut c = scripted(|n| if n == 1 { HANDSHAKE_OK.to_string() } else { "{\"id\":2,\"ok\":tru}\n".into() })
            .unwrap();
        let t = Trajectory::from_frames(vec![ArticulatorFrame::zero()], "s");
        let err = c.score(&t, &SyllableEmbedding::new(vec![1.0; 40]).unwrap(), 0.02).unwrap_err();
        assert!(matches!(err, Error::Protocol(ref m) if m.contains("at byte 16")), "{err}");
    }

    #[test]
    fn silent_server_times_out() {
        let err = scripted(|_| String::new()).unwrap_err();
        assert!(matches!(err, Error::Connection(ref m) if m.contains("within")), "{err}");
    }
}
