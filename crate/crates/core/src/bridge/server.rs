//! Loopback server: protocol v1 in front of the reference backend.

use std::io::{BufRead, Write};

use serde_json::Value;

use super::protocol::*;
use crate::acoustic::{
    make_target, AcousticBackend, ReferenceBackend, ReferenceConfig, SyllableEmbedding, TargetSource,
};
use crate::error::Result;
use crate::fixtures;

#[derive(Clone, Debug)]
pub struct ServerOptions {
    pub reference: ReferenceConfig,
    /// Version announced in the handshake.
    pub protocol_version: u32,
    pub backend_name: String,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            reference: ReferenceConfig::default(),
            protocol_version: PROTOCOL_VERSION,
            backend_name: "reference".into(),
        }
    }
}

pub struct LoopbackServer {
    opts: ServerOptions,
    backend: ReferenceBackend,
}

type Reply = std::result::Result<Value, (&'static str, String)>;

fn bad<E: std::fmt::Display>(e: E) -> (&'static str, String) {
    (codes::BAD_REQUEST, e.to_string())
}

fn non_empty(rows: &Rows) -> std::result::Result<(), (&'static str, String)> {
    if rows.is_empty() {
        return Err(bad("trajectory has no frames"));
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("payload types serialize")
}

impl LoopbackServer {
    pub fn new(opts: ServerOptions) -> Result<Self> {
        let backend = ReferenceBackend::new(opts.reference)?;
        Ok(Self { opts, backend })
    }

    fn check_rate(&self, rate: u32) -> std::result::Result<(), (&'static str, String)> {
        let own = self.opts.reference.sample_rate;
        if rate != own {
            return Err(bad(format!("sample_rate {rate} not supported; server renders at {own}")));
        }
        Ok(())
    }

    fn dispatch(&mut self, op: Op, p: &Value) -> Reply {
        match op {
            Op::Handshake => {
                let req: HandshakeRequest = payload(p).map_err(bad)?;
                log::debug!("handshake from {} (v{})", req.client, req.protocol_version);
                Ok(to_value(HandshakeResponse {
                    embedding_dim: self.backend.descriptor().embedding_dim,
                    backend_name: self.opts.backend_name.clone(),
                    protocol_version: self.opts.protocol_version,
                }))
            }
            Op::Score => {
                let req: ScoreRequest = payload(p).map_err(bad)?;
                self.check_rate(req.sample_rate)?;
                non_empty(&req.trajectory)?;
                let target = SyllableEmbedding::new(req.target).map_err(bad)?;
                let traj = rows_to_trajectory(&req.trajectory, "remote");
                let (signal, ranges) = self
                    .backend
                    .score_with_segments(&traj, &target, req.step_duration)
                    .map_err(|e| (codes::BACKEND_ERROR, e.to_string()))?;
                let sr = req.sample_rate as f64;
                Ok(to_value(ScoreResponse {
                    detected: signal.detected,
                    similarity: signal.detected.then_some(signal.similarity),
                    segments: ranges
                        .into_iter()
                        .map(|r| Segment { start_s: r.start as f64 / sr, end_s: r.end as f64 / sr })
                        .collect(),
                }))
            }
            Op::MakeTarget => {
                let req: MakeTargetRequest = payload(p).map_err(bad)?;
                let source = match req.source {
                    TargetSourceMsg::Trajectory { trajectory, step_duration, sample_rate } => {
                        self.check_rate(sample_rate)?;
                        TargetSource::Trajectory {
                            trajectory: rows_to_trajectory(&trajectory, "target"),
                            step_duration,
                        }
                    }
                    TargetSourceMsg::WavPath(path) => TargetSource::WavFile(path.into()),
                    TargetSourceMsg::Syllable(name) => {
                        let trajectory = fixtures::expert_trajectory(&name)
                            .map_err(|e| (codes::INVALID_TARGET, e.to_string()))?;
                        TargetSource::Trajectory { trajectory, step_duration: fixtures::STEP_DURATION }
                    }
                };
                let e = make_target(&source, &self.backend).map_err(|e| (codes::INVALID_TARGET, e.to_string()))?;
                Ok(to_value(MakeTargetResponse { embedding: e.values().to_vec() }))
            }
            Op::Synthesize => {
                let req: SynthesizeRequest = payload(p).map_err(bad)?;
                self.check_rate(req.sample_rate)?;
                non_empty(&req.trajectory)?;
                let w = self
                    .backend
                    .synthesize(&rows_to_trajectory(&req.trajectory, "synth"), req.step_duration)
                    .map_err(|e| (codes::BACKEND_ERROR, e.to_string()))?;
                Ok(to_value(SynthesizeResponse { sample_rate: w.sample_rate, samples: w.samples }))
            }
        }
    }

    /// Answer one request line.
    pub fn handle_line(&mut self, line: &str) -> Response {
        let req: Request = match decode_line(line) {
            Ok(r) => r,
            Err(e) => {
                // Recover the id if the line is valid JSON with a numeric id.
                let id = serde_json::from_str::<Value>(line.trim_end()).ok().and_then(|v| v.get("id")?.as_u64());
                let message = match e {
                    crate::error::Error::Protocol(m) => m,
                    other => other.to_string(),
                };
                return Response::failure(id, codes::MALFORMED, message);
            }
        };
        match self.dispatch(req.op, &req.payload) {
            Ok(v) => Response::success(req.id, v),
            Err((code, msg)) => Response::failure(Some(req.id), code, msg),
        }
    }

    /// Serve until end of input. Blank lines are ignored.
    pub fn serve<R: BufRead, W: Write>(&mut self, input: R, mut output: W) -> Result<()> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let resp = self.handle_line(&line);
            output.write_all(encode_line(&resp).as_bytes())?;
            output.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn server() -> LoopbackServer {
        LoopbackServer::new(ServerOptions::default()).unwrap()
    }

    #[test]
    fn handshake_line() {
        let r = server().handle_line(r#"{"id":1,"op":"handshake","payload":{"protocol_version":1,"client":"t"}}"#);
        assert_eq!(
            encode_line(&r),
            "{\"id\":1,\"ok\":true,\"payload\":{\"backend_name\":\"reference\",\"embedding_dim\":40,\"protocol_version\":1}}\n"
        );
    }

    #[test]
    fn malformed_and_unknown() {
        let mut s = server();
        let r = s.handle_line("{\"id\":2,\"op\":");
        assert_eq!((r.id, r.ok), (None, false));
        assert_eq!(r.error.as_ref().unwrap().code, codes::MALFORMED);
        assert!(r.error.unwrap().message.contains("at byte"));

        let r = s.handle_line(r#"{"id":3,"op":"dance","payload":{}}"#);
        assert_eq!((r.id, r.ok), (Some(3), false));
        assert_eq!(r.error.unwrap().code, codes::MALFORMED);

        let r = s.handle_line(r#"{"id":4,"op":"score","payload":{"trajectory":[]}}"#);
        assert_eq!((r.id, r.ok), (Some(4), false));
        assert_eq!(r.error.unwrap().code, codes::BAD_REQUEST);
    }

    #[test]
    fn serve_answers_each_line_once() {
        let input = "{\"id\":1,\"op\":\"handshake\",\"payload\":{\"protocol_version\":1,\"client\":\"t\"}}\n\n\
                     {\"id\":2,\"op\":\"make_target\",\"payload\":{\"source\":{\"syllable\":\"nope\"}}}\n";
        let mut out = Vec::new();
        server().serve(input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("{\"id\":2,\"ok\":false,\"error\":{\"code\":\"INVALID_TARGET\""));
    }
}
