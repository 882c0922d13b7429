//! Message types for protocol v1: one JSON object per line, UTF-8, `\n`
//! terminated. Envelope keys are written in declaration order, payload keys
//! sorted.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::env::{ArticulatorFrame, Trajectory, FRAME_DIM};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Handshake,
    MakeTarget,
    Score,
    Synthesize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub op: Op,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    /// `null` only when the request line could not be parsed far enough to
    /// recover its id.
    pub id: Option<u64>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    pub fn success(id: u64, payload: impl Serialize) -> Self {
        let payload = serde_json::to_value(payload).expect("payload types serialize");
        Self { id: Some(id), ok: true, payload: Some(payload), error: None }
    }

    pub fn failure(id: Option<u64>, code: &str, message: impl Into<String>) -> Self {
        Self {
            id,
            ok: false,
            payload: None,
            error: Some(ErrorBody { code: code.into(), message: message.into() }),
        }
    }
}

/// Error codes carried in [`ErrorBody::code`].
pub mod codes {
    pub const MALFORMED: &str = "MALFORMED";
    pub const BAD_REQUEST: &str = "BAD_REQUEST";
    pub const INVALID_TARGET: &str = "INVALID_TARGET";
    pub const BACKEND_ERROR: &str = "BACKEND_ERROR";
    pub const MODEL_MISSING: &str = "MODEL_MISSING";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandshakeRequest {
    pub protocol_version: u32,
    pub client: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandshakeResponse {
    pub embedding_dim: usize,
    pub backend_name: String,
    pub protocol_version: u32,
}

/// Row-major trajectory: one 13-float row per frame.
pub type Rows = Vec<[f64; FRAME_DIM]>;

pub fn trajectory_rows(t: &Trajectory) -> Rows {
    t.frames.iter().map(|f| *f.as_array()).collect()
}

pub fn rows_to_trajectory(rows: &Rows, id: &str) -> Trajectory {
    Trajectory::from_frames(rows.iter().map(|r| ArticulatorFrame::from_array(*r)).collect(), id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub trajectory: Rows,
    pub step_duration: f64,
    pub sample_rate: u32,
    /// Target embedding values.
    pub target: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub detected: bool,
    /// Present when `detected`.
    #[serde(default)]
    pub similarity: Option<f64>,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

/// Exactly one source per request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSourceMsg {
    Trajectory { trajectory: Rows, step_duration: f64, sample_rate: u32 },
    WavPath(String),
    Syllable(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakeTargetRequest {
    pub source: TargetSourceMsg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakeTargetResponse {
    pub embedding: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeRequest {
    pub trajectory: Rows,
    pub step_duration: f64,
    pub sample_rate: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeResponse {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

/// Serialize as one line, newline included.
pub fn encode_line<T: Serialize>(msg: &T) -> String {
    let mut s = serde_json::to_string(msg).expect("protocol types serialize");
    s.push('\n');
    s
}

/// Byte offset of a parse error within `line`.
pub fn error_offset(line: &str, err: &serde_json::Error) -> usize {
    // serde_json reports 1-based line and column, columns counted in bytes.
    let mut offset = 0;
    for (i, l) in line.split('\n').enumerate() {
        if i + 1 == err.line() {
            return offset + err.column().saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    line.len()
}

/// Parse one line, mapping failures to a protocol error with the byte offset.
pub fn decode_line<T: DeserializeOwned>(line: &str) -> Result<T> {
    let trimmed = line.strip_suffix('\n').unwrap_or(line);
    let trimmed = trimmed.strip_suffix('\r').unwrap_or(trimmed);
    serde_json::from_str(trimmed).map_err(|e| {
        Error::Protocol(format!("malformed message at byte {}: {e}", error_offset(trimmed, &e)))
    })
}

/// Decode an op payload.
pub fn payload<T: DeserializeOwned>(v: &Value) -> std::result::Result<T, String> {
    T::deserialize(v).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_form() {
        let r = Request {
            id: 3,
            op: Op::Handshake,
            payload: serde_json::to_value(HandshakeRequest { protocol_version: 1, client: "artic".into() })
                .unwrap(),
        };
        assert_eq!(
            encode_line(&r),
            "{\"id\":3,\"op\":\"handshake\",\"payload\":{\"client\":\"artic\",\"protocol_version\":1}}\n"
        );
        assert_eq!(decode_line::<Request>(&encode_line(&r)).unwrap(), r);
    }

    #[test]
    fn response_wire_forms() {
        let ok = Response::success(4, ScoreResponse { detected: false, similarity: None, segments: vec![] });
        assert_eq!(
            encode_line(&ok),
            "{\"id\":4,\"ok\":true,\"payload\":{\"detected\":false,\"segments\":[],\"similarity\":null}}\n"
        );
        let err = Response::failure(Some(5), codes::BAD_REQUEST, "no");
        assert_eq!(
            encode_line(&err),
            "{\"id\":5,\"ok\":false,\"error\":{\"code\":\"BAD_REQUEST\",\"message\":\"no\"}}\n"
        );
    }

    #[test]
    fn malformed_reports_byte_offset() {
        let line = "{\"id\":1,\"ok\":tru}";
        let e = decode_line::<Response>(line).unwrap_err().to_string();
        assert!(e.contains("at byte 16"), "{e}");
    }

    #[test]
    fn target_source_forms() {
        let m = MakeTargetRequest { source: TargetSourceMsg::Syllable("please".into()) };
        assert_eq!(serde_json::to_string(&m).unwrap(), "{\"source\":{\"syllable\":\"please\"}}");
    }

    #[test]
    fn floats_round_trip_exactly() {
        let xs = [0.1, 1.0 / 3.0, -2.718281828459045e-300, 5e-324, 1.7976931348623157e308];
        let s = serde_json::to_string(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), xs.map(f64::to_bits).to_vec());
    }
}
