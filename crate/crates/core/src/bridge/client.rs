use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::protocol::*;
use crate::acoustic::{AcousticBackend, BackendDescriptor, BackendKind, SyllableEmbedding, Waveform};
use crate::env::{RewardSignal, Trajectory};
use crate::error::{Error, Result};

/// Where the bridge server lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// Spawn `argv[0]` with the remaining arguments and talk over its stdio.
    Command(Vec<String>),
    /// `host:port` of a listening server.
    Tcp(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeOptions {
    pub timeout: Duration,
    /// Rate sent with score and synthesize requests.
    pub sample_rate: u32,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self { timeout: Duration::from_secs(30), sample_rate: crate::acoustic::DEFAULT_SAMPLE_RATE }
    }
}

/// One protocol session. Requests are strictly sequential.
pub struct BridgeClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    opts: BridgeOptions,
    info: HandshakeResponse,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient").field("next_id", &self.next_id).field("info", &self.info).finish()
    }
}

impl BridgeClient {
    pub fn connect(endpoint: &Endpoint, opts: BridgeOptions) -> Result<Self> {
        match endpoint {
            Endpoint::Command(argv) => {
                let (prog, args) =
                    argv.split_first().ok_or_else(|| Error::Config("bridge command is empty".into()))?;
                let mut child = Command::new(prog)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::Connection(format!("cannot spawn {prog}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                let mut c = Self::start(BufReader::new(stdout), stdin, opts);
                c.child = Some(child);
                c.handshake()?;
                Ok(c)
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| Error::Connection(format!("cannot connect to {addr}: {e}")))?;
                stream.set_nodelay(true)?;
                let read = stream.try_clone()?;
                let socket = stream.try_clone()?;
                let mut c = Self::start(BufReader::new(read), stream, opts);
                c.socket = Some(socket);
                c.handshake()?;
                Ok(c)
            }
        }
    }

    /// Handshake over an already-open pair of streams.
    pub fn from_streams<R, W>(reader: R, writer: W, opts: BridgeOptions) -> Result<Self>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut c = Self::start(reader, writer, opts);
        c.handshake()?;
        Ok(c)
    }

    fn start<R, W>(mut reader: R, writer: W, opts: BridgeOptions) -> Self
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::sync_channel(4);
        thread::spawn(move || loop {
            let mut line = String::new();
            let msg = match reader.read_line(&mut line) {
                Ok(0) => Err(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "server closed the stream")),
                Ok(_) => Ok(line),
                Err(e) => Err(e),
            };
            let stop = msg.is_err();
            if tx.send(msg).is_err() || stop {
                break;
            }
        });
        Self {
            writer: Box::new(writer),
            lines: rx,
            next_id: 1,
            opts,
            info: HandshakeResponse { embedding_dim: 0, backend_name: String::new(), protocol_version: 0 },
            child: None,
            socket: None,
        }
    }

    fn handshake(&mut self) -> Result<()> {
        let v = self.call(
            Op::Handshake,
            HandshakeRequest { protocol_version: PROTOCOL_VERSION, client: "artic".into() },
        )?;
        let info: HandshakeResponse = payload(&v).map_err(|e| Error::Protocol(format!("handshake: {e}")))?;
        if info.protocol_version != PROTOCOL_VERSION {
            return Err(Error::IncompatibleProtocol { got: info.protocol_version, expected: PROTOCOL_VERSION });
        }
        if info.embedding_dim == 0 {
            return Err(Error::Protocol("server reported embedding_dim 0".into()));
        }
        self.info = info;
        Ok(())
    }

    pub fn info(&self) -> &HandshakeResponse {
        &self.info
    }

    /// Id the next request will carry.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Send one request and wait for its response payload.
    pub fn call(&mut self, op: Op, body: impl Serialize) -> Result<Value> {
        let id = self.next_id;
        self.next_id += 1;
        let req = Request { id, op, payload: serde_json::to_value(body).expect("payload types serialize") };
        self.writer
            .write_all(encode_line(&req).as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::Connection(format!("send failed: {e}")))?;
        let line = match self.lines.recv_timeout(self.opts.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::Connection(format!("receive failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Connection(format!("no response to request {id} within {:?}", self.opts.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => return Err(Error::Connection("server stream closed".into())),
        };
        let resp: Response = decode_line(&line)?;
        if resp.id != Some(id) {
            return Err(Error::Protocol(format!(
                "out-of-order response: expected id {id}, got {}",
                resp.id.map_or("null".to_string(), |i| i.to_string())
            )));
        }
        if !resp.ok {
            let e = resp.error.unwrap_or(ErrorBody { code: "UNKNOWN".into(), message: String::new() });
            return Err(match e.code.as_str() {
                codes::INVALID_TARGET => Error::InvalidTarget(e.message),
                _ => Error::Backend(format!("{}: {}", e.code, e.message)),
            });
        }
        resp.payload.ok_or_else(|| Error::Protocol(format!("response {id} has ok=true but no payload")))
    }

    fn typed<T: for<'de> Deserialize<'de>>(&mut self, op: Op, body: impl Serialize) -> Result<T> {
        let v = self.call(op, body)?;
        payload(&v).map_err(|e| Error::Protocol(format!("{op:?} payload: {e}")))
    }

    /// Remote score plus detected segment times.
    pub fn score_remote(
        &mut self,
        trajectory: &Trajectory,
        target: &SyllableEmbedding,
        step_duration: f64,
    ) -> Result<(RewardSignal, Vec<Segment>)> {
        if target.dim() != self.info.embedding_dim {
            return Err(Error::DimMismatch { expected: self.info.embedding_dim, got: target.dim() });
        }
        let r: ScoreResponse = self.typed(
            Op::Score,
            ScoreRequest {
                trajectory: trajectory_rows(trajectory),
                step_duration,
                sample_rate: self.opts.sample_rate,
                target: target.values().to_vec(),
            },
        )?;
        let signal = if r.detected {
            match r.similarity {
                Some(s) if (-1.0..=1.0).contains(&s) => RewardSignal::detected(s),
                other => return Err(Error::Protocol(format!("detected with similarity {other:?}"))),
            }
        } else {
            RewardSignal::undetected()
        };
        Ok((signal, r.segments))
    }

    pub fn make_target(&mut self, source: TargetSourceMsg) -> Result<SyllableEmbedding> {
        let r: MakeTargetResponse = self.typed(Op::MakeTarget, MakeTargetRequest { source })?;
        if r.embedding.len() != self.info.embedding_dim {
            return Err(Error::DimMismatch { expected: self.info.embedding_dim, got: r.embedding.len() });
        }
        SyllableEmbedding::new(r.embedding)
    }

    pub fn synthesize(&mut self, trajectory: &Trajectory, step_duration: f64) -> Result<Waveform> {
        let r: SynthesizeResponse = self.typed(
            Op::Synthesize,
            SynthesizeRequest {
                trajectory: trajectory_rows(trajectory),
                step_duration,
                sample_rate: self.opts.sample_rate,
            },
        )?;
        Ok(Waveform::new(r.samples, r.sample_rate))
    }

    pub fn sample_rate(&self) -> u32 {
        self.opts.sample_rate
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(s) = self.socket.take() {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            // Closing stdin lets a well-behaved server exit on EOF.
            self.writer = Box::new(std::io::sink());
            let deadline = std::time::Instant::now() + Duration::from_secs(2);
            while std::time::Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl AcousticBackend for BridgeClient {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            name: self.info.backend_name.clone(),
            embedding_dim: self.info.embedding_dim,
            kind: BackendKind::Bridge,
        }
    }

    fn score(&mut self, trajectory: &Trajectory, target: &SyllableEmbedding, step_duration: f64) -> Result<RewardSignal> {
        if trajectory.is_empty() {
            return Err(Error::EmptyInput("trajectory"));
        }
        self.score_remote(trajectory, target, step_duration).map(|(s, _)| s)
    }
}
