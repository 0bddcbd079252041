//! Out-of-process predictors speaking newline-delimited JSON over stdio.
//!
//! ```text
//! child  -> {"proto": 1, "name": "<string>"}                      (once, first line)
//! parent -> {"id": 0, "w": 10, "f": 69, "windows": [[[..]..]..]}  (batch × w × f)
//! child  -> {"id": 0, "outputs": [..]}                            (one per window)
//! ```
//!
//! The parent closes the child's stdin to shut it down.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::window::{WindowBatch, WindowShape};
use crate::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Handshake {
    proto: u32,
    name: String,
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    w: usize,
    f: usize,
    windows: NestedWindows<'a>,
}

struct NestedWindows<'a>(&'a WindowBatch);

impl Serialize for NestedWindows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let features = self.0.shape().features;
        let mut outer = s.serialize_seq(Some(self.0.len()))?;
        for w in self.0.windows() {
            let rows: Vec<&[f64]> = w.chunks_exact(features).collect();
            outer.serialize_element(&rows)?;
        }
        outer.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OwnedRequest {
    id: u64,
    w: usize,
    f: usize,
    windows: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Response {
    id: u64,
    outputs: Vec<f64>,
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

impl Session {
    fn read_line(&self, timeout: Duration) -> Result<String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::ProtocolViolation(format!("reading predictor output: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(timeout.as_millis() as u64)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::ProtocolViolation("predictor closed its output".into()))
            }
        }
    }

    fn shutdown(&mut self) {
        self.stdin.take();
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A predictor running in a child process. Calls are serialised.
pub struct ExternalPredictor {
    name: String,
    timeout: Duration,
    session: Mutex<Session>,
}

/// Launches `command` and waits for its handshake line.
pub fn spawn_external_predictor(command: &[String], timeout_ms: u64) -> Result<ExternalPredictor> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::SpawnFailure("empty command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| Error::SpawnFailure(format!("{program}: {e}")))?;
    let stdin = child.stdin.take();
    let stdout = child.stdout.take().expect("piped stdout");

    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });

    let mut session = Session {
        child,
        stdin,
        lines: rx,
        next_id: 0,
    };
    let timeout = Duration::from_millis(timeout_ms);
    let hello = session.read_line(timeout).and_then(|line| {
        let hello: Handshake = serde_json::from_str(&line)
            .map_err(|e| Error::ProtocolViolation(format!("bad handshake: {e}")))?;
        if hello.proto != PROTOCOL_VERSION {
            return Err(Error::ProtocolViolation(format!(
                "unsupported protocol version {}",
                hello.proto
            )));
        }
        Ok(hello)
    });
    match hello {
        Ok(hello) => Ok(ExternalPredictor {
            name: hello.name,
            timeout,
            session: Mutex::new(session),
        }),
        Err(e) => {
            session.shutdown();
            Err(e)
        }
    }
}

impl ExternalPredictor {
    fn round_trip(&self, windows: &WindowBatch) -> Result<Vec<f64>> {
        let mut session = self.session.lock().unwrap_or_else(|e| e.into_inner());
        let id = session.next_id;
        session.next_id += 1;
        let shape = windows.shape();
        let mut line = serde_json::to_vec(&Request {
            id,
            w: shape.instants,
            f: shape.features,
            windows: NestedWindows(windows),
        })?;
        line.push(b'\n');
        let stdin = session
            .stdin
            .as_mut()
            .ok_or_else(|| Error::ProtocolViolation("predictor input closed".into()))?;
        stdin
            .write_all(&line)
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::ProtocolViolation(format!("writing request: {e}")))?;

        let reply = session.read_line(self.timeout)?;
        let response: Response = serde_json::from_str(&reply)
            .map_err(|e| Error::ProtocolViolation(format!("bad response line: {e}")))?;
        if response.id != id {
            return Err(Error::ProtocolViolation(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        if response.outputs.len() != windows.len() {
            return Err(Error::ProtocolViolation(format!(
                "{} outputs for {} windows",
                response.outputs.len(),
                windows.len()
            )));
        }
        Ok(response.outputs)
    }
}

impl Predictor for ExternalPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict_batch(&self, windows: &WindowBatch) -> Result<Vec<f64>> {
        self.round_trip(windows)
    }

    fn is_serial(&self) -> bool {
        true
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        self.session
            .get_mut()
            .unwrap_or_else(|e| e.into_inner())
            .shutdown();
    }
}

/// Child side of the protocol: announces `name`, then answers every request
/// line on `input` with `predictor` until end of input.
pub fn serve<R: BufRead, W: Write>(
    predictor: &dyn Predictor,
    name: &str,
    input: R,
    mut output: W,
) -> Result<()> {
    let io_err = |e| Error::io("<stdout>", e);
    serde_json::to_writer(
        &mut output,
        &Handshake {
            proto: PROTOCOL_VERSION,
            name: name.to_owned(),
        },
    )?;
    output.write_all(b"\n").map_err(io_err)?;
    output.flush().map_err(io_err)?;

    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let req: OwnedRequest = serde_json::from_str(&line)
            .map_err(|e| Error::ProtocolViolation(format!("bad request line: {e}")))?;
        let shape = WindowShape::new(req.w, req.f);
        let mut data = Vec::with_capacity(req.windows.len() * shape.cells());
        for window in &req.windows {
            if window.len() != req.w || window.iter().any(|row| row.len() != req.f) {
                return Err(Error::ProtocolViolation(format!(
                    "request {} holds a window that is not {shape}",
                    req.id
                )));
            }
            window.iter().for_each(|row| data.extend_from_slice(row));
        }
        let outputs = if data.is_empty() {
            Vec::new()
        } else {
            predictor.predict_batch(&WindowBatch::new(shape, data)?)?
        };
        serde_json::to_writer(&mut output, &Response { id: req.id, outputs })?;
        output.write_all(b"\n").map_err(io_err)?;
        output.flush().map_err(io_err)?;
    }
    Ok(())
}
