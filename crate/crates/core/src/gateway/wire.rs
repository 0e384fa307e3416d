//! Line-delimited JSON protocol spoken with external model processes.
//!
//! ```text
//! -> {"id": "7", "op": "translate", "src": [..], "forced_tgt": [..], "beam": 10}
//! <- {"id": "7", "candidates": [[..], ..], "scores": [..]}
//! -> {"id": "8", "op": "score_boundary", "src": [..]}
//! <- {"id": "8", "p": 0.42}
//! <- {"id": "9", "error": "..."}
//! ```
//!
//! A client may pipeline requests; responses are matched by id.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::TokenSeq;
use crate::error::{Error, Result};
use crate::policy::BoundaryClassifier;

use super::{Candidate, CandidateSet, TranslateRequest, Translator, EOS_TOKEN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Translate {
        id: String,
        src: TokenSeq,
        forced_tgt: TokenSeq,
        beam: usize,
    },
    ScoreBoundary {
        id: String,
        src: TokenSeq,
    },
}

impl Request {
    pub fn id(&self) -> &str {
        match self {
            Request::Translate { id, .. } | Request::ScoreBoundary { id, .. } => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Error {
        id: String,
        error: String,
    },
    Translation {
        id: String,
        candidates: Vec<TokenSeq>,
        scores: Vec<f64>,
    },
    Boundary {
        id: String,
        p: f64,
    },
}

type Reply = std::result::Result<(String, Value), Error>;

#[derive(Default)]
struct Pending {
    waiting: HashMap<String, mpsc::Sender<Reply>>,
    /// Set once the connection is unusable; new requests fail immediately.
    dead: Option<Error>,
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Gateway { message, raw } => Error::Gateway {
            message: message.clone(),
            raw: raw.clone(),
        },
        other => Error::gateway(other.to_string()),
    }
}

/// Client for an external endpoint over a child process or TCP stream.
///
/// Safe to share between threads: requests are multiplexed over the one
/// connection and correlated by id.
pub struct ExternalClient {
    writer: Mutex<Box<dyn Write + Send>>,
    pending: Arc<Mutex<Pending>>,
    child: Arc<Mutex<Option<Child>>>,
    next_id: AtomicU64,
    timeout: Duration,
}

impl ExternalClient {
    /// Spawns `argv` and speaks the protocol over its stdin/stdout.
    pub fn spawn(argv: &[String], timeout_ms: u64) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::Config("empty exec command line".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::gateway(format!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(Self::start(
            Box::new(stdin),
            Box::new(BufReader::new(stdout)),
            Some(child),
            timeout_ms,
        ))
    }

    pub fn connect_tcp(addr: &str, timeout_ms: u64) -> Result<Self> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| Error::gateway(format!("cannot connect to {addr}: {e}")))?;
        let reader = stream
            .try_clone()
            .map_err(|e| Error::gateway(format!("cannot clone tcp stream: {e}")))?;
        Ok(Self::start(
            Box::new(stream),
            Box::new(BufReader::new(reader)),
            None,
            timeout_ms,
        ))
    }

    /// Wraps an already-open duplex channel.
    pub fn from_streams(
        writer: Box<dyn Write + Send>,
        reader: Box<dyn BufRead + Send>,
        timeout_ms: u64,
    ) -> Self {
        Self::start(writer, reader, None, timeout_ms)
    }

    fn start(
        writer: Box<dyn Write + Send>,
        reader: Box<dyn BufRead + Send>,
        child: Option<Child>,
        timeout_ms: u64,
    ) -> Self {
        let pending = Arc::new(Mutex::new(Pending::default()));
        let child = Arc::new(Mutex::new(child));
        {
            let pending = Arc::clone(&pending);
            let child = Arc::clone(&child);
            thread::spawn(move || read_loop(reader, pending, child));
        }
        ExternalClient {
            writer: Mutex::new(writer),
            pending,
            child,
            next_id: AtomicU64::new(0),
            timeout: Duration::from_millis(timeout_ms),
        }
    }

    fn call(&self, build: impl FnOnce(String) -> Request) -> Result<(String, Value)> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let request = build(id.clone());
        let line = serde_json::to_string(&request).expect("requests serialize");
        let (tx, rx) = mpsc::channel();
        {
            let mut pending = self.pending.lock().unwrap();
            if let Some(dead) = &pending.dead {
                return Err(clone_err(dead));
            }
            pending.waiting.insert(id.clone(), tx);
        }
        let written = {
            let mut w = self.writer.lock().unwrap();
            writeln!(w, "{line}").and_then(|_| w.flush())
        };
        if let Err(e) = written {
            self.pending.lock().unwrap().waiting.remove(&id);
            return Err(Error::gateway(format!("write to endpoint failed: {e}")));
        }
        match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply,
            Err(_) => {
                self.pending.lock().unwrap().waiting.remove(&id);
                Err(Error::gateway(format!(
                    "no response to request {id} within {} ms",
                    self.timeout.as_millis()
                )))
            }
        }
    }
}

fn read_loop(mut reader: Box<dyn BufRead + Send>, pending: Arc<Mutex<Pending>>, child: Arc<Mutex<Option<Child>>>) {
    let fail_all = |err: Error| {
        let mut p = pending.lock().unwrap();
        for (_, tx) in p.waiting.drain() {
            let _ = tx.send(Err(clone_err(&err)));
        }
        p.dead.get_or_insert(err);
    };
    let mut line = String::new();
    loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) => {
                fail_all(Error::gateway("endpoint closed the connection"));
                return;
            }
            Err(e) => {
                fail_all(Error::gateway(format!("read from endpoint failed: {e}")));
                return;
            }
            Ok(_) => {}
        }
        let raw = line.trim_end().to_owned();
        if raw.is_empty() {
            continue;
        }
        let parsed: Option<(String, Value)> = serde_json::from_str::<Value>(&raw)
            .ok()
            .and_then(|v| Some((v.get("id")?.as_str()?.to_owned(), v)));
        let Some((id, value)) = parsed else {
            if let Some(mut c) = child.lock().unwrap().take() {
                log::error!("external endpoint emitted a non-parseable line; killing it");
                let _ = c.kill();
                let _ = c.wait();
            }
            fail_all(Error::gateway_raw("non-parseable response line", raw));
            return;
        };
        let tx = pending.lock().unwrap().waiting.remove(&id);
        match tx {
            Some(tx) => {
                let _ = tx.send(Ok((raw, value)));
            }
            None => log::warn!("response for unknown or expired request id {id}"),
        }
    }
}

impl Drop for ExternalClient {
    fn drop(&mut self) {
        if let Some(mut c) = self.child.lock().unwrap().take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

fn strip_eos(mut hyp: TokenSeq) -> TokenSeq {
    let mut toks = std::mem::take(&mut hyp).into_inner();
    while toks.last().is_some_and(|t| t == EOS_TOKEN) {
        toks.pop();
    }
    TokenSeq::new(toks).unwrap_or_default()
}

impl Translator for ExternalClient {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        request.validate()?;
        let (raw, value) = self.call(|id| Request::Translate {
            id,
            src: request.src.clone(),
            forced_tgt: request.forced_tgt.clone(),
            beam: request.beam_size,
        })?;
        let response: Response = serde_json::from_value(value)
            .map_err(|e| Error::gateway_raw(format!("malformed translate response: {e}"), raw.clone()))?;
        match response {
            Response::Error { error, .. } => Err(Error::gateway_raw(format!("endpoint error: {error}"), raw)),
            Response::Translation {
                candidates, scores, ..
            } => {
                if candidates.len() != scores.len() {
                    return Err(Error::gateway_raw("candidate/score count mismatch", raw));
                }
                let cands = candidates
                    .into_iter()
                    .zip(scores)
                    .map(|(h, score)| Candidate {
                        hypothesis: strip_eos(h),
                        score,
                    })
                    .collect();
                CandidateSet::new(cands, request).map_err(|e| match e {
                    Error::Gateway { message, .. } => Error::gateway_raw(message, raw),
                    other => Error::gateway_raw(other.to_string(), raw),
                })
            }
            Response::Boundary { .. } => Err(Error::gateway_raw("boundary score in reply to translate", raw)),
        }
    }
}

impl BoundaryClassifier for ExternalClient {
    fn score_boundary(&self, src: &TokenSeq) -> Result<f64> {
        let (raw, value) = self.call(|id| Request::ScoreBoundary { id, src: src.clone() })?;
        let response: Response = serde_json::from_value(value)
            .map_err(|e| Error::gateway_raw(format!("malformed score response: {e}"), raw.clone()))?;
        match response {
            Response::Boundary { p, .. } if (0.0..=1.0).contains(&p) => Ok(p),
            Response::Boundary { .. } => Err(Error::gateway_raw("boundary score outside [0, 1]", raw)),
            Response::Error { error, .. } => Err(Error::gateway_raw(format!("endpoint error: {error}"), raw)),
            Response::Translation { .. } => Err(Error::gateway_raw("translation in reply to score_boundary", raw)),
        }
    }
}

/// Answers protocol requests from `input` until EOF, one at a time.
///
/// Requests for a capability that was not supplied get an error response.
/// Unparseable lines are answered with id `"?"`.
pub fn serve<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    translator: Option<&dyn Translator>,
    classifier: Option<&dyn BoundaryClassifier>,
) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Err(e) => {
                let id = serde_json::from_str::<Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Value::as_str).map(str::to_owned))
                    .unwrap_or_else(|| "?".into());
                Response::Error {
                    id,
                    error: format!("malformed request: {e}"),
                }
            }
            Ok(request) => answer(request, translator, classifier),
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

fn answer(
    request: Request,
    translator: Option<&dyn Translator>,
    classifier: Option<&dyn BoundaryClassifier>,
) -> Response {
    let id = request.id().to_owned();
    let error = |error: String| Response::Error { id: id.clone(), error };
    match request {
        Request::Translate {
            src, forced_tgt, beam, ..
        } => {
            let Some(model) = translator else {
                return error("translate not supported".into());
            };
            let result = TranslateRequest::new(src, forced_tgt, beam).and_then(|r| model.translate(&r));
            match result {
                Ok(set) => Response::Translation {
                    id: id.clone(),
                    candidates: set.hypotheses().cloned().collect(),
                    scores: set.candidates().iter().map(|c| c.score).collect(),
                },
                Err(e) => error(e.to_string()),
            }
        }
        Request::ScoreBoundary { src, .. } => {
            let Some(clf) = classifier else {
                return error("score_boundary not supported".into());
            };
            match clf.score_boundary(&src) {
                Ok(p) => Response::Boundary { id: id.clone(), p },
                Err(e) => error(e.to_string()),
            }
        }
    }
}
