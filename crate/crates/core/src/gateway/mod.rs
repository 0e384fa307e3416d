//! Translation-model abstraction: forced-prefix beam decoding returning
//! ranked candidates.
//!
//! Every backend implements [`Translator`]. The built-in [`ToyModel`] wraps
//! the toy language; [`ExternalClient`] talks to another process over the
//! line-delimited JSON protocol in [`wire`].

mod script;
mod toy;
pub mod wire;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenSeq, ToyLexicon};
use crate::error::{Error, Result};
use crate::policy::BoundaryClassifier;

pub use script::{ScriptFile, ScriptedBoundary, ScriptedModel, ScriptedTranslation};
pub use toy::ToyModel;
pub use wire::ExternalClient;

/// End-of-sequence marker stripped from external hypotheses.
pub const EOS_TOKEN: &str = "</s>";

/// Default number of full-sentence candidates.
pub const DEFAULT_BEAM: usize = 10;

/// Default response timeout for external endpoints.
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslateRequest {
    pub src: TokenSeq,
    pub forced_tgt: TokenSeq,
    pub beam_size: usize,
}

impl TranslateRequest {
    pub fn new(src: TokenSeq, forced_tgt: TokenSeq, beam_size: usize) -> Result<Self> {
        let req = TranslateRequest {
            src,
            forced_tgt,
            beam_size,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be at least 1".into()));
        }
        if self.src.is_empty() {
            return Err(Error::Config("translate request with empty source".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub hypothesis: TokenSeq,
    pub score: f64,
}

/// Ranked beam output of one translate call.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
    requested_beam: usize,
}

impl CandidateSet {
    /// Builds a set, checking it against the request that produced it.
    pub fn new(candidates: Vec<Candidate>, request: &TranslateRequest) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::gateway("zero candidates returned"));
        }
        if candidates.len() > request.beam_size {
            return Err(Error::gateway(format!(
                "{} candidates returned for beam {}",
                candidates.len(),
                request.beam_size
            )));
        }
        for pair in candidates.windows(2) {
            // NaN compares as None and fails too.
            if matches!(pair[0].score.partial_cmp(&pair[1].score), None | Some(Ordering::Less)) {
                return Err(Error::gateway("candidate scores are not non-increasing"));
            }
        }
        for cand in &candidates {
            cand.hypothesis.validate()?;
            if !cand.hypothesis.starts_with(&request.forced_tgt) {
                return Err(Error::gateway(format!(
                    "candidate {:?} does not begin with forced prefix {:?}",
                    cand.hypothesis.join(),
                    request.forced_tgt.join()
                )));
            }
        }
        Ok(CandidateSet {
            candidates,
            requested_beam: request.beam_size,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn requested_beam(&self) -> usize {
        self.requested_beam
    }

    /// The highest-scoring hypothesis.
    pub fn best(&self) -> &TokenSeq {
        &self.candidates[0].hypothesis
    }

    pub fn hypotheses(&self) -> impl Iterator<Item = &TokenSeq> {
        self.candidates.iter().map(|c| &c.hypothesis)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// True iff `hyp` is a (non-strict) token prefix of any candidate.
pub fn is_prefix_of_candidates(hyp: &TokenSeq, candidates: &CandidateSet) -> bool {
    candidates.hypotheses().any(|c| c.starts_with(hyp))
}

/// A translation model capable of forced-prefix decoding.
pub trait Translator: Send + Sync {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet>;
}

impl<T: Translator + ?Sized> Translator for Arc<T> {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        (**self).translate(request)
    }
}

impl<T: Translator + ?Sized> Translator for &T {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        (**self).translate(request)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExternalTarget {
    /// Command line of a child process speaking the protocol on stdio.
    Exec(Vec<String>),
    /// `host:port` of a protocol server.
    Tcp(String),
}

/// Where translations (or boundary scores) come from.
///
/// Textual form: `toy:<lexicon-path>[:variants]`, `exec:<command line>` or
/// `tcp:<host:port>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelEndpoint {
    Toy { lexicon: ToyLexicon, variants: bool },
    External { target: ExternalTarget, timeout_ms: u64 },
}

impl ModelEndpoint {
    pub fn parse(spec: &str) -> Result<Self> {
        Self::parse_with_timeout(spec, DEFAULT_TIMEOUT_MS)
    }

    pub fn parse_with_timeout(spec: &str, timeout_ms: u64) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("endpoint spec {spec:?} lacks a kind prefix")))?;
        match kind {
            "toy" => {
                let (path, variants) = match rest.strip_suffix(":variants") {
                    Some(path) => (path, true),
                    None => (rest, false),
                };
                if path.is_empty() {
                    return Err(Error::Config("toy endpoint needs a lexicon path".into()));
                }
                let lexicon = ToyLexicon::load(Path::new(path))?;
                Ok(ModelEndpoint::Toy { lexicon, variants })
            }
            "exec" => {
                let argv = shlex::split(rest)
                    .filter(|argv| !argv.is_empty())
                    .ok_or_else(|| Error::Config(format!("bad exec command line {rest:?}")))?;
                Ok(ModelEndpoint::External {
                    target: ExternalTarget::Exec(argv),
                    timeout_ms,
                })
            }
            "tcp" => {
                if !rest.contains(':') {
                    return Err(Error::Config(format!("tcp endpoint {rest:?} needs host:port")));
                }
                Ok(ModelEndpoint::External {
                    target: ExternalTarget::Tcp(rest.to_owned()),
                    timeout_ms,
                })
            }
            other => Err(Error::Config(format!("unknown endpoint kind {other:?}"))),
        }
    }

    fn connect_external(target: &ExternalTarget, timeout_ms: u64) -> Result<ExternalClient> {
        match target {
            ExternalTarget::Exec(argv) => ExternalClient::spawn(argv, timeout_ms),
            ExternalTarget::Tcp(addr) => ExternalClient::connect_tcp(addr, timeout_ms),
        }
    }

    /// Opens the endpoint as a translation model.
    pub fn connect(&self) -> Result<Arc<dyn Translator>> {
        Ok(match self {
            ModelEndpoint::Toy { lexicon, variants } => {
                Arc::new(ToyModel::new(lexicon.clone(), *variants)?)
            }
            ModelEndpoint::External { target, timeout_ms } => {
                Arc::new(Self::connect_external(target, *timeout_ms)?)
            }
        })
    }

    /// Opens the endpoint as a boundary classifier. Only external endpoints
    /// can score boundaries.
    pub fn connect_classifier(&self) -> Result<Arc<dyn BoundaryClassifier>> {
        match self {
            ModelEndpoint::Toy { .. } => Err(Error::Config(
                "toy endpoints cannot serve as boundary classifiers".into(),
            )),
            ModelEndpoint::External { target, timeout_ms } => {
                Ok(Arc::new(Self::connect_external(target, *timeout_ms)?))
            }
        }
    }
}

/// A shared model handle that memoizes full-sentence candidate sets per
/// `(sid, beam)`.
pub struct Gateway {
    model: Arc<dyn Translator>,
    full: Mutex<HashMap<(String, usize), CandidateSet>>,
}

impl Gateway {
    pub fn new(model: Arc<dyn Translator>) -> Self {
        Gateway {
            model,
            full: Mutex::new(HashMap::new()),
        }
    }

    pub fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        self.model.translate(request)
    }

    /// Unforced translation of a whole sentence, cached.
    pub fn full_sentence(&self, sid: &str, src: &TokenSeq, beam_size: usize) -> Result<CandidateSet> {
        let key = (sid.to_owned(), beam_size);
        if let Some(hit) = self.full.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let request = TranslateRequest::new(src.clone(), TokenSeq::empty(), beam_size)?;
        let set = self.model.translate(&request)?;
        self.full.lock().unwrap().insert(key, set.clone());
        Ok(set)
    }
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway").finish_non_exhaustive()
    }
}

impl Translator for Gateway {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        self.model.translate(request)
    }
}
