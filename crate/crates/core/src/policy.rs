//! READ policies: after each source token arrives, decide whether to keep
//! reading or hand the prefix read so far to the WRITE side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_lines, TokenSeq};
use crate::error::{Error, Result};

/// Scores how likely the source prefix ends a meaningful unit.
pub trait BoundaryClassifier: Send + Sync {
    /// Returns `P(boundary | src)` in `[0, 1]`.
    fn score_boundary(&self, src: &TokenSeq) -> Result<f64>;
}

impl<T: BoundaryClassifier + ?Sized> BoundaryClassifier for Arc<T> {
    fn score_boundary(&self, src: &TokenSeq) -> Result<f64> {
        (**self).score_boundary(src)
    }
}

/// Adapts a closure into a classifier.
pub struct FnClassifier<F>(pub F);

impl<F> BoundaryClassifier for FnClassifier<F>
where
    F: Fn(&TokenSeq) -> Result<f64> + Send + Sync,
{
    fn score_boundary(&self, src: &TokenSeq) -> Result<f64> {
        (self.0)(src)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadAction {
    Read,
    Segment,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadDecision {
    pub action: ReadAction,
    /// Classifier confidence, present only for scoring policies.
    pub score: Option<f64>,
}

impl ReadDecision {
    fn read() -> Self {
        ReadDecision {
            action: ReadAction::Read,
            score: None,
        }
    }

    fn segment() -> Self {
        ReadDecision {
            action: ReadAction::Segment,
            score: None,
        }
    }

    pub fn is_segment(&self) -> bool {
        self.action == ReadAction::Segment
    }
}

/// Per-sentence segment positions for the scripted policy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryScript {
    boundaries: BTreeMap<String, BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ScriptLine {
    sid: String,
    boundaries: Vec<usize>,
}

impl BoundaryScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sid: impl Into<String>, boundaries: impl IntoIterator<Item = usize>) {
        self.boundaries
            .entry(sid.into())
            .or_default()
            .extend(boundaries);
    }

    pub fn get(&self, sid: &str) -> Option<&BTreeSet<usize>> {
        self.boundaries.get(sid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut script = BoundaryScript::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ScriptLine = serde_json::from_str(&line).map_err(|source| Error::Json {
                path: path.into(),
                line: i + 1,
                source,
            })?;
            script.insert(rec.sid, rec.boundaries);
        }
        Ok(script)
    }

    /// Writes one line per sentence, in the given sid order.
    pub fn save<'a>(&self, path: &Path, order: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let lines = order.into_iter().filter_map(|sid| {
            let b = self.boundaries.get(sid)?;
            let rec = ScriptLine {
                sid: sid.to_owned(),
                boundaries: b.iter().copied().collect(),
            };
            Some(serde_json::to_string(&rec).expect("script lines serialize"))
        });
        write_lines(path, lines)
    }
}

/// Tokens the heuristic policy treats as unit-ending punctuation.
pub const SEGMENT_PUNCTUATION: &[&str] = &[",", ";", ":", "，", "、", "；", "：", ".", "?", "!", "。", "？", "！"];

#[derive(Clone)]
pub enum PolicyConfig {
    /// Read `k` tokens, then write one token per read.
    WaitK { k: usize },
    /// Segment when the classifier's boundary probability reaches `delta`.
    Threshold {
        delta: f64,
        classifier: Arc<dyn BoundaryClassifier>,
    },
    /// Segment exactly at the scripted positions of each sentence.
    Scripted { script: Arc<BoundaryScript> },
    /// Segment after punctuation, or once `span` tokens accumulate.
    Heuristic { span: usize },
}

impl fmt::Debug for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyConfig::WaitK { k } => write!(f, "WaitK {{ k: {k} }}"),
            PolicyConfig::Threshold { delta, .. } => write!(f, "Threshold {{ delta: {delta} }}"),
            PolicyConfig::Scripted { .. } => f.write_str("Scripted"),
            PolicyConfig::Heuristic { span } => write!(f, "Heuristic {{ span: {span} }}"),
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            PolicyConfig::WaitK { k: 0 } => Err(Error::Config("wait-k needs k >= 1".into())),
            PolicyConfig::Threshold { delta, .. } if !(0.0..=1.0).contains(delta) => {
                Err(Error::Config(format!("delta {delta} outside [0, 1]")))
            }
            PolicyConfig::Heuristic { span: 0 } => Err(Error::Config("heuristic span must be >= 1".into())),
            _ => Ok(()),
        }
    }

    pub fn is_wait_k(&self) -> bool {
        matches!(self, PolicyConfig::WaitK { .. })
    }

    /// A fresh decision stream for one sentence.
    pub fn start(&self, sid: &str) -> Result<ReadPolicy<'_>> {
        self.validate()?;
        let boundaries = match self {
            PolicyConfig::Scripted { script } => Some(
                script
                    .get(sid)
                    .ok_or_else(|| Error::Policy(format!("no scripted boundaries for sentence {sid}")))?,
            ),
            _ => None,
        };
        Ok(ReadPolicy {
            config: self,
            boundaries,
            last_segment: 0,
        })
    }
}

/// Decision state for one sentence. Not shared across sentences.
pub struct ReadPolicy<'a> {
    config: &'a PolicyConfig,
    boundaries: Option<&'a BTreeSet<usize>>,
    last_segment: usize,
}

impl ReadPolicy<'_> {
    /// Decides after the latest source token has been read.
    ///
    /// `tgt_so_far` is accepted for interface symmetry; none of the built-in
    /// policies look at the partial translation.
    pub fn decide(&mut self, src_so_far: &TokenSeq, _tgt_so_far: &TokenSeq, source_exhausted: bool) -> Result<ReadDecision> {
        let read = src_so_far.len();
        let decision = if source_exhausted {
            ReadDecision::segment()
        } else {
            match self.config {
                PolicyConfig::WaitK { k } => {
                    if read >= *k {
                        ReadDecision::segment()
                    } else {
                        ReadDecision::read()
                    }
                }
                PolicyConfig::Threshold { delta, classifier } => {
                    let p = classifier
                        .score_boundary(src_so_far)
                        .map_err(|e| Error::Policy(format!("classifier unavailable: {e}")))?;
                    let action = if p >= *delta { ReadAction::Segment } else { ReadAction::Read };
                    ReadDecision { action, score: Some(p) }
                }
                PolicyConfig::Scripted { .. } => {
                    if self.boundaries.is_some_and(|b| b.contains(&read)) {
                        ReadDecision::segment()
                    } else {
                        ReadDecision::read()
                    }
                }
                PolicyConfig::Heuristic { span } => {
                    let punct = src_so_far
                        .tokens()
                        .last()
                        .is_some_and(|t| SEGMENT_PUNCTUATION.contains(&t.as_str()));
                    if punct || read - self.last_segment >= *span {
                        ReadDecision::segment()
                    } else {
                        ReadDecision::read()
                    }
                }
            }
        };
        if decision.is_segment() {
            self.last_segment = read;
        }
        Ok(decision)
    }
}
