use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenSeq;
use crate::error::{Error, Result};
use crate::policy::BoundaryClassifier;

use super::{Candidate, CandidateSet, TranslateRequest, Translator};

/// One canned answer: `(src, forced)` maps to a ranked candidate list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedTranslation {
    pub src: TokenSeq,
    #[serde(default)]
    pub forced: TokenSeq,
    pub candidates: Vec<TokenSeq>,
    /// Defaults to `0, -1, -2, ...`.
    #[serde(default)]
    pub scores: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedBoundary {
    pub src: TokenSeq,
    pub p: f64,
}

/// JSON document driving [`ScriptedModel`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptFile {
    #[serde(default)]
    pub translations: Vec<ScriptedTranslation>,
    #[serde(default)]
    pub boundary_scores: Vec<ScriptedBoundary>,
}

impl ScriptFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            line: source.line(),
            source,
        })
    }
}

/// A lookup-table model: answers exactly the requests it was scripted with
/// and fails every other one. It also scores boundaries from the same script.
#[derive(Clone, Debug, Default)]
pub struct ScriptedModel {
    translations: HashMap<(TokenSeq, TokenSeq), Vec<Candidate>>,
    boundaries: HashMap<TokenSeq, f64>,
}

impl ScriptedModel {
    pub fn new(script: ScriptFile) -> Result<Self> {
        let mut translations = HashMap::new();
        for entry in script.translations {
            let scores = match entry.scores {
                Some(s) if s.len() != entry.candidates.len() => {
                    return Err(Error::Config(format!(
                        "script entry for {:?}: {} scores for {} candidates",
                        entry.src.join(),
                        s.len(),
                        entry.candidates.len()
                    )))
                }
                Some(s) => s,
                None => (0..entry.candidates.len()).map(|i| -(i as f64)).collect(),
            };
            let cands = entry
                .candidates
                .into_iter()
                .zip(scores)
                .map(|(hypothesis, score)| Candidate { hypothesis, score })
                .collect();
            translations.insert((entry.src, entry.forced), cands);
        }
        let boundaries = script
            .boundary_scores
            .into_iter()
            .map(|b| (b.src, b.p))
            .collect();
        Ok(ScriptedModel {
            translations,
            boundaries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ScriptFile::load(path)?)
    }
}

impl Translator for ScriptedModel {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        request.validate()?;
        let key = (request.src.clone(), request.forced_tgt.clone());
        let cands = self.translations.get(&key).ok_or_else(|| {
            Error::gateway(format!(
                "no scripted translation for src={:?} forced={:?}",
                request.src.join(),
                request.forced_tgt.join()
            ))
        })?;
        let mut cands = cands.clone();
        cands.truncate(request.beam_size);
        CandidateSet::new(cands, request)
    }
}

impl BoundaryClassifier for ScriptedModel {
    fn score_boundary(&self, src: &TokenSeq) -> Result<f64> {
        self.boundaries
            .get(src)
            .copied()
            .ok_or_else(|| Error::gateway(format!("no scripted boundary score for {:?}", src.join())))
    }
}
