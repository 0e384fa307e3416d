//! Pseudo prefix-pair extraction.
//!
//! For each boundary `t` of a source sentence `x`, the model translates
//! `x[..t]` while forcing the target prefix accepted so far. The result is
//! kept as a prefix pair when it is itself a prefix of one of the top-B
//! full-sentence candidates; the forced prefix then advances to it.
//! Optionally each pair carries up to `m` future source words, rendered after
//! a `[fw]` separator in exports.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_lines, SentencePair, TokenSeq, FW_TOKEN};
use crate::error::{Error, Result};
use crate::gateway::{is_prefix_of_candidates, Gateway, TranslateRequest, DEFAULT_BEAM};
use crate::pool::ordered_map;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrefixPair {
    pub sid: String,
    /// Number of source tokens consumed (1-based boundary).
    pub t: usize,
    #[serde(rename = "src")]
    pub src_prefix: TokenSeq,
    /// Future words following the prefix, without the separator.
    pub fw: TokenSeq,
    #[serde(rename = "tgt")]
    pub tgt_prefix: TokenSeq,
}

impl PrefixPair {
    /// Source side as exported: `src_prefix [fw] fw...`, or just the prefix
    /// when there are no future words.
    pub fn source_line(&self) -> String {
        if self.fw.is_empty() {
            self.src_prefix.join()
        } else {
            format!("{} {FW_TOKEN} {}", self.src_prefix.join(), self.fw.join())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub beam_size: usize,
    /// Future words per pair; 0 gives the basic variant.
    pub m: usize,
    /// Keep the final pair that merely restates the full translation.
    pub include_full_pair: bool,
    /// Sentences longer than this are skipped.
    pub max_source_len: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            beam_size: DEFAULT_BEAM,
            m: 2,
            include_full_pair: false,
            max_source_len: 256,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Extracts the prefix pairs of one sentence.
pub fn extract_prefix_pairs(pair: &SentencePair, gateway: &Gateway, cfg: &ExtractionConfig) -> Result<Vec<PrefixPair>> {
    cfg.validate()?;
    let src = &pair.src;
    let len = src.len();
    let full = gateway.full_sentence(&pair.sid, src, cfg.beam_size)?;

    let mut committed = TokenSeq::empty();
    let mut pairs = Vec::new();
    for t in 1..=len {
        let request = TranslateRequest::new(src.prefix(t), committed.clone(), cfg.beam_size)?;
        let hyp = gateway.translate(&request)?.best().clone();
        if hyp.is_empty() {
            log::warn!("sentence {}: empty translation at boundary {t}", pair.sid);
            continue;
        }
        if hyp == committed || !is_prefix_of_candidates(&hyp, &full) {
            continue;
        }
        if t == len && !cfg.include_full_pair && &hyp == full.best() {
            continue;
        }
        pairs.push(PrefixPair {
            sid: pair.sid.clone(),
            t,
            src_prefix: src.prefix(t),
            fw: src.slice(t, t + cfg.m),
            tgt_prefix: hyp.clone(),
        });
        committed = hyp;
    }
    Ok(pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

/// One line of an extraction (or simulation) report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub sid: String,
    pub status: Status,
    pub pairs: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub sentences: usize,
    pub failed: usize,
    pub skipped: usize,
    pub pairs: usize,
    /// Number of sentences yielding each pair count.
    pub pairs_histogram: BTreeMap<usize, usize>,
    /// Mean pairs per successfully processed sentence.
    pub mean_pairs: f64,
    /// Last sid in corpus order that was processed; extraction can resume
    /// after it.
    pub last_completed_sid: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtractionReport {
    pub records: Vec<SentenceRecord>,
    pub summary: ExtractionSummary,
}

impl ExtractionReport {
    fn from_records(records: Vec<SentenceRecord>) -> Self {
        let mut s = ExtractionSummary {
            sentences: records.len(),
            ..Default::default()
        };
        for r in &records {
            match r.status {
                Status::Error => s.failed += 1,
                Status::Ok => {
                    if r.detail.starts_with("skipped") {
                        s.skipped += 1;
                    }
                    s.pairs += r.pairs;
                    *s.pairs_histogram.entry(r.pairs).or_default() += 1;
                }
            }
        }
        let ok = s.sentences - s.failed;
        s.mean_pairs = if ok > 0 { s.pairs as f64 / ok as f64 } else { 0.0 };
        s.last_completed_sid = records.last().map(|r| r.sid.clone());
        ExtractionReport { records, summary: s }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_lines(
            path,
            self.records
                .iter()
                .map(|r| serde_json::to_string(r).expect("records serialize")),
        )
    }
}

/// Extracts every sentence of a corpus on `workers` threads.
///
/// Per-sentence failures are recorded in the report; output order follows
/// the corpus regardless of the worker count.
pub fn extract_corpus(
    corpus: &[SentencePair],
    gateway: &Gateway,
    cfg: &ExtractionConfig,
    workers: usize,
) -> Result<(Vec<PrefixPair>, ExtractionReport)> {
    cfg.validate()?;
    let results = ordered_map(workers, corpus, |pair| {
        if pair.src.len() > cfg.max_source_len {
            return Ok(None);
        }
        extract_prefix_pairs(pair, gateway, cfg).map(Some)
    })?;

    let mut all = Vec::new();
    let mut records = Vec::with_capacity(corpus.len());
    for (pair, result) in corpus.iter().zip(results) {
        let record = match result {
            Ok(Some(pairs)) => {
                let rec = SentenceRecord {
                    sid: pair.sid.clone(),
                    status: Status::Ok,
                    pairs: pairs.len(),
                    detail: String::new(),
                };
                all.extend(pairs);
                rec
            }
            Ok(None) => SentenceRecord {
                sid: pair.sid.clone(),
                status: Status::Ok,
                pairs: 0,
                detail: format!(
                    "skipped: source length {} exceeds {}",
                    pair.src.len(),
                    cfg.max_source_len
                ),
            },
            Err(e) => {
                log::warn!("sentence {} failed: {e}", pair.sid);
                SentenceRecord {
                    sid: pair.sid.clone(),
                    status: Status::Error,
                    pairs: 0,
                    detail: e.to_string(),
                }
            }
        };
        records.push(record);
    }
    Ok((all, ExtractionReport::from_records(records)))
}

pub fn write_prefix_pairs(path: &Path, pairs: &[PrefixPair]) -> Result<()> {
    write_lines(
        path,
        pairs.iter().map(|p| serde_json::to_string(p).expect("pairs serialize")),
    )
}

pub fn read_prefix_pairs(path: &Path) -> Result<Vec<PrefixPair>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?);
    }
    Ok(pairs)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportReport {
    pub pseudo_lines: usize,
    pub original_lines: usize,
    pub duplicates_dropped: usize,
}

/// Writes pseudo prefix pairs followed by the original pairs as a parallel
/// text corpus. With `dedupe`, repeated `(source, target)` rows are written
/// once, at their first occurrence.
pub fn export_joint_corpus(
    pairs: &[PrefixPair],
    originals: &[SentencePair],
    out_src: &Path,
    out_tgt: &Path,
    dedupe: bool,
) -> Result<ExportReport> {
    let mut report = ExportReport::default();
    let mut seen = HashSet::new();
    let mut src_lines = Vec::with_capacity(pairs.len() + originals.len());
    let mut tgt_lines = Vec::with_capacity(pairs.len() + originals.len());

    let pseudo = pairs.iter().map(|p| (true, p.source_line(), p.tgt_prefix.join()));
    let orig = originals.iter().map(|p| (false, p.src.join(), p.tgt.join()));
    for (is_pseudo, s, t) in pseudo.chain(orig) {
        if dedupe && !seen.insert((s.clone(), t.clone())) {
            report.duplicates_dropped += 1;
            continue;
        }
        if is_pseudo {
            report.pseudo_lines += 1;
        } else {
            report.original_lines += 1;
        }
        src_lines.push(s);
        tgt_lines.push(t);
    }
    write_lines(out_src, &src_lines)?;
    write_lines(out_tgt, &tgt_lines)?;
    Ok(report)
}
