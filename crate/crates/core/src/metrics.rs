//! Translation quality (corpus BLEU) and latency (Average Lagging).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_lines, SentencePair, TokenSeq};
use crate::error::{Error, Result};
use crate::pool::ordered_map;
use crate::simulate::DecodingTrace;

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct BleuConfig {
    /// Floor for a precision with zero matches.
    pub epsilon: f64,
    /// Split punctuation off tokens before scoring.
    pub split_punctuation: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            epsilon: 1e-16,
            split_punctuation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// In `[0, 100]`.
    pub score: f64,
    /// Modified n-gram precisions. Orders past `effective_order` had no
    /// candidate n-grams at all and are reported as 0; they do not enter the
    /// geometric mean.
    pub precisions: [f64; MAX_ORDER],
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub effective_order: usize,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    /// Every hypothesis was empty; the score is 0.
    pub empty_hypotheses: bool,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_default() += 1;
    }
    counts
}

fn split_punctuation(seq: &TokenSeq) -> Vec<String> {
    let is_punct = |c: char| c.is_ascii_punctuation() || "，。、；：？！「」『』（）《》“”‘’…".contains(c);
    let mut out = Vec::new();
    for tok in seq {
        let mut word = String::new();
        for c in tok.chars() {
            if is_punct(c) {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

pub fn corpus_bleu(hypotheses: &[TokenSeq], references: &[TokenSeq]) -> Result<BleuScore> {
    corpus_bleu_with(hypotheses, references, &BleuConfig::default())
}

/// Case-sensitive corpus BLEU-4 with one reference per hypothesis.
pub fn corpus_bleu_with(hypotheses: &[TokenSeq], references: &[TokenSeq], cfg: &BleuConfig) -> Result<BleuScore> {
    if hypotheses.len() != references.len() {
        return Err(Error::Shape(format!(
            "{} hypotheses vs {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if references.is_empty() {
        return Err(Error::Shape("no references".into()));
    }
    let prep = |s: &TokenSeq| {
        if cfg.split_punctuation {
            split_punctuation(s)
        } else {
            s.tokens().to_vec()
        }
    };

    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hypotheses.iter().zip(references) {
        let (h, r) = (prep(h), prep(r));
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_ORDER {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            totals[n - 1] += h.len().saturating_sub(n - 1);
            matches[n - 1] += hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }

    let effective_order = totals.iter().take_while(|&&t| t > 0).count();
    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..effective_order {
        precisions[n] = if matches[n] == 0 {
            cfg.epsilon
        } else {
            matches[n] as f64 / totals[n] as f64
        };
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if effective_order == 0 {
        0.0
    } else {
        let log_mean = precisions[..effective_order].iter().map(|p| p.ln()).sum::<f64>() / effective_order as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    if hyp_len == 0 {
        log::warn!("all hypotheses are empty; BLEU is 0");
    }
    Ok(BleuScore {
        score,
        precisions,
        matches,
        totals,
        effective_order,
        brevity_penalty,
        hyp_len,
        ref_len,
        empty_hypotheses: hyp_len == 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyScore {
    /// Average lag in source tokens.
    pub al: f64,
    pub tau: usize,
    /// Target-to-source length ratio.
    pub r: f64,
}

/// Average Lagging of one sentence.
///
/// With `r = hyp_len / src_len` and `tau` the first write made after the
/// whole source was read (or `hyp_len`):
/// `AL = 1/tau * sum_{t=1..tau} (g[t] - (t-1)/r)`.
pub fn average_lagging(g: &[usize], src_len: usize, hyp_len: usize) -> Result<LatencyScore> {
    let bad = |field, reason: String| Err(Error::MetricInput { field, reason });
    if src_len == 0 {
        return bad("src_len", "must be at least 1".into());
    }
    if hyp_len == 0 {
        return bad("hyp_len", "must be at least 1".into());
    }
    if g.len() != hyp_len {
        return bad("g", format!("length {} != hyp_len {hyp_len}", g.len()));
    }
    if g.windows(2).any(|w| w[0] > w[1]) {
        return bad("g", "not non-decreasing".into());
    }
    if let Some(&over) = g.iter().find(|&&x| x > src_len) {
        return bad("g", format!("entry {over} exceeds src_len {src_len}"));
    }
    let r = hyp_len as f64 / src_len as f64;
    let tau = g.iter().position(|&x| x == src_len).map_or(hyp_len, |i| i + 1);
    let lag: f64 = g[..tau]
        .iter()
        .enumerate()
        .map(|(i, &gt)| gt as f64 - i as f64 / r)
        .sum();
    Ok(LatencyScore {
        al: lag / tau as f64,
        tau,
        r,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceLatency {
    pub sid: String,
    pub al: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusScores {
    pub bleu: BleuScore,
    pub per_sentence: Vec<SentenceLatency>,
    pub mean_al: f64,
}

/// Scores traces against references matched by sid, in reference order.
pub fn score_traces(traces: &[DecodingTrace], references: &[SentencePair], cfg: &BleuConfig) -> Result<CorpusScores> {
    let by_sid: HashMap<&str, &DecodingTrace> = traces.iter().map(|t| (t.sid.as_str(), t)).collect();
    let ref_sids: HashMap<&str, ()> = references.iter().map(|r| (r.sid.as_str(), ())).collect();
    let mut missing: Vec<String> = references
        .iter()
        .filter(|r| !by_sid.contains_key(r.sid.as_str()))
        .map(|r| r.sid.clone())
        .collect();
    missing.extend(
        traces
            .iter()
            .filter(|t| !ref_sids.contains_key(t.sid.as_str()))
            .map(|t| t.sid.clone()),
    );
    if !missing.is_empty() {
        return Err(Error::Alignment { missing });
    }
    if references.is_empty() {
        return Err(Error::Shape("no sentences to score".into()));
    }

    let mut hyps = Vec::with_capacity(references.len());
    let mut refs = Vec::with_capacity(references.len());
    let mut per_sentence = Vec::with_capacity(references.len());
    for r in references {
        let trace = by_sid[r.sid.as_str()];
        let lat = average_lagging(&trace.g, r.src.len(), trace.hypothesis.len())?;
        per_sentence.push(SentenceLatency {
            sid: r.sid.clone(),
            al: lat.al,
        });
        hyps.push(trace.hypothesis.clone());
        refs.push(r.tgt.clone());
    }
    let bleu = corpus_bleu_with(&hyps, &refs, cfg)?;
    let mean_al = per_sentence.iter().map(|s| s.al).sum::<f64>() / per_sentence.len() as f64;
    Ok(CorpusScores {
        bleu,
        per_sentence,
        mean_al,
    })
}

#[derive(Serialize)]
struct ScoreSummary<'a> {
    corpus: SummaryBody<'a>,
}

#[derive(Serialize)]
struct SummaryBody<'a> {
    bleu: f64,
    precisions: &'a [f64],
    brevity_penalty: f64,
    hyp_len: usize,
    ref_len: usize,
    mean_al: f64,
    n_sentences: usize,
    latency_unit: &'static str,
}

/// Per-sentence `{"sid", "al"}` lines followed by one `{"corpus": ...}`
/// summary line.
pub fn write_score_report(path: &Path, scores: &CorpusScores) -> Result<()> {
    let mut lines: Vec<String> = scores
        .per_sentence
        .iter()
        .map(|s| serde_json::to_string(s).expect("scores serialize"))
        .collect();
    let summary = ScoreSummary {
        corpus: SummaryBody {
            bleu: scores.bleu.score,
            precisions: &scores.bleu.precisions,
            brevity_penalty: scores.bleu.brevity_penalty,
            hyp_len: scores.bleu.hyp_len,
            ref_len: scores.bleu.ref_len,
            mean_al: scores.mean_al,
            n_sentences: scores.per_sentence.len(),
            latency_unit: "token",
        },
    };
    lines.push(serde_json::to_string(&summary).expect("summary serializes"));
    write_lines(path, lines)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityLatencyPoint {
    pub param_name: String,
    pub param_value: f64,
    pub bleu: f64,
    pub mean_al: f64,
    pub n_sentences: usize,
}

/// One run of a sweep: the traces produced at a parameter value.
#[derive(Clone, Copy, Debug)]
pub struct SweepRun<'a> {
    pub param_value: f64,
    pub traces: &'a [DecodingTrace],
    pub references: &'a [SentencePair],
}

/// Scores every run and returns one row per parameter value, sorted by
/// value.
pub fn sweep(param_name: &str, runs: &[SweepRun<'_>], cfg: &BleuConfig) -> Result<Vec<QualityLatencyPoint>> {
    let workers = runs.len().clamp(1, crate::pool::default_workers());
    let scored = ordered_map(workers, runs, |run| score_traces(run.traces, run.references, cfg))?;
    let mut rows = Vec::with_capacity(runs.len());
    for (run, scores) in runs.iter().zip(scored) {
        let scores = scores?;
        rows.push(QualityLatencyPoint {
            param_name: param_name.to_owned(),
            param_value: run.param_value,
            bleu: scores.bleu.score,
            mean_al: scores.mean_al,
            n_sentences: scores.per_sentence.len(),
        });
    }
    rows.sort_by(|a, b| a.param_value.total_cmp(&b.param_value));
    Ok(rows)
}

pub const CSV_HEADER: &str = "param_name,param_value,bleu,mean_al,n_sentences";

pub fn sweep_csv(rows: &[QualityLatencyPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{}\n",
            r.param_name, r.param_value, r.bleu, r.mean_al, r.n_sentences
        ));
    }
    out
}

pub fn write_sweep_csv(path: &Path, rows: &[QualityLatencyPoint]) -> Result<()> {
    std::fs::write(path, sweep_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Groups rows by parameter name, for callers that mix families.
pub fn by_param(rows: &[QualityLatencyPoint]) -> BTreeMap<&str, Vec<&QualityLatencyPoint>> {
    let mut out: BTreeMap<&str, Vec<&QualityLatencyPoint>> = BTreeMap::new();
    for r in rows {
        out.entry(r.param_name.as_str()).or_default().push(r);
    }
    out
}
