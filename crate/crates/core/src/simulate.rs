//! Streaming decode loop: a READ policy decides when to translate, a WRITE
//! policy (a prefix-to-prefix or full-sentence model) decides what to emit.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_lines, SentencePair, TokenSeq, FW_TOKEN};
use crate::error::{Error, Result};
use crate::extract::Status;
use crate::gateway::{TranslateRequest, Translator, DEFAULT_BEAM, EOS_TOKEN};
use crate::policy::PolicyConfig;
use crate::pool::ordered_map;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "R")]
    Read,
    #[serde(rename = "W")]
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub token: String,
    /// Source tokens read when the event happened (including this one for a
    /// READ).
    pub src_read_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodingTrace {
    pub sid: String,
    pub events: Vec<TraceEvent>,
    pub hypothesis: TokenSeq,
    /// `g[i]` is the number of source tokens read before the `i`-th write.
    pub g: Vec<usize>,
}

impl DecodingTrace {
    /// Builds a trace from READ/WRITE kinds and tokens, deriving read counts,
    /// the hypothesis and `g`.
    pub fn from_events(sid: impl Into<String>, events: impl IntoIterator<Item = (EventKind, String)>) -> Self {
        let mut read = 0;
        let mut out = Vec::new();
        let mut hyp = Vec::new();
        let mut g = Vec::new();
        for (kind, token) in events {
            match kind {
                EventKind::Read => read += 1,
                EventKind::Write => {
                    hyp.push(token.clone());
                    g.push(read);
                }
            }
            out.push(TraceEvent {
                kind,
                token,
                src_read_count: read,
            });
        }
        DecodingTrace {
            sid: sid.into(),
            events: out,
            hypothesis: TokenSeq::new(hyp).unwrap_or_default(),
            g,
        }
    }

    pub fn reads(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Read).count()
    }

    /// Checks the structural invariants against the source length.
    pub fn validate(&self, src_len: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Shape(format!("trace {}: {msg}", self.sid)));
        let rebuilt = DecodingTrace::from_events(
            self.sid.clone(),
            self.events.iter().map(|e| (e.kind, e.token.clone())),
        );
        if rebuilt.events != self.events {
            return bad("read counts inconsistent with events".into());
        }
        if rebuilt.g != self.g {
            return bad(format!("stored g {:?} != recomputed {:?}", self.g, rebuilt.g));
        }
        if rebuilt.hypothesis != self.hypothesis {
            return bad("hypothesis differs from WRITE tokens".into());
        }
        if self.reads() != src_len {
            return bad(format!("{} reads for source length {src_len}", self.reads()));
        }
        Ok(())
    }
}

/// Renders a trace with runs of `i` reads as `WAIT*i` (`WAIT` for one).
pub fn render_trace(trace: &DecodingTrace) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut run = 0;
    let flush = |run: &mut usize, parts: &mut Vec<String>| {
        match *run {
            0 => {}
            1 => parts.push("WAIT".into()),
            i => parts.push(format!("WAIT*{i}")),
        }
        *run = 0;
    };
    for e in &trace.events {
        match e.kind {
            EventKind::Read => run += 1,
            EventKind::Write => {
                flush(&mut run, &mut parts);
                parts.push(e.token.clone());
            }
        }
    }
    flush(&mut run, &mut parts);
    parts.join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteKind {
    /// A model trained on prefix pairs; may use future words.
    PrefixModel,
    /// A model trained on full sentences only.
    FullSentenceModel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WritePolicyConfig {
    pub kind: WriteKind,
    /// Look-ahead tokens read after each segment decision.
    pub m: usize,
    pub beam_size: usize,
}

impl Default for WritePolicyConfig {
    fn default() -> Self {
        WritePolicyConfig {
            kind: WriteKind::PrefixModel,
            m: 0,
            beam_size: DEFAULT_BEAM,
        }
    }
}

impl WritePolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be at least 1".into()));
        }
        if self.m > 0 && self.kind != WriteKind::PrefixModel {
            return Err(Error::Config("future words need a prefix model".into()));
        }
        Ok(())
    }
}

struct Stream<'a> {
    src: &'a TokenSeq,
    events: Vec<(EventKind, String)>,
    read: usize,
    committed: TokenSeq,
}

impl Stream<'_> {
    fn read_to(&mut self, upto: usize) {
        while self.read < upto {
            self.events.push((EventKind::Read, self.src[self.read].clone()));
            self.read += 1;
        }
    }

    /// New tokens of the best candidate beyond what is committed.
    fn continuation(&self, model: &dyn Translator, input: TokenSeq, beam: usize) -> Result<Vec<String>> {
        let request = TranslateRequest::new(input, self.committed.clone(), beam)?;
        let set = model.translate(&request)?;
        Ok(set.best().tokens()[self.committed.len()..]
            .iter()
            .filter(|t| *t != EOS_TOKEN)
            .cloned()
            .collect())
    }

    fn write(&mut self, tokens: impl IntoIterator<Item = String>) {
        for tok in tokens {
            self.committed.push(tok.clone());
            self.events.push((EventKind::Write, tok));
        }
    }
}

/// Simulates streaming translation of one sentence.
pub fn simulate_sentence(
    sid: &str,
    src: &TokenSeq,
    read: &PolicyConfig,
    write: &WritePolicyConfig,
    model: &dyn Translator,
) -> Result<DecodingTrace> {
    write.validate()?;
    if src.is_empty() {
        return Err(Error::Config(format!("sentence {sid}: empty source")));
    }
    if read.is_wait_k() && write.m > 0 {
        return Err(Error::Config("wait-k does not combine with future words".into()));
    }
    let total = src.len();
    let mut policy = read.start(sid)?;
    let mut s = Stream {
        src,
        events: Vec::with_capacity(total * 3),
        read: 0,
        committed: TokenSeq::empty(),
    };

    for t in 1..=total {
        s.read_to(t);
        let exhausted = t == total;
        if !policy.decide(&src.prefix(t), &s.committed, exhausted)?.is_segment() {
            continue;
        }
        if read.is_wait_k() {
            let cont = s.continuation(model, src.prefix(t), write.beam_size)?;
            if exhausted {
                s.write(cont);
            } else {
                s.write(cont.into_iter().take(1));
            }
            continue;
        }
        let extra = write.m.min(total - t);
        s.read_to(t + extra);
        let mut input = src.prefix(t);
        if extra > 0 {
            input.push(FW_TOKEN);
            input.extend_from(&src.slice(t, t + extra));
        }
        let cont = s.continuation(model, input, write.beam_size)?;
        s.write(cont);
    }
    Ok(DecodingTrace::from_events(sid, s.events))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub sid: String,
    pub status: Status,
    pub writes: usize,
    pub detail: String,
}

/// Simulates a corpus on `workers` threads. Failed sentences produce a
/// record but no trace; output order follows the corpus.
pub fn simulate_corpus(
    corpus: &[SentencePair],
    read: &PolicyConfig,
    write: &WritePolicyConfig,
    model: &dyn Translator,
    workers: usize,
) -> Result<(Vec<DecodingTrace>, Vec<SimulationRecord>)> {
    read.validate()?;
    write.validate()?;
    let results = ordered_map(workers, corpus, |pair| {
        simulate_sentence(&pair.sid, &pair.src, read, write, model)
    })?;
    let mut traces = Vec::new();
    let mut records = Vec::new();
    for (pair, result) in corpus.iter().zip(results) {
        match result {
            Ok(trace) => {
                let detail = if trace.hypothesis.is_empty() {
                    "incomplete: no target tokens written".to_owned()
                } else {
                    String::new()
                };
                records.push(SimulationRecord {
                    sid: pair.sid.clone(),
                    status: Status::Ok,
                    writes: trace.g.len(),
                    detail,
                });
                traces.push(trace);
            }
            Err(e) => {
                log::warn!("sentence {} failed: {e}", pair.sid);
                records.push(SimulationRecord {
                    sid: pair.sid.clone(),
                    status: Status::Error,
                    writes: 0,
                    detail: e.to_string(),
                });
            }
        }
    }
    Ok((traces, records))
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    k: EventKind,
    tok: String,
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    sid: String,
    events: Vec<EventLine>,
    g: Vec<usize>,
    hyp: TokenSeq,
}

pub fn write_traces(path: &Path, traces: &[DecodingTrace]) -> Result<()> {
    write_lines(
        path,
        traces.iter().map(|t| {
            let line = TraceLine {
                sid: t.sid.clone(),
                events: t
                    .events
                    .iter()
                    .map(|e| EventLine {
                        k: e.kind,
                        tok: e.token.clone(),
                    })
                    .collect(),
                g: t.g.clone(),
                hyp: t.hypothesis.clone(),
            };
            serde_json::to_string(&line).expect("traces serialize")
        }),
    )
}

/// Reads a trace file, checking that stored `g` and `hyp` agree with the
/// events.
pub fn read_traces(path: &Path) -> Result<Vec<DecodingTrace>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut traces = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceLine = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?;
        let trace = DecodingTrace::from_events(rec.sid, rec.events.into_iter().map(|e| (e.k, e.tok)));
        if trace.g != rec.g || trace.hypothesis != rec.hyp {
            return Err(Error::Shape(format!(
                "{}:{}: stored g/hyp disagree with events",
                path.display(),
                i + 1
            )));
        }
        traces.push(trace);
    }
    Ok(traces)
}

pub fn write_rendered(path: &Path, traces: &[DecodingTrace]) -> Result<()> {
    write_lines(path, traces.iter().map(|t| format!("{}\t{}", t.sid, render_trace(t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::sample_lexicon;
    use crate::corpus::{generate_toy_corpus, toy_translate, ToyLexicon};
    use crate::gateway::ToyModel;
    use crate::policy::BoundaryScript;
    use std::sync::Arc;

    fn scripted(sid: &str, b: &[usize]) -> PolicyConfig {
        let mut script = BoundaryScript::new();
        script.insert(sid, b.iter().copied());
        PolicyConfig::Scripted {
            script: Arc::new(script),
        }
    }

    fn ab_model() -> ToyModel {
        ToyModel::new(ToyLexicon::monotone([("a", "A"), ("b", "B")]), false).unwrap()
    }

    fn kinds(trace: &DecodingTrace) -> Vec<String> {
        trace
            .events
            .iter()
            .map(|e| match e.kind {
                EventKind::Read => format!("R:{}", e.token),
                EventKind::Write => format!("W:{}", e.token),
            })
            .collect()
    }

    #[test]
    fn scripted_segments() {
        let trace = simulate_sentence(
            "0",
            &"a b".into(),
            &scripted("0", &[1, 2]),
            &WritePolicyConfig::default(),
            &ab_model(),
        )
        .unwrap();
        assert_eq!(kinds(&trace), ["R:a", "W:A", "R:b", "W:B"]);
        assert_eq!(trace.g, [1, 2]);
    }

    #[test]
    fn look_ahead_reads_before_writing() {
        let write = WritePolicyConfig {
            m: 1,
            ..Default::default()
        };
        let trace = simulate_sentence("0", &"a b".into(), &scripted("0", &[1, 2]), &write, &ab_model()).unwrap();
        assert_eq!(kinds(&trace), ["R:a", "R:b", "W:A", "W:B"]);
        assert_eq!(trace.g, [2, 2]);
        trace.validate(2).unwrap();
    }

    #[test]
    fn wait_k_full_length_is_full_sentence() {
        let lex = sample_lexicon();
        let model = ToyModel::new(lex.clone(), false).unwrap();
        let src = TokenSeq::from("a s b d c");
        let trace = simulate_sentence(
            "0",
            &src,
            &PolicyConfig::WaitK { k: src.len() },
            &WritePolicyConfig::default(),
            &model,
        )
        .unwrap();
        let first_write = trace.events.iter().position(|e| e.kind == EventKind::Write).unwrap();
        assert_eq!(first_write, src.len());
        assert_eq!(trace.hypothesis, toy_translate(&lex, &src).unwrap());
    }

    #[test]
    fn wait_one_alternates() {
        let model = ToyModel::new(ToyLexicon::monotone([("a", "A"), ("b", "B"), ("c", "C")]), false).unwrap();
        let trace = simulate_sentence(
            "0",
            &"a b c".into(),
            &PolicyConfig::WaitK { k: 1 },
            &WritePolicyConfig::default(),
            &model,
        )
        .unwrap();
        assert_eq!(kinds(&trace), ["R:a", "W:A", "R:b", "W:B", "R:c", "W:C"]);
        assert_eq!(trace.g, [1, 2, 3]);
    }

    #[test]
    fn wait_k_flushes_fertile_tail() {
        let model = ToyModel::new(sample_lexicon(), false).unwrap();
        let trace = simulate_sentence(
            "0",
            &"d a".into(),
            &PolicyConfig::WaitK { k: 1 },
            &WritePolicyConfig::default(),
            &model,
        )
        .unwrap();
        assert_eq!(kinds(&trace), ["R:d", "W:d1", "R:a", "W:d2", "W:d3", "W:A"]);
        assert_eq!(trace.g, [1, 2, 2, 2]);
    }

    #[test]
    fn configuration_errors() {
        let write = WritePolicyConfig {
            kind: WriteKind::FullSentenceModel,
            m: 2,
            beam_size: 10,
        };
        assert!(write.validate().is_err());
        let write = WritePolicyConfig {
            m: 1,
            ..Default::default()
        };
        let err = simulate_sentence("0", &"a".into(), &PolicyConfig::WaitK { k: 1 }, &write, &ab_model());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn rendering() {
        use EventKind::*;
        let t = DecodingTrace::from_events(
            "0",
            [(Read, "x"), (Read, "y"), (Read, "z"), (Write, "the"), (Write, "roots")]
                .map(|(k, s)| (k, s.to_owned())),
        );
        assert_eq!(render_trace(&t), "WAIT*3 the roots");
        let t = DecodingTrace::from_events("0", [(Read, "x"), (Write, "A")].map(|(k, s)| (k, s.to_owned())));
        assert_eq!(render_trace(&t), "WAIT A");
        let t = DecodingTrace::from_events(
            "0",
            [(Read, "x"), (Write, "A"), (Read, "y"), (Read, "z")].map(|(k, s)| (k, s.to_owned())),
        );
        assert_eq!(render_trace(&t), "WAIT A WAIT*2");
    }

    #[test]
    fn zero_token_segments_are_no_ops() {
        // The marker cannot be translated alone once future words are known,
        // so the first segment writes nothing.
        let model = ToyModel::new(sample_lexicon(), false).unwrap();
        let write = WritePolicyConfig {
            m: 1,
            ..Default::default()
        };
        let trace = simulate_sentence("0", &"s b a".into(), &scripted("0", &[1, 3]), &write, &model).unwrap();
        assert_eq!(kinds(&trace), ["R:s", "R:b", "R:a", "W:B", "W:S", "W:A"]);
    }

    #[test]
    fn trace_file_round_trip_and_g_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let trace = simulate_sentence(
            "0",
            &"a b".into(),
            &scripted("0", &[1]),
            &WritePolicyConfig::default(),
            &ab_model(),
        )
        .unwrap();
        write_traces(&path, std::slice::from_ref(&trace)).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "{\"sid\":\"0\",\"events\":[{\"k\":\"R\",\"tok\":\"a\"},{\"k\":\"W\",\"tok\":\"A\"},\
             {\"k\":\"R\",\"tok\":\"b\"},{\"k\":\"W\",\"tok\":\"B\"}],\"g\":[1,2],\"hyp\":[\"A\",\"B\"]}\n"
        );
        assert_eq!(read_traces(&path).unwrap(), [trace]);
        fs::write(
            &path,
            "{\"sid\":\"0\",\"events\":[{\"k\":\"R\",\"tok\":\"a\"},{\"k\":\"W\",\"tok\":\"A\"}],\"g\":[0],\"hyp\":[\"A\"]}\n",
        )
        .unwrap();
        assert!(matches!(read_traces(&path), Err(Error::Shape(_))));
    }

    #[test]
    fn corpus_simulation_isolates_failures() {
        let model = ToyModel::new(sample_lexicon(), false).unwrap();
        let corpus = vec![
            SentencePair::new("0", "a b".into(), "A B".into()).unwrap(),
            SentencePair::new("1", "zz".into(), "ZZ".into()).unwrap(),
        ];
        let (traces, records) = simulate_corpus(
            &corpus,
            &PolicyConfig::WaitK { k: 1 },
            &WritePolicyConfig::default(),
            &model,
            2,
        )
        .unwrap();
        assert_eq!(traces.len(), 1);
        assert_eq!(records[1].status, Status::Error);
    }

    #[test]
    fn invariants_hold_on_random_corpus() {
        let lex = sample_lexicon();
        let model = ToyModel::new(lex.clone(), false).unwrap();
        let corpus = generate_toy_corpus(&lex, 60, 10, 11).unwrap();
        for policy in [
            PolicyConfig::WaitK { k: 2 },
            PolicyConfig::Heuristic { span: 3 },
        ] {
            for m in [0, 2] {
                if policy.is_wait_k() && m > 0 {
                    continue;
                }
                let write = WritePolicyConfig {
                    m,
                    ..Default::default()
                };
                for pair in &corpus {
                    let trace = simulate_sentence(&pair.sid, &pair.src, &policy, &write, &model).unwrap();
                    trace.validate(pair.src.len()).unwrap();
                    assert!(trace.g.windows(2).all(|w| w[0] <= w[1]));
                    assert!(trace.g.iter().all(|&g| g <= pair.src.len()));
                }
            }
        }
    }
}
