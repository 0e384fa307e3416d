//! Tokenized sentences, parallel corpora and the synthetic toy language pair.
//!
//! The toy language is a dictionary translation with two twists that make
//! prefix translation non-trivial:
//!
//! * fertility: a source token may expand to several target tokens;
//! * swap markers: a marker token `s` followed by `x` is rendered as
//!   `entry(x) ++ entry(s)`, so a prefix ending in `s` cannot be translated
//!   monotonically. Such a dangling marker renders as [`PEND_TOKEN`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator between a source prefix and its future words.
pub const FW_TOKEN: &str = "[fw]";

/// Placeholder emitted by the toy translator for a dangling swap marker.
pub const PEND_TOKEN: &str = "‹pend›";

/// An ordered sequence of whitespace-free, non-empty tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence, rejecting empty tokens and tokens with whitespace.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let seq = TokenSeq(tokens.into_iter().map(Into::into).collect());
        seq.validate()?;
        Ok(seq)
    }

    /// Splits a line on whitespace. Always yields a valid sequence.
    pub fn parse(line: &str) -> Self {
        TokenSeq(line.split_whitespace().map(str::to_owned).collect())
    }

    pub fn empty() -> Self {
        TokenSeq(Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        for tok in &self.0 {
            if tok.is_empty() {
                return Err(Error::InvalidTokens("empty token".into()));
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(Error::InvalidTokens(format!(
                    "token {tok:?} contains whitespace"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.iter().any(|t| t == token)
    }

    /// The first `len` tokens (clamped to the sequence length).
    pub fn prefix(&self, len: usize) -> TokenSeq {
        TokenSeq(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Tokens in the half-open range `start..end`, clamped.
    pub fn slice(&self, start: usize, end: usize) -> TokenSeq {
        let end = end.min(self.0.len());
        let start = start.min(end);
        TokenSeq(self.0[start..end].to_vec())
    }

    /// Non-strict token-level prefix test.
    pub fn starts_with(&self, prefix: &TokenSeq) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn push(&mut self, token: impl Into<String>) {
        self.0.push(token.into());
    }

    pub fn extend_from(&mut self, other: &TokenSeq) {
        self.0.extend(other.0.iter().cloned());
    }

    /// `self ++ other`.
    pub fn concat(&self, other: &TokenSeq) -> TokenSeq {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

impl From<&str> for TokenSeq {
    fn from(line: &str) -> Self {
        TokenSeq::parse(line)
    }
}

impl std::ops::Index<usize> for TokenSeq {
    type Output = String;

    fn index(&self, index: usize) -> &String {
        &self.0[index]
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One line of a parallel corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub sid: String,
    pub src: TokenSeq,
    pub tgt: TokenSeq,
}

impl SentencePair {
    pub fn new(sid: impl Into<String>, src: TokenSeq, tgt: TokenSeq) -> Result<Self> {
        let pair = SentencePair {
            sid: sid.into(),
            src,
            tgt,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        for (side, seq) in [("source", &self.src), ("target", &self.tgt)] {
            if seq.is_empty() {
                return Err(Error::InvalidTokens(format!(
                    "sentence {}: empty {side}",
                    self.sid
                )));
            }
            seq.validate()?;
            if seq.contains(FW_TOKEN) {
                return Err(Error::InvalidTokens(format!(
                    "sentence {}: reserved token {FW_TOKEN} in {side}",
                    self.sid
                )));
            }
        }
        Ok(())
    }
}

/// Checks that sids are unique within a corpus.
pub fn check_unique_sids(corpus: &[SentencePair]) -> Result<()> {
    let mut seen = HashSet::new();
    for pair in corpus {
        if !seen.insert(pair.sid.as_str()) {
            return Err(Error::InvalidTokens(format!("duplicate sid {:?}", pair.sid)));
        }
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

/// Reads a pair of line-aligned, whitespace-tokenized files.
///
/// Sentence ids are the zero-based line indices.
pub fn read_parallel_corpus(src_path: &Path, tgt_path: &Path) -> Result<Vec<SentencePair>> {
    let src_lines = read_lines(src_path)?;
    let tgt_lines = read_lines(tgt_path)?;
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::CorpusShape {
            src_lines: src_lines.len(),
            tgt_lines: tgt_lines.len(),
        });
    }
    let mut corpus = Vec::with_capacity(src_lines.len());
    for (i, (s, t)) in src_lines.iter().zip(&tgt_lines).enumerate() {
        let malformed = |path: &Path, reason: String| Error::MalformedSentence {
            path: path.display().to_string(),
            line: i + 1,
            reason,
        };
        let src = TokenSeq::parse(s);
        let tgt = TokenSeq::parse(t);
        if src.is_empty() {
            return Err(malformed(src_path, "empty line".into()));
        }
        if tgt.is_empty() {
            return Err(malformed(tgt_path, "empty line".into()));
        }
        if src.contains(FW_TOKEN) {
            return Err(malformed(src_path, format!("reserved token {FW_TOKEN}")));
        }
        if tgt.contains(FW_TOKEN) {
            return Err(malformed(tgt_path, format!("reserved token {FW_TOKEN}")));
        }
        corpus.push(SentencePair {
            sid: i.to_string(),
            src,
            tgt,
        });
    }
    Ok(corpus)
}

/// Writes `lines` to `path`, one per line.
pub(crate) fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in lines {
        writeln!(out, "{}", line.as_ref()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_parallel_corpus(corpus: &[SentencePair], src_path: &Path, tgt_path: &Path) -> Result<()> {
    write_lines(src_path, corpus.iter().map(|p| p.src.join()))?;
    write_lines(tgt_path, corpus.iter().map(|p| p.tgt.join()))
}

/// Dictionary for the toy language pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyLexicon {
    pub entries: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub swap_markers: BTreeSet<String>,
    #[serde(default)]
    pub synonym_slots: BTreeMap<String, String>,
}

impl ToyLexicon {
    /// A lexicon with fertility-1 entries and no markers.
    pub fn monotone<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let entries = pairs
            .into_iter()
            .map(|(s, t)| (s.to_owned(), vec![t.to_owned()]))
            .collect();
        ToyLexicon {
            entries,
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lexicon: ToyLexicon = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            line: source.line(),
            source,
        })?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Config("toy lexicon has no entries".into()));
        }
        for (src, tgt) in &self.entries {
            let ok_token = |t: &str| !t.is_empty() && !t.chars().any(char::is_whitespace);
            if !ok_token(src) || src == FW_TOKEN {
                return Err(Error::Config(format!("invalid lexicon source token {src:?}")));
            }
            if tgt.is_empty() {
                return Err(Error::Config(format!("entry {src:?} has fertility 0")));
            }
            if let Some(bad) = tgt.iter().find(|t| !ok_token(t) || *t == FW_TOKEN) {
                return Err(Error::Config(format!(
                    "entry {src:?} has invalid target token {bad:?}"
                )));
            }
        }
        if let Some(m) = self.swap_markers.iter().find(|m| !self.entries.contains_key(*m)) {
            return Err(Error::Config(format!("swap marker {m:?} has no entry")));
        }
        if let Some(s) = self.synonym_slots.keys().find(|s| !self.entries.contains_key(*s)) {
            return Err(Error::Config(format!("synonym slot {s:?} has no entry")));
        }
        Ok(())
    }

    pub fn is_marker(&self, token: &str) -> bool {
        self.swap_markers.contains(token)
    }

    fn entry(&self, token: &str) -> Result<&[String]> {
        self.entries
            .get(token)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::OutOfVocabulary(token.to_owned()))
    }
}

/// One left-to-right step of toy translation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyUnit {
    /// Index of the first source token of the unit.
    pub start: usize,
    /// Source tokens consumed: 1, or 2 for a swap pair. A dangling marker
    /// consumes 1 and outputs [`PEND_TOKEN`].
    pub consumed: usize,
    pub output: Vec<String>,
    pub dangling: bool,
}

/// Parses `src` into toy translation units.
pub fn toy_units(lexicon: &ToyLexicon, src: &[String]) -> Result<Vec<ToyUnit>> {
    let mut units = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let tok = &src[i];
        let entry = lexicon.entry(tok)?;
        if lexicon.is_marker(tok) {
            if let Some(next) = src.get(i + 1) {
                let mut output = lexicon.entry(next)?.to_vec();
                output.extend_from_slice(entry);
                units.push(ToyUnit {
                    start: i,
                    consumed: 2,
                    output,
                    dangling: false,
                });
                i += 2;
            } else {
                units.push(ToyUnit {
                    start: i,
                    consumed: 1,
                    output: vec![PEND_TOKEN.to_owned()],
                    dangling: true,
                });
                i += 1;
            }
        } else {
            units.push(ToyUnit {
                start: i,
                consumed: 1,
                output: entry.to_vec(),
                dangling: false,
            });
            i += 1;
        }
    }
    Ok(units)
}

/// Reference translation of the toy language.
pub fn toy_translate(lexicon: &ToyLexicon, src: &TokenSeq) -> Result<TokenSeq> {
    let units = toy_units(lexicon, src.tokens())?;
    Ok(TokenSeq(units.into_iter().flat_map(|u| u.output).collect()))
}

/// Generates a deterministic random corpus over the lexicon.
///
/// Sources never end with a swap marker and a marker is always followed by a
/// non-marker, so every source is fully translatable.
pub fn generate_toy_corpus(
    lexicon: &ToyLexicon,
    n_sentences: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<SentencePair>> {
    lexicon.validate()?;
    if max_len == 0 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let vocab: Vec<&String> = lexicon.entries.keys().collect();
    let plain: Vec<&String> = vocab.iter().copied().filter(|t| !lexicon.is_marker(t)).collect();
    if plain.is_empty() {
        return Err(Error::Config("toy lexicon consists only of swap markers".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(n_sentences);
    for sid in 0..n_sentences {
        let len = rng.random_range(1..=max_len);
        let mut src = TokenSeq::empty();
        let mut after_marker = false;
        for pos in 0..len {
            let pool = if after_marker || pos + 1 == len { &plain } else { &vocab };
            let tok = pool[rng.random_range(0..pool.len())];
            after_marker = lexicon.is_marker(tok);
            src.push(tok.clone());
        }
        let tgt = toy_translate(lexicon, &src)?;
        corpus.push(SentencePair {
            sid: sid.to_string(),
            src,
            tgt,
        });
    }
    Ok(corpus)
}
