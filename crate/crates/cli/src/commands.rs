use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use simt::corpus::{generate_toy_corpus, read_parallel_corpus, write_parallel_corpus, SentencePair, ToyLexicon};
use simt::extract::{
    export_joint_corpus, extract_corpus, read_prefix_pairs, write_prefix_pairs, ExtractionConfig, Status,
};
use simt::gateway::{Gateway, ModelEndpoint, Translator, DEFAULT_BEAM, DEFAULT_TIMEOUT_MS};
use simt::metrics::{score_traces, sweep as sweep_runs, write_score_report, write_sweep_csv, BleuConfig, SweepRun};
use simt::policy::{BoundaryClassifier, BoundaryScript, PolicyConfig};
use simt::simulate::{
    read_traces, simulate_corpus, write_rendered, write_traces, DecodingTrace, SimulationRecord, WriteKind,
    WritePolicyConfig,
};
use simt::pool::default_workers;

use crate::config::{resolve, CliError, Manifest};
use crate::{with_suffix, EndpointArgs};

type CliResult = Result<(), CliError>;

fn default_beam() -> usize {
    DEFAULT_BEAM
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn default_m() -> usize {
    ExtractionConfig::default().m
}

fn default_max_source_len() -> usize {
    ExtractionConfig::default().max_source_len
}

fn default_max_len() -> usize {
    12
}

fn default_span() -> usize {
    8
}

fn default_write() -> WriteKind {
    WriteKind::PrefixModel
}

fn connect(endpoint: &str, timeout_ms: u64) -> Result<(ModelEndpoint, Arc<dyn Translator>), CliError> {
    let ep = ModelEndpoint::parse_with_timeout(endpoint, timeout_ms)?;
    let model = ep.connect()?;
    Ok((ep, model))
}

/// Fails with an endpoint error when every sentence failed: the endpoint is
/// unusable rather than individual sentences being bad.
fn check_total_failure(total: usize, failed: usize, first: Option<&str>) -> CliResult {
    if total > 0 && failed == total {
        return Err(CliError {
            code: 3,
            message: format!("all {total} sentences failed; first error: {}", first.unwrap_or("?")),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------- toy-corpus

#[derive(Args, Serialize)]
pub struct ToyCorpusArgs {
    /// Toy lexicon JSON.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Number of sentences.
    #[arg(long)]
    n: Option<usize>,
    /// Maximum source length in tokens.
    #[arg(long)]
    max_len: Option<usize>,
    /// Output prefix; writes <out>.src and <out>.tgt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ToyCorpusConfig {
    lexicon: PathBuf,
    n: usize,
    #[serde(default = "default_max_len")]
    max_len: usize,
    out: PathBuf,
    #[serde(default)]
    seed: u64,
}

pub fn toy_corpus(args: ToyCorpusArgs, cfg: Option<&Path>, seed: Option<u64>) -> CliResult {
    let c: ToyCorpusConfig = resolve(&args, cfg, seed)?;
    if c.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let mut manifest = Manifest::start("toy-corpus", &c, Some(c.seed));
    let lexicon = ToyLexicon::load(&c.lexicon)?;
    let corpus = generate_toy_corpus(&lexicon, c.n, c.max_len, c.seed)?;
    let (src, tgt) = (with_suffix(&c.out, ".src"), with_suffix(&c.out, ".tgt"));
    write_parallel_corpus(&corpus, &src, &tgt)?;
    manifest.input(&c.lexicon).output(&src).output(&tgt);
    manifest.finish(&c.out)?;
    println!("wrote {} sentences to {} and {}", corpus.len(), src.display(), tgt.display());
    Ok(())
}

// ------------------------------------------------------------------- extract

#[derive(Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    endpoint: EndpointArgs,
    /// Beam size for every translation request.
    #[arg(long)]
    beam: Option<usize>,
    /// Future source words attached to each pair.
    #[arg(long)]
    m: Option<usize>,
    /// Keep the last pair even when it equals the full translation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    include_full_pair: Option<bool>,
    /// Skip sentences longer than this.
    #[arg(long)]
    max_source_len: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Prefix-pair JSONL output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-sentence report; defaults to <out>.report.jsonl.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the extracted boundaries as a scripted-policy file.
    #[arg(long)]
    script_out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ExtractConfig {
    src: PathBuf,
    tgt: PathBuf,
    endpoint: String,
    #[serde(default = "default_timeout")]
    timeout_ms: u64,
    #[serde(default = "default_beam")]
    beam: usize,
    #[serde(default = "default_m")]
    m: usize,
    #[serde(default)]
    include_full_pair: bool,
    #[serde(default = "default_max_source_len")]
    max_source_len: usize,
    #[serde(default = "default_workers")]
    workers: usize,
    out: PathBuf,
    #[serde(default)]
    report: Option<PathBuf>,
    #[serde(default)]
    script_out: Option<PathBuf>,
}

pub fn extract(args: ExtractArgs, cfg: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut c: ExtractConfig = resolve(&args, cfg, seed)?;
    let report_path = c.report.get_or_insert_with(|| with_suffix(&c.out, ".report.jsonl")).clone();
    let ext = ExtractionConfig {
        beam_size: c.beam,
        m: c.m,
        include_full_pair: c.include_full_pair,
        max_source_len: c.max_source_len,
    };
    ext.validate()?;
    let mut manifest = Manifest::start("extract", &c, seed);
    let corpus = read_parallel_corpus(&c.src, &c.tgt)?;
    let (_, model) = connect(&c.endpoint, c.timeout_ms)?;
    let gateway = Gateway::new(model);
    let (pairs, report) = extract_corpus(&corpus, &gateway, &ext, c.workers)?;

    write_prefix_pairs(&c.out, &pairs)?;
    report.save(&report_path)?;
    manifest.input(&c.src).input(&c.tgt).output(&c.out).output(&report_path);
    if let Some(path) = &c.script_out {
        let mut script = BoundaryScript::new();
        for rec in report.records.iter().filter(|r| r.status == Status::Ok) {
            script.insert(rec.sid.clone(), std::iter::empty());
        }
        for p in &pairs {
            script.insert(p.sid.clone(), [p.t]);
        }
        script.save(path, corpus.iter().map(|p| p.sid.as_str()))?;
        manifest.output(path);
    }
    manifest.report(&report.summary).finish(&c.out)?;

    let s = &report.summary;
    println!(
        "sentences={} pairs={} failed={} skipped={} mean_pairs={:.4}",
        s.sentences, s.pairs, s.failed, s.skipped, s.mean_pairs
    );
    let first = report.records.iter().find(|r| r.status == Status::Error);
    check_total_failure(s.sentences, s.failed, first.map(|r| r.detail.as_str()))
}

// -------------------------------------------------------------------- export

#[derive(Args, Serialize)]
pub struct ExportArgs {
    /// Prefix-pair JSONL from `extract`.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Original corpus appended after the prefix pairs.
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    /// Output prefix; writes <out>.src and <out>.tgt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Drop repeated (source, target) rows.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dedupe: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct ExportConfig {
    pairs: PathBuf,
    src: PathBuf,
    tgt: PathBuf,
    out: PathBuf,
    #[serde(default)]
    dedupe: bool,
}

pub fn export(args: ExportArgs, cfg: Option<&Path>, seed: Option<u64>) -> CliResult {
    let c: ExportConfig = resolve(&args, cfg, seed)?;
    let mut manifest = Manifest::start("export", &c, seed);
    let pairs = read_prefix_pairs(&c.pairs)?;
    let corpus = read_parallel_corpus(&c.src, &c.tgt)?;
    let (src, tgt) = (with_suffix(&c.out, ".src"), with_suffix(&c.out, ".tgt"));
    let report = export_joint_corpus(&pairs, &corpus, &src, &tgt, c.dedupe)?;
    manifest
        .input(&c.pairs)
        .input(&c.src)
        .input(&c.tgt)
        .output(&src)
        .output(&tgt)
        .report(&report)
        .finish(&c.out)?;
    println!(
        "pseudo={} original={} duplicates_dropped={}",
        report.pseudo_lines, report.original_lines, report.duplicates_dropped
    );
    Ok(())
}

// ------------------------------------------------------------------ simulate

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ReadKind {
    WaitK,
    Threshold,
    Scripted,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum WriteArg {
    PrefixModel,
    FullSentenceModel,
}

impl From<WriteArg> for WriteKind {
    fn from(w: WriteArg) -> Self {
        match w {
            WriteArg::PrefixModel => WriteKind::PrefixModel,
            WriteArg::FullSentenceModel => WriteKind::FullSentenceModel,
        }
    }
}

/// Write-side options shared by `simulate` and `sweep`.
#[derive(Args, Serialize)]
pub struct WriteArgs {
    /// Which model writes: one trained on prefix pairs or on full sentences.
    #[arg(long, value_enum)]
    write: Option<WriteArg>,
    /// Look-ahead tokens read after each segment decision.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Classifier endpoint for threshold policies; defaults to --endpoint.
    #[arg(long)]
    classifier: Option<String>,
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    endpoint: EndpointArgs,
    /// Read policy.
    #[arg(long, value_enum)]
    read: Option<ReadKind>,
    /// Wait-k lag.
    #[arg(long)]
    k: Option<usize>,
    /// Threshold on the boundary probability.
    #[arg(long)]
    delta: Option<f64>,
    /// Scripted boundaries (JSONL of {"sid", "boundaries"}).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Longest unit the heuristic policy accumulates.
    #[arg(long)]
    span: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    write: WriteArgs,
    /// Trace JSONL output.
    #[arg(long)]
    out_traces: Option<PathBuf>,
    /// Also write WAIT-notation renderings here.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Per-sentence report; defaults to <out-traces>.report.jsonl.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct WriteConfig {
    #[serde(default = "default_write")]
    write: WriteKind,
    #[serde(default)]
    m: usize,
    #[serde(default = "default_beam")]
    beam: usize,
    #[serde(default = "default_workers")]
    workers: usize,
    #[serde(default)]
    classifier: Option<String>,
}

impl WriteConfig {
    fn policy(&self) -> WritePolicyConfig {
        WritePolicyConfig {
            kind: self.write,
            m: self.m,
            beam_size: self.beam,
        }
    }

    fn classifier(&self, endpoint: &str, timeout_ms: u64) -> Result<Arc<dyn BoundaryClassifier>, CliError> {
        let spec = self.classifier.as_deref().unwrap_or(endpoint);
        Ok(ModelEndpoint::parse_with_timeout(spec, timeout_ms)?.connect_classifier()?)
    }
}

#[derive(Serialize, Deserialize)]
struct SimulateConfig {
    src: PathBuf,
    tgt: PathBuf,
    endpoint: String,
    #[serde(default = "default_timeout")]
    timeout_ms: u64,
    read: ReadKind,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    script: Option<PathBuf>,
    #[serde(default = "default_span")]
    span: usize,
    #[serde(flatten)]
    write: WriteConfig,
    out_traces: PathBuf,
    #[serde(default)]
    render: Option<PathBuf>,
    #[serde(default)]
    report: Option<PathBuf>,
}

fn need<T: Copy>(value: Option<T>, flag: &str, read: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("--read {read} needs {flag}")))
}

fn write_records(path: &Path, records: &[SimulationRecord]) -> CliResult {
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect();
    std::fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn summarize(records: &[SimulationRecord]) -> (usize, usize, Option<&str>) {
    let failed: Vec<_> = records.iter().filter(|r| r.status == Status::Error).collect();
    let incomplete = records.iter().filter(|r| r.detail.starts_with("incomplete")).count();
    (failed.len(), incomplete, failed.first().map(|r| r.detail.as_str()))
}

pub fn simulate(args: SimulateArgs, cfg: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut c: SimulateConfig = resolve(&args, cfg, seed)?;
    let report_path = c
        .report
        .get_or_insert_with(|| with_suffix(&c.out_traces, ".report.jsonl"))
        .clone();
    let mut manifest = Manifest::start("simulate", &c, seed);
    let read = match c.read {
        ReadKind::WaitK => PolicyConfig::WaitK {
            k: need(c.k, "--k", "wait_k")?,
        },
        ReadKind::Threshold => PolicyConfig::Threshold {
            delta: need(c.delta, "--delta", "threshold")?,
            classifier: c.write.classifier(&c.endpoint, c.timeout_ms)?,
        },
        ReadKind::Scripted => {
            let path = c
                .script
                .as_ref()
                .ok_or_else(|| CliError::usage("--read scripted needs --script"))?;
            manifest.input(path);
            PolicyConfig::Scripted {
                script: Arc::new(BoundaryScript::load(path)?),
            }
        }
        ReadKind::Heuristic => PolicyConfig::Heuristic { span: c.span },
    };
    read.validate()?;
    let write = c.write.policy();
    write.validate()?;
    if read.is_wait_k() && write.m > 0 {
        return Err(CliError::usage("--read wait_k does not combine with --m > 0"));
    }

    let corpus = read_parallel_corpus(&c.src, &c.tgt)?;
    let (_, model) = connect(&c.endpoint, c.timeout_ms)?;
    let (traces, records) = simulate_corpus(&corpus, &read, &write, model.as_ref(), c.write.workers)?;

    write_traces(&c.out_traces, &traces)?;
    write_records(&report_path, &records)?;
    manifest.input(&c.src).input(&c.tgt).output(&c.out_traces).output(&report_path);
    if let Some(path) = &c.render {
        write_rendered(path, &traces)?;
        manifest.output(path);
    }
    let (failed, incomplete, first) = summarize(&records);
    manifest
        .report(&serde_json::json!({
            "sentences": records.len(),
            "failed": failed,
            "incomplete": incomplete,
        }))
        .finish(&c.out_traces)?;
    println!(
        "sentences={} traces={} failed={} incomplete={}",
        records.len(),
        traces.len(),
        failed,
        incomplete
    );
    check_total_failure(records.len(), failed, first)
}

// --------------------------------------------------------------------- score

#[derive(Args, Serialize)]
pub struct ScoreArgs {
    /// Trace JSONL from `simulate`.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Reference corpus.
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    /// Score report; defaults to <traces>.scores.jsonl.
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Also write a one-row quality/latency CSV.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    param_name: Option<String>,
    #[arg(long)]
    param_value: Option<f64>,
    /// Split punctuation from words before counting n-grams.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    split_punctuation: Option<bool>,
}

fn default_param_name() -> String {
    "run".into()
}

#[derive(Serialize, Deserialize)]
struct ScoreConfig {
    traces: PathBuf,
    src: PathBuf,
    tgt: PathBuf,
    #[serde(default)]
    out_report: Option<PathBuf>,
    #[serde(default)]
    out_csv: Option<PathBuf>,
    #[serde(default = "default_param_name")]
    param_name: String,
    #[serde(default)]
    param_value: f64,
    #[serde(default)]
    split_punctuation: bool,
}

pub fn score(args: ScoreArgs, cfg: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut c: ScoreConfig = resolve(&args, cfg, seed)?;
    let report_path = c
        .out_report
        .get_or_insert_with(|| with_suffix(&c.traces, ".scores.jsonl"))
        .clone();
    let mut manifest = Manifest::start("score", &c, seed);
    let bleu_cfg = BleuConfig {
        split_punctuation: c.split_punctuation,
        ..BleuConfig::default()
    };
    let traces = read_traces(&c.traces)?;
    let corpus = read_parallel_corpus(&c.src, &c.tgt)?;
    let scores = score_traces(&traces, &corpus, &bleu_cfg)?;
    write_score_report(&report_path, &scores)?;
    manifest.input(&c.traces).input(&c.src).input(&c.tgt).output(&report_path);
    if let Some(csv) = &c.out_csv {
        let run = SweepRun {
            param_value: c.param_value,
            traces: &traces,
            references: &corpus,
        };
        write_sweep_csv(csv, &sweep_runs(&c.param_name, &[run], &bleu_cfg)?)?;
        manifest.output(csv);
    }
    manifest
        .report(&serde_json::json!({"bleu": scores.bleu.score, "mean_al": scores.mean_al}))
        .finish(&report_path)?;
    println!(
        "bleu={:.4} mean_al={:.4} n_sentences={}",
        scores.bleu.score,
        scores.mean_al,
        scores.per_sentence.len()
    );
    Ok(())
}

// --------------------------------------------------------------------- sweep

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    WaitK,
    Threshold,
}

#[derive(Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    endpoint: EndpointArgs,
    /// Policy family: k values for wait_k, delta values for threshold.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Comma-separated parameter values, e.g. "1,3,5,7".
    #[arg(long)]
    values: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    write: WriteArgs,
    /// Quality/latency CSV output.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Also keep each run's traces here.
    #[arg(long)]
    traces_dir: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    split_punctuation: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct SweepConfig {
    src: PathBuf,
    tgt: PathBuf,
    endpoint: String,
    #[serde(default = "default_timeout")]
    timeout_ms: u64,
    family: Family,
    values: String,
    #[serde(flatten)]
    write: WriteConfig,
    out_csv: PathBuf,
    #[serde(default)]
    traces_dir: Option<PathBuf>,
    #[serde(default)]
    split_punctuation: bool,
}

fn parse_values(values: &str) -> Result<Vec<f64>, CliError> {
    let parsed: Result<Vec<f64>, _> = values.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match parsed {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::usage(format!("--values {values:?} is not a comma-separated number list"))),
    }
}

pub fn sweep(args: SweepArgs, cfg: Option<&Path>, seed: Option<u64>) -> CliResult {
    let c: SweepConfig = resolve(&args, cfg, seed)?;
    let mut manifest = Manifest::start("sweep", &c, seed);
    let values = parse_values(&c.values)?;
    let write = c.write.policy();
    write.validate()?;

    let classifier = match c.family {
        Family::Threshold => Some(c.write.classifier(&c.endpoint, c.timeout_ms)?),
        Family::WaitK => None,
    };
    let mut policies = Vec::with_capacity(values.len());
    for &v in &values {
        let policy = match &classifier {
            None => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(CliError::usage(format!("wait-k value {v} is not a positive integer")));
                }
                PolicyConfig::WaitK { k: v as usize }
            }
            Some(cl) => PolicyConfig::Threshold {
                delta: v,
                classifier: Arc::clone(cl),
            },
        };
        policy.validate()?;
        if policy.is_wait_k() && write.m > 0 {
            return Err(CliError::usage("wait_k sweeps do not combine with --m > 0"));
        }
        policies.push(policy);
    }

    let corpus = read_parallel_corpus(&c.src, &c.tgt)?;
    let (_, model) = connect(&c.endpoint, c.timeout_ms)?;
    if let Some(dir) = &c.traces_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    }
    let param_name = match c.family {
        Family::WaitK => "k",
        Family::Threshold => "delta",
    };

    let mut all_traces: Vec<Vec<DecodingTrace>> = Vec::with_capacity(values.len());
    let mut references: Vec<Vec<SentencePair>> = Vec::with_capacity(values.len());
    for (v, policy) in values.iter().zip(&policies) {
        let (traces, records) = simulate_corpus(&corpus, policy, &write, model.as_ref(), c.write.workers)?;
        let (failed, _, first) = summarize(&records);
        check_total_failure(records.len(), failed, first)?;
        if failed > 0 {
            log::warn!("{param_name}={v}: {failed} sentences failed and are left out of the scores");
        }
        if let Some(dir) = &c.traces_dir {
            let path = dir.join(format!("{param_name}_{v}.traces.jsonl"));
            write_traces(&path, &traces)?;
            manifest.output(&path);
        }
        let ok: std::collections::HashSet<&str> = traces.iter().map(|t| t.sid.as_str()).collect();
        references.push(corpus.iter().filter(|p| ok.contains(p.sid.as_str())).cloned().collect());
        all_traces.push(traces);
    }
    let runs: Vec<SweepRun<'_>> = values
        .iter()
        .zip(all_traces.iter().zip(&references))
        .map(|(&param_value, (traces, refs))| SweepRun {
            param_value,
            traces,
            references: refs,
        })
        .collect();
    let bleu_cfg = BleuConfig {
        split_punctuation: c.split_punctuation,
        ..BleuConfig::default()
    };
    let rows = sweep_runs(param_name, &runs, &bleu_cfg)?;
    write_sweep_csv(&c.out_csv, &rows)?;
    manifest
        .input(&c.src)
        .input(&c.tgt)
        .output(&c.out_csv)
        .report(&rows)
        .finish(&c.out_csv)?;
    for r in &rows {
        println!(
            "{}={} bleu={:.4} mean_al={:.4} n_sentences={}",
            r.param_name, r.param_value, r.bleu, r.mean_al, r.n_sentences
        );
    }
    Ok(())
}
