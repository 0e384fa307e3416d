mod common;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use common::*;
use simt::corpus::{read_parallel_corpus, toy_translate, ToyLexicon};
use simt::extract::{read_prefix_pairs, PrefixPair};
use simt::simulate::{read_traces, render_trace, write_traces, DecodingTrace, EventKind};

fn extract_args<'a>(endpoint: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["extract", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", endpoint, "--out", out];
    args.extend_from_slice(extra);
    args
}

fn pairs(dir: &Path, name: &str) -> Vec<PrefixPair> {
    read_prefix_pairs(&dir.join(name)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn exit_code(dir: &Path, args: &[&str]) -> Option<i32> {
    simt(dir, args).status.code()
}

#[test]
fn toy_corpus_is_reproducible_and_translatable() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 10, 9, 1, "a");
    toy_corpus(dir.path(), "lexicon.json", 10, 9, 1, "b");
    assert_eq!(read(dir.path(), "a.src"), read(dir.path(), "b.src"));
    assert_eq!(read(dir.path(), "a.tgt"), read(dir.path(), "b.tgt"));

    let lex = ToyLexicon::load(&data("lexicon.json")).unwrap();
    let corpus = read_parallel_corpus(&dir.path().join("a.src"), &dir.path().join("a.tgt")).unwrap();
    for pair in &corpus {
        assert!(pair.src.len() <= 9);
        assert!(!lex.is_marker(pair.src.tokens().last().unwrap()));
        assert_eq!(toy_translate(&lex, &pair.src).unwrap(), pair.tgt);
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "a.manifest.json")).unwrap();
    assert_eq!(manifest["command"], "toy-corpus");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config"]["max_len"], 9);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let lex = data("lexicon.json");
    let lex = lex.to_str().unwrap();
    assert_eq!(exit_code(dir.path(), &["toy-corpus", "--lexicon", lex, "--n", "0", "--out", "x"]), Some(2));
    assert_eq!(exit_code(dir.path(), &["toy-corpus", "--lexicon", "missing.json", "--n", "3", "--out", "x"]), Some(2));
    assert_eq!(exit_code(dir.path(), &["toy-corpus", "--n", "3", "--out", "x"]), Some(2));
    assert_eq!(exit_code(dir.path(), &["frobnicate"]), Some(2));

    toy_corpus(dir.path(), "lexicon.json", 3, 5, 0, "c");
    assert_eq!(exit_code(dir.path(), &extract_args("nope:thing", "p.jsonl", &[])), Some(2));
    assert_eq!(exit_code(dir.path(), &extract_args("toy:missing.json", "p.jsonl", &[])), Some(2));
    let ep = toy_endpoint("lexicon.json");
    assert_eq!(exit_code(dir.path(), &extract_args(&ep, "p.jsonl", &["--beam", "0"])), Some(2));
    let sim = ["simulate", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", &ep, "--out-traces", "t.jsonl"];
    assert_eq!(exit_code(dir.path(), &[&sim[..], &["--read", "wait_k"]].concat()), Some(2));
    assert_eq!(exit_code(dir.path(), &[&sim[..], &["--read", "wait_k", "--k", "2", "--m", "2"]].concat()), Some(2));
    assert_eq!(exit_code(dir.path(), &[&sim[..], &["--read", "threshold", "--delta", "0.5"]].concat()), Some(2));
}

#[test]
fn future_words_change_only_the_source_side() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 40, 10, 5, "c");
    let ep = toy_endpoint("lexicon.json");
    simt_ok(dir.path(), &extract_args(&ep, "m0.jsonl", &["--m", "0"]));
    simt_ok(dir.path(), &extract_args(&ep, "m2.jsonl", &["--m", "2"]));
    let key = |p: &PrefixPair| (p.sid.clone(), p.t, p.src_prefix.clone(), p.tgt_prefix.clone());
    let (m0, m2) = (pairs(dir.path(), "m0.jsonl"), pairs(dir.path(), "m2.jsonl"));
    assert!(!m0.is_empty());
    assert_eq!(m0.iter().map(key).collect::<Vec<_>>(), m2.iter().map(key).collect::<Vec<_>>());
    assert!(m0.iter().all(|p| p.fw.is_empty()));
    assert!(m2.iter().any(|p| p.fw.len() == 2));
}

#[test]
fn narrow_beam_extracts_a_subset() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 60, 10, 6, "c");
    let ep = format!("{}:variants", toy_endpoint("lexicon.json"));
    simt_ok(dir.path(), &extract_args(&ep, "b1.jsonl", &["--beam", "1"]));
    simt_ok(dir.path(), &extract_args(&ep, "b10.jsonl", &["--beam", "10"]));
    let wide: HashSet<PrefixPair> = pairs(dir.path(), "b10.jsonl").into_iter().collect();
    let narrow = pairs(dir.path(), "b1.jsonl");
    assert!(narrow.iter().all(|p| wide.contains(p)));
}

#[test]
fn wait_one_on_monotone_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "monotone.json", 20, 8, 2, "c");
    let ep = toy_endpoint("monotone.json");
    simt_ok(
        dir.path(),
        &[
            "simulate", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", &ep, "--read", "wait_k", "--k", "1",
            "--out-traces", "t.jsonl", "--render", "r.txt",
        ],
    );
    let traces = read_traces(&dir.path().join("t.jsonl")).unwrap();
    assert_eq!(traces.len(), 20);
    for t in &traces {
        let n = t.reads();
        assert_eq!(t.g, (1..=n).collect::<Vec<_>>());
    }

    let rendered = read(dir.path(), "r.txt");
    assert!(!rendered.contains("WAIT*"));
    for (line, trace) in rendered.lines().zip(&traces) {
        let (sid, text) = line.split_once('\t').unwrap();
        assert_eq!(sid, trace.sid);
        assert_eq!(text, render_trace(trace));
        let waits: usize = text
            .split(' ')
            .filter_map(|w| match w {
                "WAIT" => Some(1),
                _ => w.strip_prefix("WAIT*").map(|n| n.parse::<usize>().unwrap()),
            })
            .sum();
        assert_eq!(waits, trace.reads());
    }

    let out = simt_ok(dir.path(), &["score", "--traces", "t.jsonl", "--src", "c.src", "--tgt", "c.tgt"]);
    assert!(out.contains("mean_al=1.0000"), "{out}");
    assert!(out.contains("bleu=100.0000"), "{out}");

    simt_ok(
        dir.path(),
        &[
            "simulate", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", &ep, "--read", "wait_k", "--k", "3",
            "--out-traces", "t3.jsonl", "--render", "r3.txt",
        ],
    );
    let traces = read_traces(&dir.path().join("t3.jsonl")).unwrap();
    let rendered = read(dir.path(), "r3.txt");
    for (line, trace) in rendered.lines().zip(&traces) {
        let first = line.split('\t').nth(1).unwrap().split(' ').next().unwrap();
        let expected = match trace.reads() {
            1 => "WAIT".to_owned(),
            n => format!("WAIT*{}", n.min(3)),
        };
        assert_eq!(first, expected);
    }
}

#[test]
fn scripted_replay_of_extracted_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 30, 10, 8, "c");
    let ep = toy_endpoint("lexicon.json");
    simt_ok(
        dir.path(),
        &extract_args(&ep, "p.jsonl", &["--m", "0", "--include-full-pair", "--script-out", "b.jsonl"]),
    );
    simt_ok(
        dir.path(),
        &[
            "simulate", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", &ep, "--read", "scripted", "--script",
            "b.jsonl", "--out-traces", "t.jsonl",
        ],
    );
    let mut last: BTreeMap<String, PrefixPair> = BTreeMap::new();
    for p in pairs(dir.path(), "p.jsonl") {
        last.insert(p.sid.clone(), p);
    }
    let traces = read_traces(&dir.path().join("t.jsonl")).unwrap();
    assert_eq!(traces.len(), 30);
    for t in &traces {
        assert_eq!(t.hypothesis, last[&t.sid].tgt_prefix, "sentence {}", t.sid);
    }
}

#[test]
fn score_identity_and_alignment() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 12, 8, 4, "c");
    let corpus = read_parallel_corpus(&dir.path().join("c.src"), &dir.path().join("c.tgt")).unwrap();
    let traces: Vec<DecodingTrace> = corpus
        .iter()
        .map(|p| {
            let reads = p.src.iter().map(|t| (EventKind::Read, t.clone()));
            let writes = p.tgt.iter().map(|t| (EventKind::Write, t.clone()));
            DecodingTrace::from_events(p.sid.clone(), reads.chain(writes))
        })
        .collect();
    write_traces(&dir.path().join("t.jsonl"), &traces).unwrap();
    let out = simt_ok(
        dir.path(),
        &["score", "--traces", "t.jsonl", "--src", "c.src", "--tgt", "c.tgt", "--out-csv", "s.csv"],
    );
    assert!(out.contains("bleu=100.0000"), "{out}");
    let rows = csv_rows(&read(dir.path(), "s.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "100.0000");
    let report = read(dir.path(), "t.jsonl.scores.jsonl");
    assert_eq!(report.lines().count(), 13);

    write_traces(&dir.path().join("short.jsonl"), &traces[1..]).unwrap();
    let out = simt(dir.path(), &["score", "--traces", "short.jsonl", "--src", "c.src", "--tgt", "c.tgt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('0'));
}

#[test]
fn wait_k_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 30, 7, 9, "c");
    let ep = toy_endpoint("lexicon.json");
    let base = ["sweep", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", &ep, "--family", "wait_k"];
    simt_ok(dir.path(), &[&base[..], &["--values", "1,3,5,7", "--out-csv", "s.csv", "--traces-dir", "tr"]].concat());
    let text = read(dir.path(), "s.csv");
    assert!(text.starts_with("param_name,param_value,bleu,mean_al,n_sentences\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let al: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(al.windows(2).all(|w| w[0] < w[1]), "{al:?}");
    assert_eq!(rows[3][2], "100.0000");
    assert!(dir.path().join("tr/k_7.traces.jsonl").exists());

    simt_ok(dir.path(), &[&base[..], &["--values", "3", "--out-csv", "one.csv"]].concat());
    assert_eq!(csv_rows(&read(dir.path(), "one.csv")).len(), 1);
    assert_eq!(exit_code(dir.path(), &[&base[..], &["--values", "1,x", "--out-csv", "bad.csv"]].concat()), Some(2));
    assert_eq!(exit_code(dir.path(), &[&base[..], &["--values", "0.5", "--out-csv", "bad.csv"]].concat()), Some(2));
}

#[test]
fn threshold_sweep_with_scripted_classifier() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.src"), "牛顿 发现 了 牛顿 运动定律\n").unwrap();
    std::fs::write(dir.path().join("c.tgt"), "Newton discovered newton's laws of motion\n").unwrap();
    let ep = format!("exec:{STUB} --script {}", data("newton_script.json").display());
    simt_ok(
        dir.path(),
        &[
            "sweep", "--src", "c.src", "--tgt", "c.tgt", "--endpoint", &ep, "--family", "threshold", "--values",
            "0.95,0.8,0.5,0.25", "--m", "0", "--out-csv", "s.csv", "--traces-dir", "tr",
        ],
    );
    let rows = csv_rows(&read(dir.path(), "s.csv"));
    let deltas: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(deltas, ["0.2500", "0.5000", "0.8000", "0.9500"]);
    let al: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(al.windows(2).all(|w| w[0] <= w[1]), "AL must not drop as delta grows: {al:?}");

    // delta 0.5 segments after 1 and 3 tokens: the two basic prefix pairs.
    let traces = read_traces(&dir.path().join("tr/delta_0.5.traces.jsonl")).unwrap();
    assert_eq!(
        render_trace(&traces[0]),
        "WAIT Newton WAIT*2 discovered WAIT*2 newton's laws of motion"
    );
}

#[test]
fn exec_endpoint_matches_in_process_toy() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 25, 10, 11, "c");
    let lex = data("lexicon.json");
    let exec = format!("exec:{STUB} --toy {} --variants", lex.display());
    let toy = format!("{}:variants", toy_endpoint("lexicon.json"));
    simt_ok(dir.path(), &extract_args(&exec, "ext.jsonl", &["--workers", "4"]));
    simt_ok(dir.path(), &extract_args(&toy, "toy.jsonl", &["--workers", "1"]));
    assert_eq!(read(dir.path(), "ext.jsonl"), read(dir.path(), "toy.jsonl"));
}

#[test]
fn endpoint_errors_are_isolated_per_sentence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.src"), "ka ki\nku sa\nke ko\nsa ka\n").unwrap();
    std::fs::write(dir.path().join("c.tgt"), "A B\nC L\nD E\nL A\n").unwrap();
    let lex = data("lexicon.json");
    let failing = format!("exec:{STUB} --toy {} --fail-on sa", lex.display());
    simt_ok(dir.path(), &extract_args(&failing, "p.jsonl", &["--m", "0", "--include-full-pair"]));
    let report = read(dir.path(), "p.jsonl.report.jsonl");
    let statuses: Vec<serde_json::Value> = report.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let st: Vec<&str> = statuses.iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(st, ["ok", "error", "ok", "error"]);
    let sids: Vec<String> = pairs(dir.path(), "p.jsonl").into_iter().map(|p| p.sid).collect();
    assert!(sids.contains(&"0".to_owned()) && sids.contains(&"2".to_owned()));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "p.jsonl.manifest.json")).unwrap();
    assert_eq!(manifest["report"]["failed"], 2);

    // A non-JSON reply kills the connection; when nothing succeeds the run
    // fails as an endpoint error.
    let garbage = format!("exec:{STUB} --toy {} --garbage-on ka", lex.display());
    let out = simt(dir.path(), &extract_args(&garbage, "g.jsonl", &["--workers", "1"]));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let missing = "exec:/nonexistent/model-binary".to_owned();
    assert_eq!(exit_code(dir.path(), &extract_args(&missing, "x.jsonl", &[])), Some(3));
}

#[test]
fn manifest_reruns_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 15, 9, 12, "c");
    let ep = toy_endpoint("lexicon.json");
    simt_ok(dir.path(), &extract_args(&ep, "p.jsonl", &["--m", "1", "--beam", "4"]));
    let first = read(dir.path(), "p.jsonl");
    std::fs::rename(dir.path().join("p.jsonl.manifest.json"), dir.path().join("run.json")).unwrap();
    std::fs::remove_file(dir.path().join("p.jsonl")).unwrap();
    simt_ok(dir.path(), &["--config", "run.json", "extract"]);
    assert_eq!(read(dir.path(), "p.jsonl"), first);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "p.jsonl.manifest.json")).unwrap();
    assert_eq!(manifest["config"]["m"], 1);
    assert_eq!(manifest["config"]["beam"], 4);

    // Flags override the file.
    simt_ok(dir.path(), &["--config", "run.json", "extract", "--m", "0", "--out", "q.jsonl"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "q.jsonl.manifest.json")).unwrap();
    assert_eq!(manifest["config"]["m"], 0);
    assert_eq!(manifest["config"]["beam"], 4);
}

#[test]
fn export_appends_originals() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path(), "lexicon.json", 10, 8, 13, "c");
    simt_ok(dir.path(), &extract_args(&toy_endpoint("lexicon.json"), "p.jsonl", &[]));
    let n_pairs = pairs(dir.path(), "p.jsonl").len();
    simt_ok(
        dir.path(),
        &["export", "--pairs", "p.jsonl", "--src", "c.src", "--tgt", "c.tgt", "--out", "joint"],
    );
    let src = read(dir.path(), "joint.src");
    let tgt = read(dir.path(), "joint.tgt");
    assert_eq!(src.lines().count(), n_pairs + 10);
    assert_eq!(tgt.lines().count(), n_pairs + 10);
    assert!(src.ends_with(&read(dir.path(), "c.src")));
}
