//! Fixture files and a runner for the `factcheck` binary.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

#[path = "../../../core/tests/common/mod.rs"]
pub mod common;

use factcheck_core::Corpus;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_factcheck")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "factcheck {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn write_lexicon(path: &Path, lexicon_words: &[&str]) {
    std::fs::write(path, lexicon_words.join("\n") + "\n").unwrap();
}

pub fn write_corpus(path: &Path, corpus: &Corpus) {
    std::fs::write(path, corpus.to_jsonl()).unwrap();
}

/// The synthetic lexicon as a lexicon file.
pub fn synthetic_lexicon_text() -> String {
    common::lexicon_words().join("\n") + "\n"
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

/// A planted-bias corpus of `n` claims with its lexicon.
pub fn synthetic_fixture(n: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let lexicon = dir.path().join("lexicon.txt");
    write_corpus(&corpus, &common::planted_bias_corpus(n, seed));
    std::fs::write(&lexicon, synthetic_lexicon_text()).unwrap();
    Fixture { dir, corpus, lexicon }
}

/// Relative path → bytes for every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Parses CSV text into header and rows.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}
