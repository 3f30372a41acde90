//! Dictionary-based Chinese word segmentation (forward maximum matching) and
//! word n-grams.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line_no}: bad frequency {value:?}")]
    BadFrequency { line_no: usize, value: String },
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus contains no word tokens")]
    NoTokens,
}

/// Word list with optional frequencies.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
    freqs: HashMap<String, f64>,
    max_len: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = Lexicon::new();
        for w in words {
            lex.insert(w);
        }
        lex
    }

    /// Empty or whitespace-only entries are ignored.
    pub fn insert(&mut self, word: impl Into<String>) {
        let word = word.into().trim().to_string();
        if word.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(word.chars().count());
        self.words.insert(word);
    }

    pub fn insert_with_freq(&mut self, word: impl Into<String>, freq: f64) {
        let word = word.into().trim().to_string();
        if word.is_empty() {
            return;
        }
        self.freqs.insert(word.clone(), freq);
        self.insert(word);
    }

    /// One word per line, optionally followed by whitespace and a frequency.
    /// Further columns (jieba's POS tag) are ignored.
    pub fn parse(text: &str) -> Result<Self, SegmentError> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else {
                continue;
            };
            match parts.next() {
                Some(f) => {
                    let freq = f.parse::<f64>().map_err(|_| SegmentError::BadFrequency {
                        line_no: i + 1,
                        value: f.to_string(),
                    })?;
                    lex.insert_with_freq(word, freq);
                }
                None => lex.insert(word),
            }
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, SegmentError> {
        let text = std::fs::read_to_string(path).map_err(|source| SegmentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn freq(&self, word: &str) -> Option<f64> {
        self.freqs.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// SHA-256 over the sorted word list; identifies the lexicon a model was
    /// trained with.
    pub fn fingerprint(&self) -> String {
        let sorted: BTreeSet<&str> = self.words.iter().map(String::as_str).collect();
        let mut h = Sha256::new();
        for w in sorted {
            h.update(w.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn extended<I, S>(&self, words: I) -> Lexicon
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = self.clone();
        for w in words {
            lex.insert(w);
        }
        lex
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl WordToken {
    /// True for tokens carrying lexical content (not punctuation or space).
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }

    pub fn char_len(&self) -> usize {
        self.end - self.start
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x30000..=0x3134F)
}

/// Characters that group into atomic runs: digits, Latin letters and other
/// non-CJK alphanumerics.
fn is_run_char(c: char) -> bool {
    c.is_alphanumeric() && !is_cjk(c)
}

fn run_end(chars: &[char], start: usize) -> usize {
    let mut i = start;
    while i < chars.len() {
        let c = chars[i];
        if is_run_char(c) {
            i += 1;
        } else if c == '.'
            && i > start
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            // decimal point inside a number
            i += 1;
        } else {
            break;
        }
    }
    i
}

/// Forward maximum matching. Spans tile `text` exactly.
pub fn segment(text: &str, lexicon: &Lexicon) -> Vec<WordToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut buf = String::new();
    while i < chars.len() {
        let longest = lexicon.max_len.min(chars.len() - i);
        let mut matched = 0;
        for len in (1..=longest).rev() {
            if len == 1 && is_run_char(chars[i]) {
                break;
            }
            buf.clear();
            buf.extend(&chars[i..i + len]);
            if lexicon.contains(&buf) {
                matched = len;
                break;
            }
        }
        let end = if matched > 0 {
            i + matched
        } else if is_run_char(chars[i]) {
            run_end(&chars, i)
        } else {
            i + 1
        };
        tokens.push(WordToken {
            text: chars[i..end].iter().collect(),
            start: i,
            end,
        });
        i = end;
    }
    tokens
}

/// Lexical tokens of `text` (punctuation and whitespace removed).
pub fn words(text: &str, lexicon: &Lexicon) -> Vec<String> {
    segment(text, lexicon)
        .into_iter()
        .filter(WordToken::is_word)
        .map(|t| t.text)
        .collect()
}

/// Contiguous word n-grams joined without a separator.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<Vec<String>, SegmentError> {
    if n == 0 {
        return Err(SegmentError::InvalidOrder);
    }
    if tokens.len() < n {
        return Ok(Vec::new());
    }
    Ok(tokens
        .windows(n)
        .map(|w| w.iter().map(AsRef::as_ref).collect::<String>())
        .collect())
}

/// Jaccard similarity of two word sets; two empty sets count as identical.
pub fn jaccard<S: AsRef<str> + Eq + std::hash::Hash>(a: &HashSet<S>, b: &HashSet<S>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.iter().filter(|w| b.contains(*w)).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

pub fn word_set(text: &str, lexicon: &Lexicon) -> HashSet<String> {
    words(text, lexicon).into_iter().collect()
}

/// Mean character length of the word tokens of all claims.
pub fn avg_word_length(corpus: &Corpus, lexicon: &Lexicon) -> Result<f64, SegmentError> {
    if corpus.is_empty() {
        return Err(SegmentError::EmptyCorpus);
    }
    let (chars, count) = corpus
        .iter()
        .flat_map(|r| segment(&r.text, lexicon))
        .filter(WordToken::is_word)
        .fold((0usize, 0usize), |(c, n), t| (c + t.char_len(), n + 1));
    if count == 0 {
        return Err(SegmentError::NoTokens);
    }
    Ok(chars as f64 / count as f64)
}
