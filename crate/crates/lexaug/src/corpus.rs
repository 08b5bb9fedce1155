//! Corpus ingestion: tokenization, monolingual and parallel loading, and
//! vocabulary construction.
//!
//! File conventions: UTF-8, one sentence per line, LF or CRLF endings.
//! A vocabulary serializes as one token per line in id order; the first four
//! lines are always the reserved tokens `<pad>`, `<unk>`, `<bos>`, `<eos>`
//! (ids 0..=3), so the corpus token on line `i` (0-based) has id `i`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Characters detached from token edges during tokenization.
pub const DETACHED_PUNCT: &[char] = &[
    '.', ',', ';', ':', '!', '?', '«', '»', '"', '(', ')', '\'',
];

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const RESERVED_TOKENS: [&str; 4] = [PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN];

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;
pub const NUM_RESERVED: usize = 4;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 on line {line}")]
    InvalidUtf8 { path: PathBuf, line: usize },
    #[error("line count mismatch {left} vs {right}")]
    LineCountMismatch { left: usize, right: usize },
    #[error("{path}: reserved token `{token}` expected on line {line}, found `{found}`")]
    BadReservedToken {
        path: PathBuf,
        token: String,
        line: usize,
        found: String,
    },
    #[error("{path}: invalid vocab token `{token}` on line {line}")]
    BadVocabToken {
        path: PathBuf,
        token: String,
        line: usize,
    },
    #[error("token `{0}` is empty or contains whitespace")]
    BadToken(String),
}

/// A tokenized sentence. Tokens are non-empty and contain no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    /// Builds a sentence from pre-split tokens, enforcing the token invariants.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(CorpusError::BadToken(t.clone()));
            }
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))
    }
}

/// Where a training pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Parallel,
    Wow,
    Copy,
    Bt,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Parallel => "parallel",
            Origin::Wow => "wow",
            Origin::Copy => "copy",
            Origin::Bt => "bt",
        }
    }
}

/// An aligned source/target sentence pair. Both sides are non-empty; loaders
/// and augmenters drop candidates that would violate this.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParallelPair {
    pub source: Sentence,
    pub target: Sentence,
    pub origin: Origin,
}

/// An ordered list of sentences, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Corpus { sentences }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    /// Writes one sentence per line, LF endings, trailing newline.
    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        fs::write(path, out).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sentence;
    type IntoIter = std::slice::Iter<'a, Sentence>;
    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

/// Splits on Unicode whitespace, then detaches leading/trailing punctuation
/// (see [`DETACHED_PUNCT`]) as separate single-character tokens. Case is
/// preserved; interior punctuation (as in `isn't`) is kept in place.
pub fn tokenize(line: &str) -> Sentence {
    let mut tokens = Vec::new();
    for piece in line.split_whitespace() {
        let chars: Vec<char> = piece.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && DETACHED_PUNCT.contains(&chars[start]) {
            start += 1;
        }
        while end > start && DETACHED_PUNCT.contains(&chars[end - 1]) {
            end -= 1;
        }
        for &c in &chars[..start] {
            tokens.push(c.to_string());
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        for &c in &chars[end..] {
            tokens.push(c.to_string());
        }
    }
    Sentence { tokens }
}

/// Options shared by the corpus loaders.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub lowercase: bool,
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| CorpusError::InvalidUtf8 {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        lines.push(line.to_string());
    }
    // A trailing newline produces one empty final element; it is not a line.
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

fn prepare(line: &str, opts: LoadOptions) -> Sentence {
    if opts.lowercase {
        tokenize(&line.to_lowercase())
    } else {
        tokenize(line)
    }
}

/// Loads a one-sentence-per-line corpus. Lines that tokenize to nothing
/// (blank or whitespace-only) are dropped; order is otherwise preserved.
pub fn load_monolingual(path: &Path, opts: LoadOptions) -> Result<Corpus, CorpusError> {
    let lines = read_lines(path)?;
    let sentences = lines
        .iter()
        .map(|l| prepare(l, opts))
        .filter(|s| !s.is_empty())
        .collect();
    Ok(Corpus { sentences })
}

/// Result of [`load_parallel`]: the kept pairs plus the count of aligned
/// lines dropped because one side tokenized to nothing.
#[derive(Debug)]
pub struct LoadedParallel {
    pub pairs: Vec<ParallelPair>,
    pub dropped: usize,
}

/// Loads two line-aligned files into pairs with origin `parallel`.
/// The files must have the same raw line count.
pub fn load_parallel(
    src_path: &Path,
    tgt_path: &Path,
    opts: LoadOptions,
) -> Result<LoadedParallel, CorpusError> {
    let src_lines = read_lines(src_path)?;
    let tgt_lines = read_lines(tgt_path)?;
    if src_lines.len() != tgt_lines.len() {
        return Err(CorpusError::LineCountMismatch {
            left: src_lines.len(),
            right: tgt_lines.len(),
        });
    }
    let mut pairs = Vec::with_capacity(src_lines.len());
    let mut dropped = 0;
    for (s, t) in src_lines.iter().zip(&tgt_lines) {
        let source = prepare(s, opts);
        let target = prepare(t, opts);
        if source.is_empty() || target.is_empty() {
            dropped += 1;
            continue;
        }
        pairs.push(ParallelPair {
            source,
            target,
            origin: Origin::Parallel,
        });
    }
    Ok(LoadedParallel { pairs, dropped })
}

/// Token/id bijection with reserved ids 0..=3 for pad, unk, bos, eos.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
}

impl Vocab {
    fn with_reserved() -> Self {
        let mut v = Vocab {
            id_to_token: Vec::new(),
            token_to_id: HashMap::new(),
        };
        for &t in &RESERVED_TOKENS {
            v.push_token(t.to_string());
        }
        v
    }

    fn push_token(&mut self, token: String) {
        let id = self.id_to_token.len() as u32;
        self.token_to_id.insert(token.clone(), id);
        self.id_to_token.push(token);
    }

    /// Total entry count, reserved tokens included.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved tokens are always present
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Token ids with out-of-vocabulary tokens mapped to `<unk>`.
    pub fn encode(&self, sentence: &Sentence) -> Vec<u32> {
        sentence
            .tokens()
            .iter()
            .map(|t| self.id(t).unwrap_or(UNK_ID))
            .collect()
    }

    /// Inverse of [`Vocab::encode`]; unknown ids also map to `<unk>`.
    pub fn decode(&self, ids: &[u32]) -> Sentence {
        let tokens = ids
            .iter()
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN).to_string())
            .collect();
        Sentence { tokens }
    }

    /// Writes one token per line in id order (reserved tokens first).
    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        let mut f = fs::File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut out = String::new();
        for t in &self.id_to_token {
            out.push_str(t);
            out.push('\n');
        }
        f.write_all(out.as_bytes()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let lines = read_lines(path)?;
        Self::from_lines(&lines, path)
    }

    /// Parses the line-per-token layout; used by both vocab files and
    /// checkpoint sections.
    pub fn from_lines(lines: &[String], path: &Path) -> Result<Self, CorpusError> {
        let mut v = Vocab {
            id_to_token: Vec::new(),
            token_to_id: HashMap::new(),
        };
        for (i, line) in lines.iter().enumerate() {
            if i < NUM_RESERVED {
                if line != RESERVED_TOKENS[i] {
                    return Err(CorpusError::BadReservedToken {
                        path: path.to_path_buf(),
                        token: RESERVED_TOKENS[i].to_string(),
                        line: i + 1,
                        found: line.clone(),
                    });
                }
            } else if line.is_empty() || line.chars().any(char::is_whitespace) {
                return Err(CorpusError::BadVocabToken {
                    path: path.to_path_buf(),
                    token: line.clone(),
                    line: i + 1,
                });
            }
            v.push_token(line.clone());
        }
        if v.len() < NUM_RESERVED {
            return Err(CorpusError::BadReservedToken {
                path: path.to_path_buf(),
                token: RESERVED_TOKENS[v.len()].to_string(),
                line: v.len() + 1,
                found: String::new(),
            });
        }
        Ok(v)
    }
}

/// Builds a vocabulary from sentences: tokens with frequency >= `min_freq`,
/// ranked by (frequency desc, token asc), truncated to `max_size` corpus
/// tokens, plus the four reserved tokens. Corpus tokens that collide with a
/// reserved surface form are skipped.
pub fn build_vocab(sentences: &[Sentence], max_size: Option<usize>, min_freq: usize) -> Vocab {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for t in s.tokens() {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(t, n)| n >= min_freq && !RESERVED_TOKENS.contains(&t))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(cap) = max_size {
        ranked.truncate(cap);
    }
    let mut vocab = Vocab::with_reserved();
    for (t, _) in ranked {
        vocab.push_token(t.to_string());
    }
    vocab
}
