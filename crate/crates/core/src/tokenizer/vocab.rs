use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::basic_tokenize;
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;

/// Reserved tokens, in id order.
pub const SPECIAL_TOKENS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

pub const NUM_SPECIAL: u32 = SPECIAL_TOKENS.len() as u32;

pub const CONTINUATION_PREFIX: &str = "##";

/// Wordpiece inventory. Ids 0–4 are the special tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*s) {
                return Err(Error::Data(format!("vocabulary id {i} must be {s}")));
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(['\n', '\r']) {
                return Err(Error::Data(format!("invalid vocabulary token at id {i}")));
            }
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    /// Reads one token per line; the line number is the id.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let tokens = reader
            .lines()
            .map(|l| l.map(|s| s.trim_end_matches('\r').to_string()))
            .collect::<std::io::Result<Vec<_>>>()?;
        Self::from_tokens(tokens)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(id: u32) -> bool {
        id < NUM_SPECIAL
    }
}

/// Builds a vocabulary from raw text.
///
/// Layout: the five specials; then every character seen, as a word-initial
/// piece `c` or a continuation piece `##c`, ordered by (count desc, token);
/// then whole words with count ≥ `min_freq` not already present, in the same
/// order. The result is truncated to `max_size`.
pub fn build_vocab<I>(corpus: I, max_size: usize, min_freq: usize) -> Result<Vocabulary>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    if max_size < SPECIAL_TOKENS.len() + 1 {
        return Err(Error::Config(format!("vocabulary size {max_size} is below 6")));
    }
    let mut words: HashMap<String, usize> = HashMap::new();
    for line in corpus {
        for w in basic_tokenize(line.as_ref()) {
            *words.entry(w).or_insert(0) += 1;
        }
    }
    let mut pieces: HashMap<String, usize> = HashMap::new();
    for (w, &n) in &words {
        for (i, c) in w.chars().enumerate() {
            let piece = if i == 0 {
                c.to_string()
            } else {
                format!("{CONTINUATION_PREFIX}{c}")
            };
            *pieces.entry(piece).or_insert(0) += n;
        }
    }
    let ranked = |m: HashMap<String, usize>| {
        let mut v: Vec<(String, usize)> = m.into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    };

    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    let mut seen: std::collections::HashSet<String> = tokens.iter().cloned().collect();
    let chars = ranked(pieces).into_iter().map(|(t, _)| t);
    let whole = ranked(words)
        .into_iter()
        .filter(|(_, n)| *n >= min_freq)
        .map(|(t, _)| t);
    for t in chars.chain(whole) {
        if tokens.len() >= max_size {
            break;
        }
        if seen.insert(t.clone()) {
            tokens.push(t);
        }
    }
    Vocabulary::from_tokens(tokens)
}
