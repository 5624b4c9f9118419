//! Wordpiece encoding.
//!
//! Text is lowercased, split on whitespace and punctuation, and each word is
//! segmented greedily into the longest vocabulary prefix at every position,
//! with `##` marking continuation pieces. Sequences are framed as
//! `[CLS] a [SEP]` or `[CLS] a [SEP] b [SEP]` and right-padded to a fixed
//! length.

mod vocab;

use unicode_general_category::{get_general_category, GeneralCategory as Gc};

pub use vocab::{
    build_vocab, Vocabulary, CLS_ID, CONTINUATION_PREFIX, MASK_ID, NUM_SPECIAL, PAD_ID, SEP_ID,
    SPECIAL_TOKENS, UNK_ID,
};

use crate::error::{Error, Result};

/// Words longer than this (in characters) become `[UNK]`.
pub const MAX_WORD_CHARS: usize = 100;

/// Full-size sequence length.
pub const DEFAULT_MAX_LEN: usize = 128;

/// Model-ready ids, each of the three vectors exactly `T` long.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub segment_ids: Vec<u8>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of non-padding positions.
    pub fn real_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            get_general_category(c),
            Gc::ConnectorPunctuation
                | Gc::DashPunctuation
                | Gc::OpenPunctuation
                | Gc::ClosePunctuation
                | Gc::InitialPunctuation
                | Gc::FinalPunctuation
                | Gc::OtherPunctuation
        )
}

/// Lowercases and splits on whitespace; each punctuation character becomes
/// its own token.
pub fn basic_tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let mut cur = String::new();
        for c in word.chars() {
            if is_punctuation(c) {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Greedy longest-match segmentation of one word.
pub fn wordpiece(word: &str, vocab: &Vocabulary) -> Vec<u32> {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() > MAX_WORD_CHARS {
        return vec![UNK_ID];
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut found = None;
        for end in (start + 1..=chars.len()).rev() {
            let sub: String = chars[start..end].iter().collect();
            let candidate = if start > 0 {
                format!("{CONTINUATION_PREFIX}{sub}")
            } else {
                sub
            };
            if let Some(id) = vocab.id(&candidate) {
                found = Some((id, end));
                break;
            }
        }
        match found {
            Some((id, end)) => {
                pieces.push(id);
                start = end;
            }
            None => return vec![UNK_ID],
        }
    }
    pieces
}

/// Wordpiece ids of `text` without framing.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<u32> {
    basic_tokenize(text)
        .iter()
        .flat_map(|w| wordpiece(w, vocab))
        .collect()
}

/// Encodes one text or a text pair into exactly `max_len` positions.
///
/// Pairs are truncated longest-first: one token is removed from the longer
/// segment (the second on ties) until everything fits.
pub fn encode(text: &str, vocab: &Vocabulary, max_len: usize, pair: Option<&str>) -> Result<TokenSequence> {
    if max_len < 4 {
        return Err(Error::Config(format!("sequence length {max_len} is below 4")));
    }
    let mut a = tokenize(text, vocab);
    let mut ids = vec![CLS_ID];
    let mut segment_ids = vec![0u8];
    match pair {
        None => {
            a.truncate(max_len - 2);
            ids.extend(&a);
            ids.push(SEP_ID);
            segment_ids.resize(ids.len(), 0);
        }
        Some(second) => {
            let mut b = tokenize(second, vocab);
            let budget = max_len - 3;
            while a.len() + b.len() > budget {
                if a.len() > b.len() {
                    a.pop();
                } else {
                    b.pop();
                }
            }
            ids.extend(&a);
            ids.push(SEP_ID);
            segment_ids.resize(ids.len(), 0);
            ids.extend(&b);
            ids.push(SEP_ID);
            segment_ids.resize(ids.len(), 1);
        }
    }
    let mut attention_mask = vec![1u8; ids.len()];
    ids.resize(max_len, PAD_ID);
    attention_mask.resize(max_len, 0);
    segment_ids.resize(max_len, 0);
    Ok(TokenSequence {
        ids,
        attention_mask,
        segment_ids,
    })
}

/// Joins pieces back into text, dropping special tokens.
pub fn decode(ids: &[u32], vocab: &Vocabulary) -> Result<String> {
    let mut out = String::new();
    for &id in ids {
        let tok = vocab.token(id).ok_or(Error::TokenOutOfRange {
            id: id as usize,
            size: vocab.len(),
        })?;
        if Vocabulary::is_special(id) {
            continue;
        }
        match tok.strip_prefix(CONTINUATION_PREFIX) {
            Some(rest) if !out.is_empty() => out.push_str(rest),
            _ => {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(tok);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(extra: &[&str]) -> Vocabulary {
        let mut t: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        t.extend(extra.iter().map(|s| s.to_string()));
        Vocabulary::from_tokens(t).unwrap()
    }

    #[test]
    fn unaffable() {
        let v = vocab(&["un", "##aff", "##able"]);
        let seq = encode("unaffable", &v, 8, None).unwrap();
        assert_eq!(seq.ids, vec![CLS_ID, 5, 6, 7, SEP_ID, 0, 0, 0]);
        assert_eq!(seq.attention_mask, vec![1, 1, 1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn empty_text_is_cls_sep() {
        let v = vocab(&[]);
        let seq = encode("", &v, 6, None).unwrap();
        assert_eq!(seq.ids, vec![CLS_ID, SEP_ID, 0, 0, 0, 0]);
        assert_eq!(seq.real_len(), 2);
    }

    #[test]
    fn long_input_truncated_to_t() {
        let v = vocab(&["x"]);
        let text = vec!["x"; 300].join(" ");
        let seq = encode(&text, &v, 128, None).unwrap();
        assert_eq!(seq.len(), 128);
        assert_eq!(seq.attention_mask.iter().map(|&m| m as usize).sum::<usize>(), 128);
        assert_eq!(seq.ids[127], SEP_ID);
    }

    #[test]
    fn pair_framing_and_segments() {
        let v = vocab(&["a", "b"]);
        let seq = encode("a a", &v, 8, Some("b")).unwrap();
        assert_eq!(seq.ids, vec![CLS_ID, 5, 5, SEP_ID, 6, SEP_ID, 0, 0]);
        assert_eq!(seq.segment_ids, vec![0, 0, 0, 0, 1, 1, 0, 0]);
    }

    #[test]
    fn pair_truncation_trims_longer_side() {
        let v = vocab(&["a", "b"]);
        let seq = encode("a a a a a a", &v, 8, Some("b b")).unwrap();
        // budget 5: a trimmed to 3, b keeps 2
        assert_eq!(seq.ids, vec![CLS_ID, 5, 5, 5, SEP_ID, 6, 6, SEP_ID]);
    }

    #[test]
    fn unknown_and_overlong_words() {
        let v = vocab(&["a"]);
        assert_eq!(wordpiece("ab", &v), vec![UNK_ID]);
        let v = vocab(&["a", "##a"]);
        assert_eq!(wordpiece(&"a".repeat(100), &v).len(), 100);
        assert_eq!(wordpiece(&"a".repeat(101), &v), vec![UNK_ID]);
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(
            basic_tokenize("Religion. «Sweden»!"),
            vec!["religion", ".", "«", "sweden", "»", "!"]
        );
    }

    #[test]
    fn short_t_rejected() {
        assert!(encode("x", &vocab(&[]), 3, None).is_err());
    }

    #[test]
    fn decode_joins_pieces() {
        let v = vocab(&["un", "##aff", "##able"]);
        assert_eq!(decode(&[5, 6, 7], &v).unwrap(), "unaffable");
        assert_eq!(decode(&[0, 0, 0], &v).unwrap(), "");
        assert!(matches!(decode(&[99], &v), Err(Error::TokenOutOfRange { .. })));
    }

    #[test]
    fn full_word_round_trip() {
        let v = vocab(&["christianity", "is", "part", "of", "religion", "."]);
        let text = "christianity is part of religion .";
        let seq = encode(text, &v, 16, None).unwrap();
        assert_eq!(decode(&seq.ids, &v).unwrap(), text);
    }
}
