use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagnostic knowledge categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    LS,
    KNO,
    LOG,
    PAS,
    CS,
    World,
    NE,
}

impl Tag {
    pub const ALL: [Tag; 7] = [Tag::LS, Tag::KNO, Tag::LOG, Tag::PAS, Tag::CS, Tag::World, Tag::NE];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::LS => "LS",
            Tag::KNO => "KNO",
            Tag::LOG => "LOG",
            Tag::PAS => "PAS",
            Tag::CS => "CS",
            Tag::World => "World",
            Tag::NE => "NE",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown diagnostic tag {s:?}")))
    }
}

/// One row of a task dataset. Classification labels are class ids stored as
/// reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text_a: String,
    pub text_b: Option<String>,
    pub label: f64,
    pub tags: BTreeSet<Tag>,
}

impl LabeledExample {
    pub fn new(text_a: impl Into<String>, text_b: Option<String>, label: f64) -> Self {
        LabeledExample {
            text_a: text_a.into(),
            text_b,
            label,
            tags: BTreeSet::new(),
        }
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = Tag>) -> Self {
        self.tags.extend(tags);
        self
    }

    /// The label as a class id.
    pub fn class(&self) -> Result<usize> {
        class_id(self.label)
    }
}

pub(crate) fn class_id(v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Data(format!("label {v} is not a class id")))
    }
}

pub const TSV_HEADER: &str = "text_a\ttext_b\tlabel\ttags";

/// Reads the four-column TSV format. `text_b` may be empty; `tags` is a
/// comma-separated list, possibly empty.
pub fn read_tsv<R: BufRead>(reader: R) -> Result<Vec<LabeledExample>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Data("dataset is empty; expected a header".into()))?;
    if header.trim_end_matches('\r') != TSV_HEADER {
        return Err(Error::Data(format!("dataset header must be {TSV_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = i + 2;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 && f.len() != 4 {
            return Err(Error::Data(format!("line {row}: expected 4 columns, found {}", f.len())));
        }
        let label: f64 = f[2]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {row}: bad label {:?}", f[2])))?;
        if !label.is_finite() {
            return Err(Error::Data(format!("line {row}: label must be finite")));
        }
        let mut tags = BTreeSet::new();
        if let Some(t) = f.get(3) {
            for tag in t.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                tags.insert(tag.parse::<Tag>().map_err(|e| Error::Data(format!("line {row}: {e}")))?);
            }
        }
        out.push(LabeledExample {
            text_a: f[0].to_string(),
            text_b: (!f[1].is_empty()).then(|| f[1].to_string()),
            label,
            tags,
        });
    }
    Ok(out)
}

pub fn write_tsv<W: Write>(examples: &[LabeledExample], mut w: W) -> Result<()> {
    writeln!(w, "{TSV_HEADER}")?;
    for e in examples {
        let tags: Vec<&str> = e.tags.iter().map(|t| t.as_str()).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            e.text_a,
            e.text_b.as_deref().unwrap_or(""),
            e.label,
            tags.join(",")
        )?;
    }
    Ok(())
}
