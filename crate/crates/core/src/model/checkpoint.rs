//! Checkpoint container.
//!
//! ```text
//! magic        4 bytes  "KACK"
//! version      u32 LE   1
//! header_len   u64 LE
//! header       header_len bytes of JSON (see [`CheckpointHeader`])
//! payload      f32 LE values of every listed parameter, in header order
//! ```
//!
//! A checkpoint may hold any subset of the base, adapter and head sections;
//! an adapter-only file can be applied on top of a separately stored base.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{AdapterConfig, ModelConfig, TaskHead};
use super::encoder::Model;
use super::params::{ParamKind, ParamSpec, ParamStore, Section};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::tokenizer::Vocabulary;

pub const MAGIC: &[u8; 4] = b"KACK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub section: Section,
    pub kind: ParamKind,
    pub trainable: bool,
}

impl ParamEntry {
    pub fn spec(&self) -> ParamSpec {
        ParamSpec {
            name: self.name.clone(),
            shape: self.shape.clone(),
            section: self.section,
            kind: self.kind,
        }
    }

    pub fn count(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    pub adapter: Option<AdapterConfig>,
    pub task: Option<TaskHead>,
    pub mlm_head: bool,
    pub sections: Vec<Section>,
    pub params: Vec<ParamEntry>,
    #[serde(default)]
    pub vocab: Option<Vec<String>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub tensors: Vec<Tensor<f32>>,
}

impl Checkpoint {
    /// Captures the listed sections of `model`.
    pub fn from_model(model: &Model<f32>, sections: &[Section], vocab: Option<&Vocabulary>) -> Self {
        let mut sections = sections.to_vec();
        sections.sort();
        sections.dedup();
        let (params, tensors) = model
            .store()
            .iter()
            .filter(|p| sections.contains(&p.spec.section))
            .map(|p| {
                let e = ParamEntry {
                    name: p.spec.name.clone(),
                    shape: p.spec.shape.clone(),
                    section: p.spec.section,
                    kind: p.spec.kind,
                    trainable: p.trainable,
                };
                (e, p.value.clone())
            })
            .unzip();
        Checkpoint {
            header: CheckpointHeader {
                model: model.config().clone(),
                adapter: model.adapter_config().copied(),
                task: model.task().copied(),
                mlm_head: model.has_mlm_head(),
                sections,
                params,
                vocab: vocab.map(|v| v.tokens().to_vec()),
                metadata: BTreeMap::new(),
            },
            tensors,
        }
    }

    pub fn has_section(&self, s: Section) -> bool {
        self.header.sections.contains(&s)
    }

    pub fn vocabulary(&self) -> Result<Option<Vocabulary>> {
        self.header
            .vocab
            .as_ref()
            .map(|t| Vocabulary::from_tokens(t.clone()))
            .transpose()
    }

    pub fn store(&self) -> ParamStore<f32> {
        let mut store = ParamStore::new();
        for (e, t) in self.header.params.iter().zip(&self.tensors) {
            store.push(e.spec(), t.clone(), e.trainable);
        }
        store
    }

    /// Rebuilds the full model. Every section the configuration implies must
    /// be present.
    pub fn into_model(self) -> Result<Model<f32>> {
        let h = &self.header;
        Model::from_store(h.model.clone(), h.adapter, h.mlm_head, h.task, self.store())
    }

    /// Copies one section into `model`.
    pub fn apply_section(&self, model: &mut Model<f32>, section: Section) -> Result<()> {
        if !self.has_section(section) {
            return Err(Error::Data(format!("checkpoint has no {section:?} section")));
        }
        model.copy_section(&self.store(), section)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let payload: usize = self.tensors.iter().map(|t| t.len() * 4).sum();
        let mut out = Vec::with_capacity(16 + header.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Parses the header alone; the payload is not checked.
    pub fn read_header(bytes: &[u8]) -> Result<(CheckpointHeader, usize)> {
        let corrupt = |m: &str| Error::Corrupt(format!("checkpoint {m}"));
        if bytes.len() < 16 {
            return Err(corrupt("truncated"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("has bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(corrupt(&format!("version {version} unsupported")));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let end = usize::try_from(len)
            .ok()
            .and_then(|l| l.checked_add(16))
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| corrupt("header truncated"))?;
        let header: CheckpointHeader =
            serde_json::from_slice(&bytes[16..end]).map_err(|e| corrupt(&format!("header: {e}")))?;
        Ok((header, end))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, mut pos) = Self::read_header(bytes)?;
        let mut tensors = Vec::with_capacity(header.params.len());
        for e in &header.params {
            if !header.sections.contains(&e.section) {
                return Err(Error::Corrupt(format!("parameter {} outside listed sections", e.name)));
            }
            let n = e.count();
            let end = n
                .checked_mul(4)
                .and_then(|b| b.checked_add(pos))
                .filter(|&end| end <= bytes.len())
                .ok_or_else(|| Error::Corrupt("checkpoint payload truncated".into()))?;
            let data: Vec<f32> = bytes[pos..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            pos = end;
            tensors.push(Tensor::new(e.shape.clone(), data)?);
        }
        if pos != bytes.len() {
            return Err(Error::Corrupt(format!(
                "checkpoint has {} trailing bytes",
                bytes.len() - pos
            )));
        }
        Ok(Checkpoint { header, tensors })
    }
}
