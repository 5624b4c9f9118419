use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::config::{AdapterConfig, ModelConfig, TaskHead};
use crate::autodiff::{Scalar, Tensor};

/// Which part of the model a parameter belongs to. Checkpoints store
/// sections separately so adapters can travel without the base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Base,
    Adapter,
    Head,
}

/// Decides initialization and whether weight decay applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Weight,
    Bias,
    LayerNorm,
    Embedding,
    /// Adapter up-projection weight: a weight that starts at zero.
    ZeroWeight,
}

impl ParamKind {
    pub fn decays(self) -> bool {
        matches!(self, ParamKind::Weight | ParamKind::Embedding | ParamKind::ZeroWeight)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub section: Section,
    pub kind: ParamKind,
}

impl ParamSpec {
    fn new(name: String, shape: &[usize], section: Section, kind: ParamKind) -> Self {
        ParamSpec {
            name,
            shape: shape.to_vec(),
            section,
            kind,
        }
    }

    pub fn count(&self) -> usize {
        self.shape.iter().product()
    }
}

/// The two adapter slots inside each layer.
pub const ADAPTER_SLOTS: [&str; 2] = ["attention", "ffn"];

pub fn base_specs(c: &ModelConfig) -> Vec<ParamSpec> {
    use ParamKind::*;
    let b = Section::Base;
    let (h, f) = (c.hidden, c.ffn);
    let mut v = vec![
        ParamSpec::new("embeddings.token".into(), &[c.vocab_size, h], b, Embedding),
        ParamSpec::new("embeddings.position".into(), &[c.max_positions, h], b, Embedding),
        ParamSpec::new("embeddings.segment".into(), &[2, h], b, Embedding),
        ParamSpec::new("embeddings.norm.gain".into(), &[h], b, LayerNorm),
        ParamSpec::new("embeddings.norm.bias".into(), &[h], b, LayerNorm),
    ];
    for l in 0..c.layers {
        let p = |s: &str| format!("layer.{l}.{s}");
        for proj in ["query", "key", "value", "output"] {
            v.push(ParamSpec::new(p(&format!("attention.{proj}.weight")), &[h, h], b, Weight));
            v.push(ParamSpec::new(p(&format!("attention.{proj}.bias")), &[h], b, Bias));
        }
        v.push(ParamSpec::new(p("attention.norm.gain"), &[h], b, LayerNorm));
        v.push(ParamSpec::new(p("attention.norm.bias"), &[h], b, LayerNorm));
        v.push(ParamSpec::new(p("ffn.inner.weight"), &[h, f], b, Weight));
        v.push(ParamSpec::new(p("ffn.inner.bias"), &[f], b, Bias));
        v.push(ParamSpec::new(p("ffn.outer.weight"), &[f, h], b, Weight));
        v.push(ParamSpec::new(p("ffn.outer.bias"), &[h], b, Bias));
        v.push(ParamSpec::new(p("ffn.norm.gain"), &[h], b, LayerNorm));
        v.push(ParamSpec::new(p("ffn.norm.bias"), &[h], b, LayerNorm));
    }
    v
}

pub fn adapter_specs(c: &ModelConfig, a: &AdapterConfig) -> Vec<ParamSpec> {
    let s = Section::Adapter;
    let (h, m) = (c.hidden, a.size);
    let mut v = Vec::new();
    for l in 0..c.layers {
        for slot in ADAPTER_SLOTS {
            let p = |x: &str| format!("adapter.{l}.{slot}.{x}");
            v.push(ParamSpec::new(p("down.weight"), &[h, m], s, ParamKind::Weight));
            v.push(ParamSpec::new(p("down.bias"), &[m], s, ParamKind::Bias));
            v.push(ParamSpec::new(p("up.weight"), &[m, h], s, ParamKind::ZeroWeight));
            v.push(ParamSpec::new(p("up.bias"), &[h], s, ParamKind::Bias));
        }
    }
    v
}

pub fn mlm_head_specs(c: &ModelConfig) -> Vec<ParamSpec> {
    let mut v = Vec::new();
    if !c.tie_mlm_weights {
        v.push(ParamSpec::new(
            "head.mlm.weight".into(),
            &[c.hidden, c.vocab_size],
            Section::Head,
            ParamKind::Weight,
        ));
    }
    v.push(ParamSpec::new(
        "head.mlm.bias".into(),
        &[c.vocab_size],
        Section::Head,
        ParamKind::Bias,
    ));
    v
}

pub fn task_head_specs(c: &ModelConfig, t: &TaskHead) -> Vec<ParamSpec> {
    let k = t.outputs();
    vec![
        ParamSpec::new("head.task.weight".into(), &[c.hidden, k], Section::Head, ParamKind::Weight),
        ParamSpec::new("head.task.bias".into(), &[k], Section::Head, ParamKind::Bias),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<S> {
    pub spec: ParamSpec,
    pub value: Tensor<S>,
    pub trainable: bool,
}

impl<S: Scalar> Param<S> {
    pub fn name(&self) -> &str {
        &self.spec.name
    }
}

/// Named parameters in a fixed order, each with its trainable flag.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<S> {
    params: Vec<Param<S>>,
    index: HashMap<String, usize>,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn push(&mut self, spec: ParamSpec, value: Tensor<S>, trainable: bool) {
        assert_eq!(spec.shape.as_slice(), value.shape(), "parameter {}", spec.name);
        assert!(!self.index.contains_key(&spec.name), "duplicate parameter {}", spec.name);
        self.index.insert(spec.name.clone(), self.params.len());
        self.params.push(Param {
            spec,
            value,
            trainable,
        });
    }

    /// Drops every parameter matching `pred`, keeping the others in order.
    pub fn remove_where(&mut self, pred: impl Fn(&ParamSpec) -> bool) {
        self.params.retain(|p| !pred(&p.spec));
        self.index = self
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.spec.name.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Param<S>> {
        self.index_of(name).map(|i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param<S>> {
        self.index_of(name).map(move |i| &mut self.params[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Param<S>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Param<S>> {
        self.params.iter_mut()
    }

    pub fn params(&self) -> &[Param<S>] {
        &self.params
    }

    pub fn total_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.params
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    pub fn cast<T: Scalar>(&self) -> ParamStore<T> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    spec: p.spec.clone(),
                    value: p.value.cast(),
                    trainable: p.trainable,
                })
                .collect(),
            index: self.index.clone(),
        }
    }

    pub fn section_count(&self, section: Section) -> usize {
        self.params
            .iter()
            .filter(|p| p.spec.section == section)
            .map(|p| p.value.len())
            .sum()
    }
}
