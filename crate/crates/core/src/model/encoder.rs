use rand_chacha::ChaCha8Rng;

use super::config::{AdapterConfig, ModelConfig, TaskHead};
use super::params::{
    adapter_specs, base_specs, mlm_head_specs, task_head_specs, ParamKind, ParamSpec, ParamStore,
    Section, ADAPTER_SLOTS,
};
use crate::autodiff::{Scalar, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::tokenizer::TokenSequence;

/// FNV-1a, used to give every parameter its own init stream so that base
/// weights do not depend on which adapters or heads exist.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn init_param<S: Scalar>(spec: &ParamSpec, std: f64, seed: u64) -> Tensor<S> {
    match spec.kind {
        ParamKind::Weight | ParamKind::Embedding => {
            let mut rng = stream_rng(seed, Stream::Init, name_hash(&spec.name));
            Tensor::randn(&spec.shape, std, &mut rng)
        }
        ParamKind::LayerNorm if spec.name.ends_with(".gain") => Tensor::full(&spec.shape, S::one()),
        _ => Tensor::zeros(&spec.shape),
    }
}

/// Train mode applies dropout from the given stream; eval mode is
/// deterministic.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

/// A batch of equal-length sequences flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub ids: Vec<usize>,
    pub attention_mask: Vec<u8>,
    pub segment_ids: Vec<usize>,
    pub size: usize,
    pub seq: usize,
}

impl Batch {
    /// Stacks sequences, cutting trailing columns that are padding in every
    /// row. Padding keys are masked, so the cut does not change any output.
    pub fn from_sequences(seqs: &[TokenSequence]) -> Result<Self> {
        let full = seqs.first().map(|s| s.len()).unwrap_or(0);
        if seqs.iter().any(|s| s.len() != full) {
            return Err(Error::Data("sequences in a batch differ in length".into()));
        }
        let seq = seqs
            .iter()
            .map(|s| s.attention_mask.iter().rposition(|&m| m == 1).map_or(0, |p| p + 1))
            .max()
            .unwrap_or(0)
            .max(1)
            .min(full);
        let mut b = Batch {
            ids: Vec::with_capacity(seqs.len() * seq),
            attention_mask: Vec::with_capacity(seqs.len() * seq),
            segment_ids: Vec::with_capacity(seqs.len() * seq),
            size: seqs.len(),
            seq,
        };
        for s in seqs {
            b.ids.extend(s.ids[..seq].iter().map(|&i| i as usize));
            b.attention_mask.extend_from_slice(&s.attention_mask[..seq]);
            b.segment_ids.extend(s.segment_ids[..seq].iter().map(|&i| i as usize));
        }
        Ok(b)
    }

    /// Row index of each sequence's first position in the flattened batch.
    pub fn cls_rows(&self) -> Vec<usize> {
        (0..self.size).map(|b| b * self.seq).collect()
    }
}

/// Parameter variables on one tape, indexed like the store.
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Transformer encoder with optional bottleneck adapters, an MLM head and a
/// task head.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<S: Scalar> {
    config: ModelConfig,
    adapter: Option<AdapterConfig>,
    task: Option<TaskHead>,
    mlm_head: bool,
    store: ParamStore<S>,
}

impl<S: Scalar> Model<S> {
    /// Fresh model. Weights and embeddings are drawn from N(0, init_std²);
    /// biases start at zero and layer-norm gains at one. Adapter up
    /// projections start at zero, so a new adapter is the identity.
    pub fn new(
        config: ModelConfig,
        adapter: Option<AdapterConfig>,
        mlm_head: bool,
        task: Option<TaskHead>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(a) = &adapter {
            a.validate(config.hidden)?;
        }
        if let Some(TaskHead::Classification { num_labels }) = task {
            if num_labels < 2 {
                return Err(Error::Config(format!("{num_labels} labels; need at least 2")));
            }
        }
        let mut store = ParamStore::new();
        let mut specs = base_specs(&config);
        if let Some(a) = &adapter {
            specs.extend(adapter_specs(&config, a));
        }
        if mlm_head {
            specs.extend(mlm_head_specs(&config));
        }
        if let Some(t) = &task {
            specs.extend(task_head_specs(&config, t));
        }
        for spec in specs {
            let v = init_param(&spec, config.init_std, seed);
            store.push(spec, v, true);
        }
        Ok(Model {
            config,
            adapter,
            task,
            mlm_head,
            store,
        })
    }

    /// Rebuilds a model from already-initialized parameters, checking that
    /// names and shapes match the configuration exactly.
    pub fn from_store(
        config: ModelConfig,
        adapter: Option<AdapterConfig>,
        mlm_head: bool,
        task: Option<TaskHead>,
        store: ParamStore<S>,
    ) -> Result<Self> {
        let reference = Model::<S>::specs(&config, adapter.as_ref(), mlm_head, task.as_ref())?;
        if reference.len() != store.len()
            || reference.iter().zip(store.iter()).any(|(r, p)| *r != p.spec)
        {
            return Err(Error::Corrupt("parameters do not match the model configuration".into()));
        }
        Ok(Model {
            config,
            adapter,
            task,
            mlm_head,
            store,
        })
    }

    /// Full parameter list for a configuration, without allocating weights.
    pub fn specs(
        config: &ModelConfig,
        adapter: Option<&AdapterConfig>,
        mlm_head: bool,
        task: Option<&TaskHead>,
    ) -> Result<Vec<ParamSpec>> {
        config.validate()?;
        let mut specs = base_specs(config);
        if let Some(a) = adapter {
            a.validate(config.hidden)?;
            specs.extend(adapter_specs(config, a));
        }
        if mlm_head {
            specs.extend(mlm_head_specs(config));
        }
        if let Some(t) = task {
            specs.extend(task_head_specs(config, t));
        }
        Ok(specs)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn adapter_config(&self) -> Option<&AdapterConfig> {
        self.adapter.as_ref()
    }

    pub fn task(&self) -> Option<&TaskHead> {
        self.task.as_ref()
    }

    pub fn has_mlm_head(&self) -> bool {
        self.mlm_head
    }

    pub fn store(&self) -> &ParamStore<S> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.store
    }

    /// Same model with every parameter converted to another precision.
    pub fn cast<T: Scalar>(&self) -> Model<T> {
        Model {
            config: self.config.clone(),
            adapter: self.adapter,
            task: self.task,
            mlm_head: self.mlm_head,
            store: self.store.cast(),
        }
    }

    /// Freezes the base and makes adapters and heads trainable.
    pub fn freeze_base(&mut self) {
        for p in self.store.iter_mut() {
            p.trainable = p.spec.section != Section::Base;
        }
    }

    pub fn unfreeze_all(&mut self) {
        for p in self.store.iter_mut() {
            p.trainable = true;
        }
    }

    /// Replaces the task head with a fresh one.
    pub fn set_task_head(&mut self, task: TaskHead, seed: u64) -> Result<()> {
        if let TaskHead::Classification { num_labels } = task {
            if num_labels < 2 {
                return Err(Error::Config(format!("{num_labels} labels; need at least 2")));
            }
        }
        self.store.remove_where(|s| s.name.starts_with("head.task."));
        for spec in task_head_specs(&self.config, &task) {
            let v = init_param(&spec, self.config.init_std, seed);
            self.store.push(spec, v, true);
        }
        self.task = Some(task);
        Ok(())
    }

    pub fn drop_mlm_head(&mut self) {
        self.store.remove_where(|s| s.name.starts_with("head.mlm."));
        self.mlm_head = false;
    }

    /// Copies every parameter of `section` from `other`, which must have the
    /// same names and shapes for that section.
    pub fn copy_section(&mut self, other: &ParamStore<S>, section: Section) -> Result<()> {
        let names: Vec<String> = self
            .store
            .iter()
            .filter(|p| p.spec.section == section)
            .map(|p| p.spec.name.clone())
            .collect();
        let theirs = other.iter().filter(|p| p.spec.section == section).count();
        if theirs != names.len() {
            return Err(Error::Corrupt(format!(
                "{section:?} section has {theirs} tensors, expected {}",
                names.len()
            )));
        }
        for name in names {
            let src = other
                .get(&name)
                .ok_or_else(|| Error::Corrupt(format!("missing parameter {name}")))?;
            let dst = self.store.get_mut(&name).expect("listed above");
            if src.spec.shape != dst.spec.shape {
                return Err(Error::shape("copy_section", &dst.spec.shape, &src.spec.shape));
            }
            dst.value = src.value.clone();
        }
        Ok(())
    }

    /// Puts every parameter on the tape. Only trainable parameters (or all
    /// of them, with `grad_all`) collect gradients.
    pub fn bind(&self, tape: &mut Tape<S>, grad_all: bool) -> Bound {
        let vars = self
            .store
            .iter()
            .map(|p| tape.leaf(p.value.clone(), grad_all || p.trainable))
            .collect();
        Bound { vars }
    }

    fn var(&self, bound: &Bound, name: &str) -> Var {
        let i = self
            .store
            .index_of(name)
            .unwrap_or_else(|| panic!("parameter {name} not in model"));
        bound.vars[i]
    }

    fn linear(&self, tape: &mut Tape<S>, bound: &Bound, x: Var, prefix: &str) -> Result<Var> {
        let w = self.var(bound, &format!("{prefix}.weight"));
        let b = self.var(bound, &format!("{prefix}.bias"));
        tape.linear(x, w, b)
    }

    fn norm(&self, tape: &mut Tape<S>, bound: &Bound, x: Var, prefix: &str) -> Result<Var> {
        let g = self.var(bound, &format!("{prefix}.gain"));
        let b = self.var(bound, &format!("{prefix}.bias"));
        tape.layer_norm(x, g, b, self.config.layer_norm_eps)
    }

    fn dropout(&self, tape: &mut Tape<S>, x: Var, mode: &mut Mode<'_>) -> Var {
        match mode {
            Mode::Eval => x,
            Mode::Train(rng) => tape.dropout(x, self.config.dropout, &mut **rng),
        }
    }

    /// `x + gelu(x·W_d + b_d)·W_u + b_u`, or `x` when the model has no
    /// adapters.
    fn adapter(&self, tape: &mut Tape<S>, bound: &Bound, x: Var, layer: usize, slot: &str) -> Result<Var> {
        if self.adapter.is_none() {
            return Ok(x);
        }
        let prefix = format!("adapter.{layer}.{slot}");
        let down = self.linear(tape, bound, x, &format!("{prefix}.down"))?;
        let act = tape.gelu(down);
        let up = self.linear(tape, bound, act, &format!("{prefix}.up"))?;
        tape.add(x, up)
    }

    /// Final hidden states `[B·T × H]`.
    pub fn encode(&self, tape: &mut Tape<S>, bound: &Bound, batch: &Batch, mode: &mut Mode<'_>) -> Result<Var> {
        let c = &self.config;
        if batch.seq > c.max_positions {
            return Err(Error::Data(format!(
                "sequence length {} exceeds {} positions",
                batch.seq, c.max_positions
            )));
        }
        if let Some(&id) = batch.ids.iter().find(|&&i| i >= c.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id,
                size: c.vocab_size,
            });
        }
        let positions: Vec<usize> = (0..batch.size).flat_map(|_| 0..batch.seq).collect();
        let tok = tape.embedding(self.var(bound, "embeddings.token"), &batch.ids)?;
        let pos = tape.embedding(self.var(bound, "embeddings.position"), &positions)?;
        let seg = tape.embedding(self.var(bound, "embeddings.segment"), &batch.segment_ids)?;
        let sum = tape.add(tok, pos)?;
        let sum = tape.add(sum, seg)?;
        let normed = self.norm(tape, bound, sum, "embeddings.norm")?;
        let mut h = self.dropout(tape, normed, mode);

        let dh = c.hidden / c.heads;
        let inv_sqrt = S::lit(1.0 / (dh as f64).sqrt());
        for l in 0..c.layers {
            let p = |s: &str| format!("layer.{l}.{s}");
            let q = self.linear(tape, bound, h, &p("attention.query"))?;
            let k = self.linear(tape, bound, h, &p("attention.key"))?;
            let v = self.linear(tape, bound, h, &p("attention.value"))?;
            let q = tape.split_heads(q, batch.size, batch.seq, c.heads)?;
            let k = tape.split_heads(k, batch.size, batch.seq, c.heads)?;
            let v = tape.split_heads(v, batch.size, batch.seq, c.heads)?;
            let scores = tape.batch_matmul(q, k, true)?;
            let scores = tape.scale(scores, inv_sqrt);
            let scores = tape.mask_keys(scores, &batch.attention_mask, c.heads)?;
            let probs = tape.softmax(scores);
            let probs = self.dropout(tape, probs, mode);
            let ctx = tape.batch_matmul(probs, v, false)?;
            let ctx = tape.merge_heads(ctx, batch.size, batch.seq, c.heads)?;
            let out = self.linear(tape, bound, ctx, &p("attention.output"))?;
            let out = self.dropout(tape, out, mode);
            let out = self.adapter(tape, bound, out, l, ADAPTER_SLOTS[0])?;
            let res = tape.add(h, out)?;
            let h_attn = self.norm(tape, bound, res, &p("attention.norm"))?;

            let inner = self.linear(tape, bound, h_attn, &p("ffn.inner"))?;
            let inner = tape.gelu(inner);
            let out = self.linear(tape, bound, inner, &p("ffn.outer"))?;
            let out = self.dropout(tape, out, mode);
            let out = self.adapter(tape, bound, out, l, ADAPTER_SLOTS[1])?;
            let res = tape.add(h_attn, out)?;
            h = self.norm(tape, bound, res, &p("ffn.norm"))?;
        }
        Ok(h)
    }

    /// MLM logits `[rows × V]` for the selected rows of `hidden`.
    pub fn mlm_logits(&self, tape: &mut Tape<S>, bound: &Bound, hidden: Var, rows: &[usize]) -> Result<Var> {
        if !self.mlm_head {
            return Err(Error::Config("model has no MLM head".into()));
        }
        let x = tape.gather_rows(hidden, rows)?;
        let logits = if self.config.tie_mlm_weights {
            tape.matmul_ex(x, self.var(bound, "embeddings.token"), true)?
        } else {
            tape.matmul(x, self.var(bound, "head.mlm.weight"))?
        };
        tape.add_bias(logits, self.var(bound, "head.mlm.bias"))
    }

    /// Mean cross-entropy over positions whose label is not ignored.
    /// `labels` has one entry per row of `hidden`.
    pub fn mlm_loss(&self, tape: &mut Tape<S>, bound: &Bound, hidden: Var, labels: &[i64]) -> Result<Var> {
        let rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != crate::autodiff::IGNORE_INDEX)
            .map(|(i, _)| i)
            .collect();
        let targets: Vec<i64> = rows.iter().map(|&i| labels[i]).collect();
        let logits = self.mlm_logits(tape, bound, hidden, &rows)?;
        tape.cross_entropy(logits, &targets)
    }

    /// Task head outputs `[B × k]` read from each sequence's first position.
    pub fn task_output(&self, tape: &mut Tape<S>, bound: &Bound, hidden: Var, batch: &Batch) -> Result<Var> {
        if self.task.is_none() {
            return Err(Error::Config("model has no task head".into()));
        }
        let cls = tape.gather_rows(hidden, &batch.cls_rows())?;
        self.linear(tape, bound, cls, "head.task")
    }

    /// Eval-mode hidden states for a batch.
    pub fn hidden_states(&self, seqs: &[TokenSequence]) -> Result<Tensor<S>> {
        let batch = Batch::from_sequences(seqs)?;
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let h = self.encode(&mut tape, &bound, &batch, &mut Mode::Eval)?;
        Ok(tape.value(h).clone())
    }

    /// Eval-mode MLM logits `[B·T × V]` for every position of a batch.
    pub fn mlm_scores(&self, seqs: &[TokenSequence]) -> Result<Tensor<S>> {
        let batch = Batch::from_sequences(seqs)?;
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let h = self.encode(&mut tape, &bound, &batch, &mut Mode::Eval)?;
        let rows: Vec<usize> = (0..batch.size * batch.seq).collect();
        let out = self.mlm_logits(&mut tape, &bound, h, &rows)?;
        Ok(tape.value(out).clone())
    }

    /// Eval-mode task outputs `[B × k]`.
    pub fn predict(&self, seqs: &[TokenSequence]) -> Result<Tensor<S>> {
        let batch = Batch::from_sequences(seqs)?;
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let h = self.encode(&mut tape, &bound, &batch, &mut Mode::Eval)?;
        let out = self.task_output(&mut tape, &bound, h, &batch)?;
        Ok(tape.value(out).clone())
    }
}

/// One bottleneck adapter on plain tensors: `x + gelu(x·W_d + b_d)·W_u + b_u`.
pub fn adapter_forward<S: Scalar>(
    x: &Tensor<S>,
    w_down: &Tensor<S>,
    b_down: &Tensor<S>,
    w_up: &Tensor<S>,
    b_up: &Tensor<S>,
) -> Result<Tensor<S>> {
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let wd = tape.constant(w_down.clone());
    let bd = tape.constant(b_down.clone());
    let wu = tape.constant(w_up.clone());
    let bu = tape.constant(b_up.clone());
    let down = tape.linear(xv, wd, bd)?;
    let act = tape.gelu(down);
    let up = tape.linear(act, wu, bu)?;
    let out = tape.add(xv, up)?;
    Ok(tape.value(out).clone())
}
