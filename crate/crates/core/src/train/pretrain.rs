use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::masking::{mask_batch, MaskingConfig};
use super::optim::{adam_step, AdamState, OptimizerConfig};
use crate::autodiff::{Scalar, Tape};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Mode, Model, Section};
use crate::rng::{stream_rng, Stream, DEFAULT_SEED};
use crate::tokenizer::{encode, TokenSequence, Vocabulary, DEFAULT_MAX_LEN};

fn d_max_len() -> usize {
    DEFAULT_MAX_LEN
}
fn d_log_every() -> u64 {
    1
}
fn d_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub masking: MaskingConfig,
    #[serde(default = "d_max_len")]
    pub max_len: usize,
    /// Update counts after which an adapter checkpoint is taken.
    #[serde(default)]
    pub snapshot_steps: BTreeSet<u64>,
    #[serde(default = "d_log_every")]
    pub log_every: u64,
    /// Seeds the shuffling and dropout streams.
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            optimizer: OptimizerConfig::default(),
            masking: MaskingConfig::default(),
            max_len: d_max_len(),
            snapshot_steps: BTreeSet::new(),
            log_every: d_log_every(),
            seed: d_seed(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: u64,
    pub loss: f64,
    pub lr: f64,
}

pub fn write_loss_log<W: Write>(log: &[LossRecord], mut w: W) -> Result<()> {
    writeln!(w, "step,loss,lr")?;
    for r in log {
        writeln!(w, "{},{},{}", r.step, r.loss, r.lr)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainOutcome {
    pub log: Vec<LossRecord>,
    /// Adapter-only checkpoints keyed by update count.
    pub snapshots: Vec<(u64, Checkpoint)>,
}

pub fn encode_corpus(corpus: &[String], vocab: &Vocabulary, max_len: usize) -> Result<Vec<TokenSequence>> {
    corpus.iter().map(|l| encode(l, vocab, max_len, None)).collect()
}

/// Endless stream of shuffled epochs over `n` items.
struct EpochSampler {
    seed: u64,
    epoch: u64,
    order: Vec<usize>,
    cursor: usize,
    n: usize,
}

impl EpochSampler {
    fn new(n: usize, seed: u64) -> Self {
        EpochSampler {
            seed,
            epoch: 0,
            order: Vec::new(),
            cursor: 0,
            n,
        }
    }

    fn next(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.order = (0..self.n).collect();
            self.order.shuffle(&mut stream_rng(self.seed, Stream::Shuffle, self.epoch));
            self.epoch += 1;
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }
}

/// MLM loss in eval mode over fixed masked batches, averaged per masked
/// token. Batch `k` uses masking stream `k` of `masking.seed`.
pub fn mlm_eval_loss<S: Scalar>(
    model: &Model<S>,
    seqs: &[TokenSequence],
    masking: &MaskingConfig,
    batch_size: usize,
) -> Result<f64> {
    let (mut total, mut count) = (0.0, 0usize);
    for (k, chunk) in seqs.chunks(batch_size.max(1)).enumerate() {
        let (batch, labels) = mask_batch(chunk, masking, model.config().vocab_size, k as u64)?;
        let n = labels.iter().filter(|&&l| l >= 0).count();
        if n == 0 {
            continue;
        }
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape, false);
        let h = model.encode(&mut tape, &bound, &batch, &mut Mode::Eval)?;
        let loss = model.mlm_loss(&mut tape, &bound, h, &labels)?;
        total += tape.value(loss).item().to_f64().unwrap() * n as f64;
        count += n;
    }
    if count == 0 {
        return Err(Error::Data("no maskable positions in evaluation corpus".into()));
    }
    Ok(total / count as f64)
}

fn run_mlm<S: Scalar>(
    model: &mut Model<S>,
    corpus: &[String],
    vocab: &Vocabulary,
    cfg: &PretrainConfig,
    snapshot: Option<Section>,
) -> Result<PretrainOutcome> {
    cfg.optimizer.validate()?;
    cfg.masking.validate()?;
    if corpus.is_empty() {
        return Err(Error::Data("pretraining corpus is empty".into()));
    }
    if vocab.len() != model.config().vocab_size {
        return Err(Error::Config(format!(
            "vocabulary has {} tokens but the model expects {}",
            vocab.len(),
            model.config().vocab_size
        )));
    }
    let seqs = encode_corpus(corpus, vocab, cfg.max_len)?;
    let opt = &cfg.optimizer;
    let mut state = AdamState::new(model.store());
    let mut sampler = EpochSampler::new(seqs.len(), cfg.seed);
    let mut log = Vec::new();
    let mut snapshots = Vec::new();
    for step in 1..=opt.total_steps {
        let picks: Vec<TokenSequence> = (0..opt.batch_size).map(|_| seqs[sampler.next()].clone()).collect();
        let (batch, labels) = mask_batch(&picks, &cfg.masking, model.config().vocab_size, step - 1)?;
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape, false);
        let mut dropout = stream_rng(cfg.seed, Stream::Dropout, step - 1);
        let h = model.encode(&mut tape, &bound, &batch, &mut Mode::Train(&mut dropout))?;
        let loss = model.mlm_loss(&mut tape, &bound, h, &labels)?;
        let loss_value = tape.value(loss).item().to_f64().unwrap();
        let mut grads = tape.backward(loss)?;
        let grads: Vec<_> = bound.vars().iter().map(|&v| grads.take(v)).collect();
        let lr = opt.lr_at(step - 1);
        adam_step(model.store_mut(), &grads, &mut state, lr, opt)?;
        if (step - 1) % cfg.log_every.max(1) == 0 || step == opt.total_steps {
            log.push(LossRecord {
                step,
                loss: loss_value,
                lr,
            });
        }
        if let (Some(section), true) = (snapshot, cfg.snapshot_steps.contains(&step)) {
            let mut ck = Checkpoint::from_model(&model.cast::<f32>(), &[section], Some(vocab));
            ck.header.metadata.insert("step".into(), step.into());
            snapshots.push((step, ck));
        }
    }
    Ok(PretrainOutcome { log, snapshots })
}

/// Knowledge injection: MLM over shuffled corpus epochs with the base
/// frozen. Only adapters and the MLM head change.
pub fn pretrain_adapters<S: Scalar>(
    model: &mut Model<S>,
    corpus: &[String],
    vocab: &Vocabulary,
    cfg: &PretrainConfig,
) -> Result<PretrainOutcome> {
    if model.adapter_config().is_none() {
        return Err(Error::Config("model has no adapters to train".into()));
    }
    if !model.has_mlm_head() {
        return Err(Error::Config("adapter pretraining needs an MLM head".into()));
    }
    model.freeze_base();
    run_mlm(model, corpus, vocab, cfg, Some(Section::Adapter))
}

/// Plain MLM training of every parameter. Used to give desk-scale encoders
/// some distributional knowledge before adapters are added.
pub fn pretrain_base<S: Scalar>(
    model: &mut Model<S>,
    corpus: &[String],
    vocab: &Vocabulary,
    cfg: &PretrainConfig,
) -> Result<PretrainOutcome> {
    if !model.has_mlm_head() {
        return Err(Error::Config("MLM training needs an MLM head".into()));
    }
    model.unfreeze_all();
    run_mlm(model, corpus, vocab, cfg, None)
}
