use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::{adam_step, AdamState, OptimizerConfig};
use crate::autodiff::{Scalar, Tape, Tensor};
use crate::error::{Error, Result};
use crate::eval::{diagnostic_breakdown, LabeledExample, Metric};
use crate::model::{Batch, Mode, Model, TaskHead};
use crate::rng::{stream_rng, Stream, DEFAULT_SEED};
use crate::tokenizer::{encode, TokenSequence, Vocabulary, DEFAULT_MAX_LEN};

/// Learning rates × epoch counts, searched exhaustively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneGrid {
    pub learning_rates: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for FinetuneGrid {
    fn default() -> Self {
        Self::paper()
    }
}

impl FinetuneGrid {
    /// {2e-5, 3e-5} × {3, 4}.
    pub fn paper() -> Self {
        FinetuneGrid {
            learning_rates: vec![2e-5, 3e-5],
            epochs: vec![3, 4],
        }
    }

    /// Cells in learning-rate-major order.
    pub fn cells(&self) -> Vec<(f64, usize)> {
        self.learning_rates
            .iter()
            .flat_map(|&lr| self.epochs.iter().map(move |&e| (lr, e)))
            .collect()
    }
}

fn d_batch() -> usize {
    16
}
fn d_max_len() -> usize {
    DEFAULT_MAX_LEN
}
fn d_warmup() -> f64 {
    0.1
}
fn d_decay() -> f64 {
    0.01
}
fn d_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub task: TaskHead,
    pub metric: Metric,
    #[serde(default)]
    pub grid: FinetuneGrid,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_max_len")]
    pub max_len: usize,
    /// Fraction of each cell's steps spent warming up.
    #[serde(default = "d_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "d_decay")]
    pub weight_decay: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Keep base parameters fixed; by default everything trains.
    #[serde(default)]
    pub freeze_base: bool,
}

impl FinetuneConfig {
    pub fn new(task: TaskHead, metric: Metric) -> Self {
        FinetuneConfig {
            task,
            metric,
            grid: FinetuneGrid::paper(),
            batch_size: d_batch(),
            max_len: d_max_len(),
            warmup_fraction: d_warmup(),
            weight_decay: d_decay(),
            seed: d_seed(),
            freeze_base: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub learning_rate: f64,
    pub epochs: usize,
    pub steps: u64,
    pub final_train_loss: f64,
    pub dev_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinetuneOutcome<S: Scalar> {
    pub model: Model<S>,
    pub best: usize,
    pub cells: Vec<GridCell>,
}

pub fn grid_report_tsv(cells: &[GridCell], best: usize, metric: Metric) -> String {
    let mut s = format!("learning_rate\tepochs\tsteps\tfinal_train_loss\tdev_{}\tselected\n", metric.name());
    for (i, c) in cells.iter().enumerate() {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.learning_rate,
            c.epochs,
            c.steps,
            c.final_train_loss,
            c.dev_score,
            i == best
        );
    }
    s
}

pub fn encode_examples(examples: &[LabeledExample], vocab: &Vocabulary, max_len: usize) -> Result<Vec<TokenSequence>> {
    examples
        .iter()
        .map(|e| encode(&e.text_a, vocab, max_len, e.text_b.as_deref()))
        .collect()
}

fn targets(examples: &[&LabeledExample], task: &TaskHead) -> Result<(Vec<i64>, Vec<f64>)> {
    match task {
        TaskHead::Classification { num_labels } => {
            let ids = examples
                .iter()
                .map(|e| {
                    let c = e.class()?;
                    if c >= *num_labels {
                        return Err(Error::Data(format!("label {c} outside {num_labels} classes")));
                    }
                    Ok(c as i64)
                })
                .collect::<Result<_>>()?;
            Ok((ids, Vec::new()))
        }
        TaskHead::Regression => Ok((Vec::new(), examples.iter().map(|e| e.label).collect())),
    }
}

/// Class ids (classification) or values (regression) in eval mode. Batches
/// are scored on separate threads against the same parameters.
pub fn predict<S: Scalar>(
    model: &Model<S>,
    examples: &[LabeledExample],
    vocab: &Vocabulary,
    max_len: usize,
    batch_size: usize,
) -> Result<Vec<f64>> {
    let seqs = encode_examples(examples, vocab, max_len)?;
    let chunks: Vec<&[TokenSequence]> = seqs.chunks(batch_size.max(1)).collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(chunks.len()).max(1);
    let per = chunks.len().div_ceil(threads);
    let results: Vec<Result<Vec<Tensor<S>>>> = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .chunks(per.max(1))
            .map(|group| s.spawn(move || group.iter().map(|c| model.predict(c)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("prediction thread")).collect()
    });
    let mut out = Vec::with_capacity(examples.len());
    for group in results {
        for t in group? {
            let k = t.cols();
            for row in t.data().chunks(k) {
                out.push(if k == 1 && model.task() == Some(&TaskHead::Regression) {
                    row[0].to_f64().unwrap()
                } else {
                    argmax(row) as f64
                });
            }
        }
    }
    Ok(out)
}

fn argmax<S: Scalar>(row: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

fn train_cell<S: Scalar>(
    model: &mut Model<S>,
    seqs: &[TokenSequence],
    train: &[LabeledExample],
    cfg: &FinetuneConfig,
    lr: f64,
    epochs: usize,
) -> Result<(u64, f64)> {
    let per_epoch = train.len().div_ceil(cfg.batch_size) as u64;
    let total = per_epoch * epochs as u64;
    let opt = OptimizerConfig {
        peak_lr: lr,
        warmup_steps: (total as f64 * cfg.warmup_fraction).round() as u64,
        total_steps: total,
        weight_decay: cfg.weight_decay,
        batch_size: cfg.batch_size,
        ..OptimizerConfig::default()
    };
    opt.validate()?;
    let mut state = AdamState::new(model.store());
    let mut step = 0u64;
    let mut last_loss = f64::NAN;
    for epoch in 0..epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, Stream::Shuffle, epoch as u64));
        let (mut sum, mut n) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            let picks: Vec<TokenSequence> = idx.iter().map(|&i| seqs[i].clone()).collect();
            let exs: Vec<&LabeledExample> = idx.iter().map(|&i| &train[i]).collect();
            let batch = Batch::from_sequences(&picks)?;
            let mut tape = Tape::new();
            let bound = model.bind(&mut tape, false);
            let mut dropout = stream_rng(cfg.seed, Stream::Dropout, step);
            let h = model.encode(&mut tape, &bound, &batch, &mut Mode::Train(&mut dropout))?;
            let out = model.task_output(&mut tape, &bound, h, &batch)?;
            let (ids, values) = targets(&exs, &cfg.task)?;
            let loss = match cfg.task {
                TaskHead::Classification { .. } => tape.cross_entropy(out, &ids)?,
                TaskHead::Regression => {
                    let v: Vec<S> = values.iter().map(|&x| S::lit(x)).collect();
                    tape.mse(out, &v)?
                }
            };
            sum += tape.value(loss).item().to_f64().unwrap();
            n += 1;
            let mut grads = tape.backward(loss)?;
            let grads: Vec<_> = bound.vars().iter().map(|&v| grads.take(v)).collect();
            adam_step(model.store_mut(), &grads, &mut state, opt.lr_at(step), &opt)?;
            step += 1;
        }
        last_loss = sum / n.max(1) as f64;
    }
    Ok((step, last_loss))
}

/// Trains one fresh task head per grid cell, scores each on the dev split
/// and keeps the best (the earliest cell wins ties).
pub fn finetune<S: Scalar>(
    base: &Model<S>,
    train: &[LabeledExample],
    dev: &[LabeledExample],
    vocab: &Vocabulary,
    cfg: &FinetuneConfig,
) -> Result<FinetuneOutcome<S>> {
    if dev.is_empty() {
        return Err(Error::Data("dev split is empty".into()));
    }
    if train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if cfg.grid.cells().is_empty() {
        return Err(Error::Config("fine-tuning grid is empty".into()));
    }
    if cfg.task == TaskHead::Regression && !cfg.metric.is_regression() {
        return Err(Error::Config("regression tasks are selected by spearman".into()));
    }
    let classes = cfg.task.outputs();
    let seqs = encode_examples(train, vocab, cfg.max_len)?;
    let mut best: Option<(usize, f64, Model<S>)> = None;
    let mut cells = Vec::new();
    for (i, (lr, epochs)) in cfg.grid.cells().into_iter().enumerate() {
        let mut model = base.clone();
        if model.has_mlm_head() {
            model.drop_mlm_head();
        }
        model.set_task_head(cfg.task, cfg.seed)?;
        if cfg.freeze_base {
            model.freeze_base();
        } else {
            model.unfreeze_all();
        }
        let (steps, loss) = train_cell(&mut model, &seqs, train, cfg, lr, epochs)?;
        let preds = predict(&model, dev, vocab, cfg.max_len, cfg.batch_size)?;
        let score = diagnostic_breakdown("", "", dev, &preds, cfg.metric, classes)?.primary;
        let better = best.as_ref().is_none_or(|(_, s, _)| score > *s);
        cells.push(GridCell {
            learning_rate: lr,
            epochs,
            steps,
            final_train_loss: loss,
            dev_score: score,
        });
        if better {
            best = Some((i, score, model));
        }
    }
    let (best, _, model) = best.expect("grid is non-empty");
    Ok(FinetuneOutcome { model, best, cells })
}
