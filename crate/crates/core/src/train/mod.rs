//! MLM masking, the optimizer and the two training regimes.
//!
//! Randomness comes from independent per-purpose streams (masking, dropout,
//! shuffling) keyed by step or epoch, so a run is reproducible from its seed
//! and the 64-bit build produces bit-identical loss curves.

mod finetune;
mod masking;
mod optim;
mod pretrain;

pub use finetune::{
    encode_examples, finetune, grid_report_tsv, predict, FinetuneConfig, FinetuneGrid,
    FinetuneOutcome, GridCell,
};
pub use masking::{mask_batch, mask_ids, MaskingConfig};
pub use optim::{adam_step, AdamState, OptimizerConfig};
pub use pretrain::{
    encode_corpus, mlm_eval_loss, pretrain_adapters, pretrain_base, write_loss_log, LossRecord,
    PretrainConfig, PretrainOutcome,
};
