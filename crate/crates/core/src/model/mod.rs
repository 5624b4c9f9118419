//! Transformer encoder with bottleneck adapters.
//!
//! Each layer computes, post-norm,
//!
//! ```text
//! h' = LayerNorm(h  + A_att(Attention(h)))
//! h''= LayerNorm(h' + A_ffn(FFN(h')))
//! ```
//!
//! where each adapter is `A(x) = x + gelu(x·W_d + b_d)·W_u + b_u` with
//! `W_d: H×m` and `W_u: m×H`. `W_u` and `b_u` start at zero, so inserting
//! adapters into a trained encoder leaves its outputs unchanged.

mod audit;
mod checkpoint;
mod config;
mod encoder;
mod gradcheck;
mod params;

pub use audit::{audit, AdapterAudit, AuditReport, AuditRow};
pub use checkpoint::{Checkpoint, CheckpointHeader, ParamEntry, FORMAT_VERSION, MAGIC};
pub use config::{AdapterConfig, ModelConfig, TaskHead};
pub use encoder::{adapter_forward, Batch, Bound, Mode, Model};
pub use gradcheck::{mlm_gradient_check, relative_error, GradCheckRow, REL_ERR_FLOOR};
pub use params::{
    adapter_specs, base_specs, mlm_head_specs, task_head_specs, Param, ParamKind, ParamSpec,
    ParamStore, Section, ADAPTER_SLOTS,
};
