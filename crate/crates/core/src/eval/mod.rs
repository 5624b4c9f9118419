//! Task metrics and diagnostic breakdowns.
//!
//! Degenerate inputs have fixed conventions: MCC and F1 are 0 when their
//! denominators vanish, Spearman is 0 (with a note in the report) when either
//! side has constant ranks.

mod dataset;
mod metrics;
mod report;
mod table;

pub use dataset::{read_tsv, write_tsv, LabeledExample, Tag, TSV_HEADER};
pub use metrics::{
    accuracy, average_ranks, f1_binary, matthews_corr, matthews_corr_multiclass, spearman_corr,
    ConfusionMatrix, Spearman,
};
pub use report::{
    diagnostic_breakdown, EvalReport, Metric, TagResult, NOTE_MULTICLASS_MCC, NOTE_ZERO_VARIANCE,
};
pub use table::render_tables;
