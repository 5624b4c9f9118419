use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dataset::{class_id, LabeledExample, Tag};
use super::metrics::{spearman_corr, ConfusionMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mcc,
    Accuracy,
    F1,
    Spearman,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mcc => "mcc",
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::Spearman => "spearman",
        }
    }

    /// The headline metric reported for a GLUE-style task name. Unknown
    /// names fall back to accuracy.
    pub fn for_task(task: &str) -> Metric {
        match task.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cola" | "diag" | "ax" => Metric::Mcc,
            "mrpc" | "qqp" => Metric::F1,
            "stsb" => Metric::Spearman,
            _ => Metric::Accuracy,
        }
    }

    pub fn is_regression(self) -> bool {
        self == Metric::Spearman
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagResult {
    pub count: usize,
    /// Absent for subsets with fewer than two examples.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub task: String,
    pub metric: Metric,
    pub examples: usize,
    pub primary: f64,
    pub overall: BTreeMap<Metric, f64>,
    pub tags: BTreeMap<Tag, TagResult>,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub const NOTE_MULTICLASS_MCC: &str = "mcc uses the multi-class confusion-matrix form";
pub const NOTE_ZERO_VARIANCE: &str = "spearman undefined (constant ranks); reported as 0";

struct Scored {
    value: f64,
    zero_variance: bool,
}

fn score(metric: Metric, preds: &[f64], golds: &[f64], classes: usize) -> Result<Scored> {
    if metric.is_regression() {
        let s = spearman_corr(preds, golds)?;
        return Ok(Scored {
            value: s.rho,
            zero_variance: s.zero_variance,
        });
    }
    let p: Vec<usize> = preds.iter().map(|&v| class_id(v)).collect::<Result<_>>()?;
    let g: Vec<usize> = golds.iter().map(|&v| class_id(v)).collect::<Result<_>>()?;
    let cm = ConfusionMatrix::from_labels(&p, &g, classes)?;
    let value = match metric {
        Metric::Mcc => cm.mcc(),
        Metric::Accuracy => cm.accuracy(),
        Metric::F1 => cm.f1_positive(),
        Metric::Spearman => unreachable!(),
    };
    Ok(Scored {
        value,
        zero_variance: false,
    })
}

/// Scores predictions overall and on each diagnostic tag's subset.
///
/// `classes` is the label count for classification tasks and ignored for
/// regression.
pub fn diagnostic_breakdown(
    model: &str,
    task: &str,
    examples: &[LabeledExample],
    preds: &[f64],
    metric: Metric,
    classes: usize,
) -> Result<EvalReport> {
    if examples.len() != preds.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} examples",
            preds.len(),
            examples.len()
        )));
    }
    if examples.is_empty() {
        return Err(Error::Data("no examples to evaluate".into()));
    }
    let golds: Vec<f64> = examples.iter().map(|e| e.label).collect();
    let mut notes = Vec::new();
    let mut overall = BTreeMap::new();
    let main = score(metric, preds, &golds, classes)?;
    if metric.is_regression() {
        overall.insert(Metric::Spearman, main.value);
    } else {
        for m in [Metric::Accuracy, Metric::Mcc] {
            overall.insert(m, score(m, preds, &golds, classes)?.value);
        }
        if classes == 2 {
            overall.insert(Metric::F1, score(Metric::F1, preds, &golds, classes)?.value);
        } else if metric == Metric::Mcc {
            notes.push(NOTE_MULTICLASS_MCC.to_string());
        }
    }
    let mut zero_variance = main.zero_variance;

    let mut tags = BTreeMap::new();
    for tag in Tag::ALL {
        let idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].tags.contains(&tag)).collect();
        let value = if idx.len() >= 2 {
            let p: Vec<f64> = idx.iter().map(|&i| preds[i]).collect();
            let g: Vec<f64> = idx.iter().map(|&i| golds[i]).collect();
            let s = score(metric, &p, &g, classes)?;
            zero_variance |= s.zero_variance;
            Some(s.value)
        } else {
            None
        };
        tags.insert(tag, TagResult { count: idx.len(), value });
    }
    if zero_variance {
        notes.push(NOTE_ZERO_VARIANCE.to_string());
    }
    Ok(EvalReport {
        model: model.to_string(),
        task: task.to_string(),
        metric,
        examples: examples.len(),
        primary: main.value,
        overall,
        tags,
        notes,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Data(format!("bad report: {e}")))
    }

    /// `scope  metric  count  value`, one row per overall metric and tag.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("scope\tmetric\tcount\tvalue\n");
        for (m, v) in &self.overall {
            let _ = writeln!(s, "overall\t{}\t{}\t{v}", m.name(), self.examples);
        }
        for (t, r) in &self.tags {
            let v = r.value.map_or("NA".to_string(), |v| v.to_string());
            let _ = writeln!(s, "{t}\t{}\t{}\t{v}", self.metric.name(), r.count);
        }
        s
    }

    pub fn tag_value(&self, tag: Tag) -> Option<f64> {
        self.tags.get(&tag).and_then(|r| r.value)
    }
}
