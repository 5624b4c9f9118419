use std::fmt::Write as _;

use serde::Serialize;

use super::config::{AdapterConfig, ModelConfig};
use super::params::{ParamSpec, Section};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub name: String,
    pub shape: Vec<usize>,
    pub count: usize,
    pub section: Section,
    pub trainable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdapterAudit {
    pub hidden: usize,
    pub size: usize,
    pub adapters: usize,
    pub per_adapter: usize,
    pub total: usize,
    /// `H / m`, the bottleneck compression factor.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub total: usize,
    pub trainable: usize,
    pub base: usize,
    pub adapter: usize,
    pub head: usize,
    pub adapters: Option<AdapterAudit>,
}

/// Tallies parameter counts from specs, so full-size shapes can be audited
/// without allocating any weights.
pub fn audit(
    specs: &[ParamSpec],
    trainable: impl Fn(&ParamSpec) -> bool,
    config: &ModelConfig,
    adapter: Option<&AdapterConfig>,
) -> AuditReport {
    let rows: Vec<AuditRow> = specs
        .iter()
        .map(|s| AuditRow {
            name: s.name.clone(),
            shape: s.shape.clone(),
            count: s.count(),
            section: s.section,
            trainable: trainable(s),
        })
        .collect();
    let sum = |f: &dyn Fn(&AuditRow) -> bool| rows.iter().filter(|r| f(r)).map(|r| r.count).sum();
    let adapter_total: usize = sum(&|r| r.section == Section::Adapter);
    let adapters = adapter.map(|a| {
        let n = 2 * config.layers;
        AdapterAudit {
            hidden: config.hidden,
            size: a.size,
            adapters: n,
            per_adapter: a.params_per_adapter(config.hidden),
            total: adapter_total,
            ratio: config.hidden as f64 / a.size as f64,
        }
    });
    AuditReport {
        total: sum(&|_| true),
        trainable: sum(&|r| r.trainable),
        base: sum(&|r| r.section == Section::Base),
        adapter: adapter_total,
        head: sum(&|r| r.section == Section::Head),
        adapters,
        rows,
    }
}

impl AuditReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("name\tshape\tcount\tsection\ttrainable\n");
        for r in &self.rows {
            let shape: Vec<String> = r.shape.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:?}\t{}",
                r.name,
                shape.join("x"),
                r.count,
                r.section,
                r.trainable
            );
        }
        let _ = writeln!(s, "total\t\t{}\t\t", self.total);
        let _ = writeln!(s, "trainable\t\t{}\t\t", self.trainable);
        s
    }
}
