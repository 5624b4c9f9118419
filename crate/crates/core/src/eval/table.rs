use std::fmt::Write as _;

use super::dataset::Tag;
use super::report::EvalReport;

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Renders a pipe table with every column maximum in bold. Values are
/// scaled by 100 and printed with one decimal.
fn grid(corner: &str, cols: &[String], rows: &[(String, Vec<Option<f64>>)]) -> String {
    let fmt = |v: f64| format!("{:.1}", v * 100.0);
    let maxima: Vec<Option<String>> = (0..cols.len())
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.1[c])
                .max_by(|a, b| a.total_cmp(b))
                .map(fmt)
        })
        .collect();
    let mut s = format!("| {corner} | {} |\n", cols.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(cols.len() + 1));
    for (label, vals) in rows {
        let cells: Vec<String> = vals
            .iter()
            .zip(&maxima)
            .map(|(v, m)| match v {
                None => "-".to_string(),
                Some(v) => {
                    let t = fmt(*v);
                    if rows.len() > 1 && m.as_deref() == Some(t.as_str()) {
                        format!("**{t}**")
                    } else {
                        t
                    }
                }
            })
            .collect();
        let _ = writeln!(s, "| {label} | {} |", cells.join(" | "));
    }
    s
}

fn category_grid(title: &str, tags: &[Tag], reports: &[EvalReport]) -> Option<String> {
    let rows: Vec<(String, Vec<Option<f64>>)> = reports
        .iter()
        .filter(|r| tags.iter().any(|t| r.tags.get(t).is_some_and(|x| x.count > 0)))
        .map(|r| {
            let mut v: Vec<Option<f64>> = tags.iter().map(|&t| r.tag_value(t)).collect();
            v.push(Some(r.primary));
            (format!("{} ({})", r.model, r.task), v)
        })
        .collect();
    if rows.is_empty() {
        return None;
    }
    let mut cols: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
    cols.push("All".into());
    Some(format!("## {title}\n\n{}", grid("Model", &cols, &rows)))
}

/// Model × task grid of primary metrics, followed by the two diagnostic
/// category grids when any report carries tags.
pub fn render_tables(reports: &[EvalReport]) -> String {
    let models = first_seen(reports.iter().map(|r| r.model.as_str()));
    let tasks = first_seen(reports.iter().map(|r| r.task.as_str()));
    let cols: Vec<String> = tasks
        .iter()
        .map(|t| {
            let m = reports.iter().find(|r| r.task == *t).map(|r| r.metric.name()).unwrap_or("");
            format!("{t} ({m})")
        })
        .collect();
    let rows: Vec<(String, Vec<Option<f64>>)> = models
        .iter()
        .map(|m| {
            let vals = tasks
                .iter()
                .map(|t| {
                    reports
                        .iter()
                        .rev()
                        .find(|r| r.model == *m && r.task == *t)
                        .map(|r| r.primary)
                })
                .collect();
            (m.to_string(), vals)
        })
        .collect();
    let mut out = format!("## Tasks\n\n{}", grid("Model", &cols, &rows));
    let sections = [
        ("Diagnostic categories", &[Tag::LS, Tag::KNO, Tag::LOG, Tag::PAS][..]),
        ("Knowledge subcategories", &[Tag::CS, Tag::World, Tag::NE][..]),
    ];
    for (title, tags) in sections {
        if let Some(g) = category_grid(title, tags, reports) {
            out.push('\n');
            out.push_str(&g);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{diagnostic_breakdown, LabeledExample, Metric};

    fn report(model: &str, task: &str, hits: usize) -> EvalReport {
        let ex: Vec<_> = (0..4).map(|i| LabeledExample::new("x", None, (i % 2) as f64)).collect();
        let preds: Vec<f64> = (0..4).map(|i| if i < hits { (i % 2) as f64 } else { 1.0 - (i % 2) as f64 }).collect();
        diagnostic_breakdown(model, task, &ex, &preds, Metric::Accuracy, 2).unwrap()
    }

    #[test]
    fn single_report_single_row() {
        let t = render_tables(&[report("base", "rte", 3)]);
        assert!(t.contains("| base | 75.0 |"));
        assert!(!t.contains("**"));
    }

    #[test]
    fn maximum_bolded() {
        let t = render_tables(&[report("base", "rte", 2), report("adapters", "rte", 3)]);
        assert!(t.contains("| adapters | **75.0** |"));
        assert!(t.contains("| base | 50.0 |"));
    }
}
