//! Evaluation report as JSON lines. Every line carries a `record` tag:
//! `metrics`, `topic`, `kde` (curve summary) or `kde_point`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::json;

use super::kde::KdeCurve;
use super::metrics::{ConfusionMatrix, MetricsReport};
use super::per_topic::PerTopicAccuracy;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub name: String,
    pub n_messages: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub per_topic: Option<PerTopicAccuracy>,
    pub kde: Option<KdeCurve>,
}

pub fn write_report<W: Write>(mut w: W, report: &EvalReport) -> io::Result<()> {
    let mut line = |v: serde_json::Value| -> io::Result<()> {
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")
    };
    let m = &report.metrics;
    line(json!({
        "record": "metrics",
        "name": report.name,
        "n": report.n_messages,
        "accuracy": m.accuracy,
        "sensitivity": m.sensitivity,
        "specificity": m.specificity,
        "precision": m.precision,
        "f1": m.f1,
        "confusion": report.confusion,
    }))?;
    if let Some(p) = &report.per_topic {
        for r in &p.rows {
            line(json!({"record": "topic", "topic": r.topic, "n": r.n, "accuracy": r.accuracy}))?;
        }
        line(json!({"record": "topic_summary", "topics": p.rows.len(), "above_threshold": p.above_threshold}))?;
    }
    if let Some(k) = &report.kde {
        line(json!({
            "record": "kde",
            "bandwidth": k.bandwidth,
            "n_samples": k.n_samples,
            "peak_count": k.peak_count,
        }))?;
        for (x, d) in k.grid.iter().zip(&k.density) {
            line(json!({"record": "kde_point", "x": x, "density": d}))?;
        }
    }
    Ok(())
}

/// Fixed-width table with the metric columns in publication order.
pub fn format_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricsReport)>) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    let mut out = format!(
        "{:<12} {:>9} {:>11} {:>11} {:>9} {:>9}\n",
        "experiment", "accuracy", "sensitivity", "specificity", "precision", "f1"
    );
    for (name, m) in rows {
        out.push_str(&format!(
            "{:<12} {:>9} {:>11} {:>11} {:>9} {:>9}\n",
            name,
            cell(Some(m.accuracy)),
            cell(m.sensitivity),
            cell(m.specificity),
            cell(m.precision),
            cell(m.f1)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::evaluation::{confusion, kde, metrics, per_topic_accuracy};

    #[test]
    fn record_layout() {
        let preds = [Label::Clinical, Label::Admin, Label::Admin];
        let golds = [Label::Clinical, Label::Admin, Label::Clinical];
        let c = confusion(&preds, &golds, Label::Clinical).unwrap();
        let report = EvalReport {
            name: "test".into(),
            n_messages: 3,
            confusion: c,
            metrics: metrics(&c).unwrap(),
            per_topic: Some(per_topic_accuracy(&preds, &golds, &[Some(0), Some(0), Some(1)]).unwrap()),
            kde: Some(kde(&[0.9, 0.2, 0.4]).unwrap()),
        };
        let mut buf = Vec::new();
        write_report(&mut buf, &report).unwrap();
        let lines: Vec<serde_json::Value> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[0]["record"], "metrics");
        assert_eq!(lines[0]["confusion"]["fn"], 1);
        assert_eq!(lines.iter().filter(|l| l["record"] == "topic").count(), 2);
        assert_eq!(lines.iter().filter(|l| l["record"] == "kde_point").count(), 512);
    }

    #[test]
    fn undefined_cells_print_as_na() {
        let m = MetricsReport {
            accuracy: 1.0,
            sensitivity: None,
            specificity: Some(1.0),
            precision: None,
            f1: None,
        };
        let t = format_table([("E4", &m)]);
        assert!(t.lines().nth(1).unwrap().contains("n/a"));
    }
}
