use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::{AblationRow, ConfidenceHistogram, ConfusionMatrix, EvaluationReport, PredictionRecord, HISTOGRAM_BINS};
use crate::diet::LossBreakdown;

fn to_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("inputs are utf-8")
}

fn fixed4(v: f64) -> String {
    format!("{v:.4}")
}

/// `pipeline,accuracy,precision,recall,f1`, one row per configuration that
/// finished. Values are fractions with four decimals.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    to_csv(
        &["pipeline", "accuracy", "precision", "recall", "f1"],
        rows.iter().filter_map(|r| {
            let m = r.outcome.as_ref().ok()?.metrics;
            Some(vec![
                r.pipeline.clone(),
                fixed4(m.accuracy),
                fixed4(m.weighted_precision),
                fixed4(m.weighted_recall),
                fixed4(m.weighted_f1),
            ])
        }),
    )
}

/// Every configuration with its status, the published reference numbers
/// and the entity scores.
pub fn ablation_status_csv(rows: &[AblationRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
    to_csv(
        &[
            "pipeline",
            "status",
            "error",
            "split_hash",
            "reference_accuracy",
            "reference_f1",
            "entity_precision",
            "entity_recall",
            "entity_f1",
        ],
        rows.iter().map(|r| {
            let (status, error, entities) = match &r.outcome {
                Ok(rep) => ("ok", String::new(), Some(rep.entities)),
                Err(e) => ("failed", e.clone(), None),
            };
            vec![
                r.pipeline.clone(),
                status.to_string(),
                error,
                r.split_hash.clone(),
                opt(r.reference.map(|x| x.accuracy)),
                opt(r.reference.map(|x| x.f1)),
                entities.map(|e| fixed4(e.precision)).unwrap_or_default(),
                entities.map(|e| fixed4(e.recall)).unwrap_or_default(),
                entities.map(|e| fixed4(e.f1)).unwrap_or_default(),
            ]
        }),
    )
}

/// Header row is `gold\predicted` then the labels; one row per gold label.
pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut header = vec!["gold\\predicted"];
    header.extend(cm.labels.iter().map(String::as_str));
    to_csv(
        &header,
        cm.labels.iter().zip(&cm.counts).map(|(label, row)| {
            std::iter::once(label.clone())
                .chain(row.iter().map(u64::to_string))
                .collect::<Vec<_>>()
        }),
    )
}

pub fn histogram_csv(h: &ConfidenceHistogram) -> String {
    to_csv(
        &["bin_lo", "bin_hi", "correct", "wrong"],
        (0..HISTOGRAM_BINS).map(|i| {
            let (lo, hi) = ConfidenceHistogram::edges(i);
            vec![format!("{lo:.2}"), format!("{hi:.2}"), h.correct[i].to_string(), h.wrong[i].to_string()]
        }),
    )
}

pub fn loss_csv(curve: &[LossBreakdown]) -> String {
    to_csv(
        &["epoch", "intent_loss", "entity_loss", "total_loss"],
        curve.iter().enumerate().map(|(i, l)| {
            vec![
                (i + 1).to_string(),
                format!("{:.6}", l.intent),
                format!("{:.6}", l.entity),
                format!("{:.6}", l.total),
            ]
        }),
    )
}

pub fn predictions_csv(records: &[PredictionRecord]) -> String {
    to_csv(
        &["text", "gold", "predicted", "confidence", "correct"],
        records.iter().map(|r| {
            vec![
                r.text.clone(),
                r.gold.clone(),
                r.predicted.clone(),
                format!("{:.4}", r.confidence),
                r.correct().to_string(),
            ]
        }),
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Heatmap with cell shade proportional to the row-normalised count.
pub fn confusion_svg(cm: &ConfusionMatrix) -> String {
    let n = cm.labels.len();
    let (cell, margin) = (28usize, 170usize);
    let size = margin + n * cell + 10;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, label) in cm.labels.iter().enumerate() {
        let pos = margin + i * cell + cell / 2;
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, margin - 4, pos + 3, escape(label));
        let _ = writeln!(
            svg,
            r#"<text transform="translate({pos},{}) rotate(-60)" text-anchor="start">{}</text>"#,
            margin - 4,
            escape(label)
        );
    }
    for (r, row) in cm.counts.iter().enumerate() {
        let support: u64 = row.iter().sum();
        for (c, &count) in row.iter().enumerate() {
            let shade = if support == 0 { 0.0 } else { count as f64 / support as f64 };
            let level = (255.0 * (1.0 - shade)).round() as u8;
            let (x, y) = (margin + c * cell, margin + r * cell);
            let _ = writeln!(
                svg,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({level},{level},255)" stroke="#ccc"/>"##
            );
            if count > 0 {
                let fill = if shade > 0.5 { "white" } else { "black" };
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" text-anchor="middle" fill="{fill}">{count}</text>"#,
                    x + cell / 2,
                    y + cell / 2 + 3
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Stacked bars, correct below wrong, one per confidence bin.
pub fn histogram_svg(h: &ConfidenceHistogram) -> String {
    let (bar, height, base) = (24usize, 200.0, 230usize);
    let peak = (0..HISTOGRAM_BINS).map(|i| h.correct[i] + h.wrong[i]).max().unwrap_or(0).max(1) as f64;
    let width = 40 + HISTOGRAM_BINS * bar;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{}" font-family="sans-serif" font-size="9">"#,
        base + 30
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for i in 0..HISTOGRAM_BINS {
        let x = 30 + i * bar;
        let ok = height * h.correct[i] as f64 / peak;
        let bad = height * h.wrong[i] as f64 / peak;
        let _ = writeln!(
            svg,
            r##"<rect x="{x}" y="{:.1}" width="{}" height="{ok:.1}" fill="#2a9d8f"/>"##,
            base as f64 - ok,
            bar - 2
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{x}" y="{:.1}" width="{}" height="{bad:.1}" fill="#e76f51"/>"##,
            base as f64 - ok - bad,
            bar - 2
        );
        if i % 4 == 0 {
            let _ = writeln!(svg, r#"<text x="{x}" y="{}">{:.1}</text>"#, base + 12, ConfidenceHistogram::edges(i).0);
        }
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}">1.0</text>"#, 30 + HISTOGRAM_BINS * bar - 8, base + 12);
    svg.push_str("</svg>\n");
    svg
}

/// Writes the CSV and SVG artifacts of one evaluation into `dir`.
pub fn write_report_dir(report: &EvaluationReport, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let m = report.metrics;
    let metrics = to_csv(
        &["pipeline", "accuracy", "precision", "recall", "f1"],
        [vec![
            report.pipeline.clone(),
            fixed4(m.accuracy),
            fixed4(m.weighted_precision),
            fixed4(m.weighted_recall),
            fixed4(m.weighted_f1),
        ]],
    );
    std::fs::write(dir.join("metrics.csv"), metrics)?;
    std::fs::write(dir.join("confusion.csv"), confusion_csv(&report.confusion))?;
    std::fs::write(dir.join("confusion.svg"), confusion_svg(&report.confusion))?;
    std::fs::write(dir.join("histogram.csv"), histogram_csv(&report.histogram))?;
    std::fs::write(dir.join("histogram.svg"), histogram_svg(&report.histogram))?;
    std::fs::write(dir.join("loss.csv"), loss_csv(&report.loss_curve))?;
    std::fs::write(dir.join("predictions.csv"), predictions_csv(&report.predictions))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{confidence_histogram, confusion, weighted_metrics, EntityMetrics};
    use super::*;

    fn sample() -> EvaluationReport {
        let labels: Vec<String> = ["a", "b", "c,d"].iter().map(|s| s.to_string()).collect();
        let cm = confusion(&["a", "b", "c,d"], &["a", "a", "c,d"], &labels).unwrap();
        EvaluationReport {
            pipeline: "P1".into(),
            split_hash: "00".into(),
            metrics: weighted_metrics(&cm).unwrap(),
            histogram: confidence_histogram(&[(true, 0.9), (false, 0.2), (true, 1.0)]),
            confusion: cm,
            entities: EntityMetrics {
                precision: 1.0,
                recall: 0.5,
                f1: 2.0 / 3.0,
                gold: 2,
                predicted: 1,
            },
            loss_curve: vec![],
            predictions: vec![],
        }
    }

    #[test]
    fn ablation_table_shape() {
        let ok = AblationRow {
            pipeline: "P1".into(),
            split_hash: "00".into(),
            reference: None,
            outcome: Ok(sample()),
        };
        let failed = AblationRow {
            outcome: Err("boom".into()),
            pipeline: "P2".into(),
            ..ok.clone()
        };
        let csv = ablation_csv(&[ok.clone(), failed.clone()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "pipeline,accuracy,precision,recall,f1");
        assert_eq!(lines[1], "P1,0.6667,0.5000,0.6667,0.5556");
        assert_eq!(lines.len(), 2);
        let status = ablation_status_csv(&[ok, failed]);
        assert!(status.lines().nth(2).unwrap().starts_with("P2,failed,boom,"));
    }

    #[test]
    fn confusion_and_histogram_tables() {
        let r = sample();
        let csv = confusion_csv(&r.confusion);
        assert_eq!(csv.lines().next().unwrap(), "gold\\predicted,a,b,\"c,d\"");
        assert_eq!(csv.lines().nth(2).unwrap(), "b,1,0,0");
        let h = histogram_csv(&r.histogram);
        assert_eq!(h.lines().count(), HISTOGRAM_BINS + 1);
        assert_eq!(h.lines().nth(1).unwrap(), "0.00,0.05,0,0");
        assert_eq!(h.lines().last().unwrap(), "0.95,1.00,1,0");
        assert!(confusion_svg(&r.confusion).ends_with("</svg>\n"));
        assert!(histogram_svg(&r.histogram).contains("<rect"));
    }

    #[test]
    fn report_dir_has_every_artifact() {
        let dir = std::env::temp_dir().join(format!("bnlu-report-{}", std::process::id()));
        write_report_dir(&sample(), &dir).unwrap();
        for f in ["metrics.csv", "confusion.csv", "confusion.svg", "histogram.csv", "histogram.svg", "loss.csv", "predictions.csv"] {
            assert!(dir.join(f).exists(), "{f}");
        }
        std::fs::remove_dir_all(dir).unwrap();
    }
}
