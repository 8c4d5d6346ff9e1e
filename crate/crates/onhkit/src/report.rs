//! CSV and SVG outputs.

use std::fmt::Write;

use onhkit_core::eval::{fold_stats, ConfusionMatrix, Metrics, RocCurve};
use onhkit_core::optimizer::EpochReport;

use crate::error::{CliError, Result};
use crate::manifest::{label_name, parse_label};

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory csv")
}

fn f6(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6}")
    }
}

/// One row per climber per epoch.
pub fn history_csv(history: &[EpochReport]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "epoch",
        "climber_id",
        "mode",
        "val_accuracy",
        "val_loss",
        "survivor_flag",
        "iterations",
        "stop_reason",
    ])
    .expect("in-memory csv");
    for e in history {
        for c in &e.climbers {
            w.write_record([
                e.epoch.to_string(),
                c.id.to_string(),
                c.mode.name().to_string(),
                f6(c.val_accuracy),
                f6(c.val_loss),
                u8::from(c.id == e.survivor).to_string(),
                e.iterations.to_string(),
                e.stopped.map_or(String::new(), |s| s.name().to_string()),
            ])
            .expect("in-memory csv");
        }
    }
    finish(w)
}

pub fn roc_csv(roc: &RocCurve) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(["threshold", "fpr", "tpr"]).expect("in-memory csv");
    for p in &roc.points {
        w.write_record([f6(p.threshold), f6(p.fpr), f6(p.tpr)])
            .expect("in-memory csv");
    }
    w.write_record(["auc".to_string(), f6(roc.auc)]).expect("in-memory csv");
    finish(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRow {
    pub fold: usize,
    pub metrics: Metrics,
    pub auc: f64,
}

/// Per-fold metrics followed by `mean` and `sd` rows.
pub fn folds_csv(rows: &[FoldRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "accuracy", "sensitivity", "specificity", "auc"])
        .expect("in-memory csv");
    for r in rows {
        w.write_record([
            r.fold.to_string(),
            f6(r.metrics.accuracy),
            f6(r.metrics.sensitivity),
            f6(r.metrics.specificity),
            f6(r.auc),
        ])
        .expect("in-memory csv");
    }
    let cols: [Vec<f64>; 4] = [
        rows.iter().map(|r| r.metrics.accuracy).collect(),
        rows.iter().map(|r| r.metrics.sensitivity).collect(),
        rows.iter().map(|r| r.metrics.specificity).collect(),
        rows.iter().map(|r| r.auc).collect(),
    ];
    let stats = cols
        .iter()
        .map(|c| fold_stats(c).map_err(|e| CliError::core("fold statistics", e)))
        .collect::<Result<Vec<_>>>()?;
    w.write_record(std::iter::once("mean".to_string()).chain(stats.iter().map(|s| f6(s.0))))
        .expect("in-memory csv");
    w.write_record(std::iter::once("sd".to_string()).chain(stats.iter().map(|s| f6(s.1))))
        .expect("in-memory csv");
    Ok(finish(w))
}

pub fn confusion_csv(rows: &[(f64, ConfusionMatrix, Metrics)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "threshold",
        "tp",
        "fn",
        "tn",
        "fp",
        "accuracy",
        "sensitivity",
        "specificity",
    ])
    .expect("in-memory csv");
    for (t, cm, m) in rows {
        w.write_record([
            f6(*t),
            cm.tp.to_string(),
            cm.fn_.to_string(),
            cm.tn.to_string(),
            cm.fp.to_string(),
            f6(m.accuracy),
            f6(m.sensitivity),
            f6(m.specificity),
        ])
        .expect("in-memory csv");
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropRow {
    pub file: String,
    pub cx: usize,
    pub cy: usize,
    pub fallback_used: bool,
}

pub fn crop_report_csv(rows: &[CropRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["file", "cx", "cy", "fallback_used"])
        .expect("in-memory csv");
    for r in rows {
        w.write_record([
            r.file.clone(),
            r.cx.to_string(),
            r.cy.to_string(),
            r.fallback_used.to_string(),
        ])
        .expect("in-memory csv");
    }
    finish(w)
}

/// `score,label` rows, labels as words.
pub fn scores_csv(scores: &[f64], labels: &[usize]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["score", "label"]).expect("in-memory csv");
    for (s, &l) in scores.iter().zip(labels) {
        w.write_record([format!("{s:.17}"), label_name(l).to_string()])
            .expect("in-memory csv");
    }
    finish(w)
}

/// Parses `score,label`; labels may be words or 0/1.
pub fn parse_scores(bytes: &[u8], origin: &std::path::Path) -> Result<(Vec<f64>, Vec<usize>)> {
    let err = |line: u64, message: String| CliError::Parse {
        file: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["score", "label"] {
        return Err(err(1, "expected header score,label".into()));
    }
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let score = rec[0]
            .parse::<f64>()
            .ok()
            .filter(|s| s.is_finite())
            .ok_or_else(|| err(line, format!("score {:?} is not a finite number", &rec[0])))?;
        let label = match &rec[1] {
            "0" => 0,
            "1" => 1,
            word => parse_label(word).ok_or_else(|| err(line, format!("label {word:?} is not normal/glaucoma/0/1")))?,
        };
        scores.push(score);
        labels.push(label);
    }
    Ok((scores, labels))
}

/// Standalone SVG with unit axes, the ROC polyline and the AUC.
pub fn roc_svg(roc: &RocCurve) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let px = |v: f64| PAD + v * SIZE;
    let py = |v: f64| PAD + (1.0 - v) * SIZE;
    let total = SIZE + 2.0 * PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(s, r#"<rect width="{total}" height="{total}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y0} L{x1} {y0} M{x0} {y0} L{x0} {y1}" stroke="black" fill="none"/>"#,
        x0 = px(0.0),
        y0 = py(0.0),
        x1 = px(1.0),
        y1 = py(1.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for t in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{t}</text>"#,
            px(t),
            py(0.0) + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{t}</text>"#,
            px(0.0) - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">False positive rate</text>"#,
        px(0.5),
        total - 6.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 12 {})">True positive rate</text>"#,
        py(0.5),
        py(0.5)
    );
    let points: Vec<String> = roc
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" stroke="crimson" stroke-width="2" fill="none"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="end">AUC = {:.3}</text>"#,
        px(1.0),
        py(0.0) - 10.0,
        roc.auc
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use onhkit_core::eval::roc_auc;

    #[test]
    fn roc_csv_layout() {
        let roc = roc_auc(&[0.9, 0.1], &[1, 0]).unwrap();
        let text = String::from_utf8(roc_csv(&roc)).unwrap();
        assert_eq!(
            text,
            "threshold,fpr,tpr\ninf,0.000000,0.000000\n0.900000,0.000000,1.000000\n0.100000,1.000000,1.000000\nauc,1.000000\n"
        );
    }

    #[test]
    fn svg_of_separable_scores_hits_the_corner() {
        let roc = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        let svg = roc_svg(&roc);
        assert!(svg.contains("AUC = 1.000"));
        assert!(svg.contains("40.00,40.00"), "(0, 1) maps to the top-left corner");
    }

    #[test]
    fn scores_round_trip_and_errors() {
        let bytes = scores_csv(&[0.25, 0.75], &[0, 1]);
        let (s, l) = parse_scores(&bytes, std::path::Path::new("s.csv")).unwrap();
        assert_eq!((s, l), (vec![0.25, 0.75], vec![0, 1]));
        let err = parse_scores(b"label,score\n1,0.5\n", std::path::Path::new("s.csv")).unwrap_err();
        assert!(err.to_string().contains("s.csv:1"), "{err}");
        let err = parse_scores(b"score,label\n0.5,1\nhigh,0\n", std::path::Path::new("s.csv")).unwrap_err();
        assert!(err.to_string().contains("s.csv:3"), "{err}");
    }

    #[test]
    fn folds_have_mean_and_sd_rows() {
        let m = Metrics {
            accuracy: 0.5,
            sensitivity: 1.0,
            specificity: 0.0,
        };
        let rows: Vec<FoldRow> = (0..5)
            .map(|fold| FoldRow {
                fold,
                metrics: m,
                auc: 0.5,
            })
            .collect();
        let text = String::from_utf8(folds_csv(&rows).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 5 + 2);
        assert!(text.ends_with("sd,0.000000,0.000000,0.000000,0.000000\n"));
    }
}
