//! CSV tables and SVG plots for evaluation results.
//!
//! Column orders are fixed and floats use Rust's shortest round-trip
//! formatting, so equal inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use ramanscope_core::dcnn::EpochRecord;
use ramanscope_core::eval::{threshold_snr, EvalReport, SweepCurve};
use ramanscope_core::noise::Scenario;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    EmptyInput,
    #[error("{expected} class names for a {got}-class report")]
    ClassCount { expected: usize, got: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn table(header: &[String], rows: &[Vec<String>]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io { path: "<memory>".into(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn check_classes(report: &EvalReport, class_names: &[String]) -> Result<(), ReportError> {
    if report.samples == 0 {
        return Err(ReportError::EmptyInput);
    }
    if report.confusion.classes() != class_names.len() {
        return Err(ReportError::ClassCount { expected: class_names.len(), got: report.confusion.classes() });
    }
    Ok(())
}

/// Rows are actual classes, columns predicted classes.
pub fn confusion_csv(report: &EvalReport, class_names: &[String]) -> Result<String, ReportError> {
    check_classes(report, class_names)?;
    let mut header = vec!["actual".to_string()];
    header.extend(class_names.iter().cloned());
    let rows: Vec<Vec<String>> = report
        .confusion
        .rows()
        .iter()
        .zip(class_names)
        .map(|(r, name)| std::iter::once(name.clone()).chain(r.iter().map(u64::to_string)).collect())
        .collect();
    table(&header, &rows)
}

pub fn metrics_csv(report: &EvalReport, class_names: &[String]) -> Result<String, ReportError> {
    check_classes(report, class_names)?;
    let header = strings(&[
        "class",
        "precision",
        "recall",
        "f1",
        "support",
        "precision_undefined",
        "recall_undefined",
        "f1_undefined",
    ]);
    let rows: Vec<Vec<String>> = report
        .per_class
        .iter()
        .zip(class_names)
        .map(|(m, name)| {
            vec![
                name.clone(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.support.to_string(),
                m.precision_undefined.to_string(),
                m.recall_undefined.to_string(),
                m.f1_undefined.to_string(),
            ]
        })
        .collect();
    table(&header, &rows)
}

pub fn summary_csv(classifier: &str, scenario: Scenario, report: &EvalReport) -> Result<String, ReportError> {
    if report.samples == 0 {
        return Err(ReportError::EmptyInput);
    }
    let header =
        strings(&["classifier", "scenario", "samples", "accuracy", "macro_precision", "macro_recall", "macro_f1"]);
    let row = vec![
        classifier.to_string(),
        scenario.as_str().to_string(),
        report.samples.to_string(),
        report.accuracy.to_string(),
        report.macro_precision.to_string(),
        report.macro_recall.to_string(),
        report.macro_f1.to_string(),
    ];
    table(&header, &[row])
}

/// One row per sample: id, actual and predicted class names, then one
/// probability column per class.
pub fn predictions_csv(
    ids: &[String],
    actual: &[usize],
    predicted: &[usize],
    probs: &[Vec<f64>],
    class_names: &[String],
) -> Result<String, ReportError> {
    if ids.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut header = strings(&["id", "actual", "predicted"]);
    header.extend(class_names.iter().map(|c| format!("p_{c}")));
    let rows: Vec<Vec<String>> = (0..ids.len())
        .map(|i| {
            let mut r = vec![ids[i].clone(), class_names[actual[i]].clone(), class_names[predicted[i]].clone()];
            r.extend(probs[i].iter().map(f64::to_string));
            r
        })
        .collect();
    table(&header, &rows)
}

fn check_curves(curves: &[SweepCurve]) -> Result<(), ReportError> {
    if curves.is_empty() || curves.iter().any(|c| c.points.is_empty()) {
        return Err(ReportError::EmptyInput);
    }
    Ok(())
}

pub fn sweep_csv(curves: &[SweepCurve]) -> Result<String, ReportError> {
    check_curves(curves)?;
    let header = strings(&["classifier", "scenario", "snr_db", "accuracy", "n_samples"]);
    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(|p| {
                vec![
                    c.classifier.clone(),
                    c.scenario.as_str().to_string(),
                    p.snr_db.to_string(),
                    p.accuracy.to_string(),
                    p.n_samples.to_string(),
                ]
            })
        })
        .collect();
    table(&header, &rows)
}

/// Interpolated SNR at which each curve first reaches each level; empty when
/// it never does.
pub fn thresholds_csv(curves: &[SweepCurve], levels: &[f64]) -> Result<String, ReportError> {
    check_curves(curves)?;
    let header = strings(&["classifier", "scenario", "level", "snr_db"]);
    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| {
            levels.iter().map(move |&l| {
                vec![c.classifier.clone(), c.scenario.as_str().to_string(), l.to_string(), opt(threshold_snr(c, l))]
            })
        })
        .collect();
    table(&header, &rows)
}

pub fn history_csv(history: &[EpochRecord]) -> Result<String, ReportError> {
    if history.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let header = strings(&["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]);
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|h| {
            vec![
                h.epoch.to_string(),
                h.train_loss.to_string(),
                h.train_acc.to_string(),
                opt(h.val_loss),
                opt(h.val_acc),
            ]
        })
        .collect();
    table(&header, &rows)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Row-normalized heatmap with raw counts printed in each cell.
pub fn confusion_svg(report: &EvalReport, class_names: &[String], title: &str) -> Result<String, ReportError> {
    check_classes(report, class_names)?;
    let c = class_names.len();
    let (cell, left, top) = (48.0, 120.0, 60.0);
    let width = left + cell * c as f64 + 20.0;
    let height = top + cell * c as f64 + 90.0;
    let norm = report.confusion.normalized();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    for (a, row) in norm.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            let x = left + cell * p as f64;
            let y = top + cell * a as f64;
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#999"/>"##
            );
            let ink = if v > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                report.confusion.get(a, p)
            );
        }
    }
    for (i, name) in class_names.iter().enumerate() {
        let name = escape(name);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{name}</text>"#,
            left - 6.0,
            top + cell * i as f64 + cell / 2.0 + 4.0
        );
        let (x, y) = (left + cell * i as f64 + cell / 2.0, top + cell * c as f64 + 12.0);
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="end" transform="rotate(-45 {x} {y})">{name}</text>"#);
    }
    let _ = writeln!(s, r#"<text x="12" y="{}" transform="rotate(-90 12 {0})" text-anchor="middle">actual</text>"#, top + cell * c as f64 / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">predicted</text>"#, left + cell * c as f64 / 2.0, height - 8.0);
    s.push_str("</svg>\n");
    Ok(s)
}

struct Series<'a> {
    name: &'a str,
    points: Vec<(f64, f64)>,
}

fn line_plot(series: &[Series<'_>], title: &str, x_label: &str, y_label: &str, y_range: (f64, f64)) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 140.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (y0, y1) = y_range;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let (gx, gy) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="#ddd"/><text x="{2}" y="{3}" text-anchor="end">{4:.2}</text>"##,
            py(gy),
            left + pw,
            left - 4.0,
            py(gy) + 4.0,
            gy
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(gx),
            top + ph + 16.0,
            (gx * 100.0).round() / 100.0
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{},{}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, pts.join(" "));
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="3" fill="{colour}"/>"#, px(x), py(y));
        }
        let ly = top + 16.0 * k as f64 + 8.0;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(ser.name)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" transform="rotate(-90 16 {0})" text-anchor="middle">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

pub fn sweep_svg(curves: &[SweepCurve], title: &str) -> Result<String, ReportError> {
    check_curves(curves)?;
    let series: Vec<Series<'_>> = curves
        .iter()
        .map(|c| Series { name: &c.classifier, points: c.points.iter().map(|p| (p.snr_db, p.accuracy)).collect() })
        .collect();
    Ok(line_plot(&series, title, "SNR (dB)", "accuracy", (0.0, 1.0)))
}

pub fn history_svg(history: &[EpochRecord], title: &str) -> Result<String, ReportError> {
    if history.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut series = vec![Series {
        name: "train accuracy",
        points: history.iter().map(|h| (h.epoch as f64, h.train_acc)).collect(),
    }];
    let val: Vec<(f64, f64)> = history.iter().filter_map(|h| h.val_acc.map(|a| (h.epoch as f64, a))).collect();
    if !val.is_empty() {
        series.push(Series { name: "validation accuracy", points: val });
    }
    Ok(line_plot(&series, title, "epoch", "accuracy", (0.0, 1.0)))
}

pub fn write(path: &Path, text: &str) -> Result<(), ReportError> {
    std::fs::write(path, text).map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ramanscope_core::eval::{confusion, metrics, SweepPoint};

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(sweep_csv(&[]), Err(ReportError::EmptyInput)));
        let empty = SweepCurve { classifier: "knn".into(), scenario: Scenario::Gn, points: vec![] };
        assert!(matches!(sweep_svg(&[empty], "t"), Err(ReportError::EmptyInput)));
        assert!(matches!(history_csv(&[]), Err(ReportError::EmptyInput)));
    }

    #[test]
    fn confusion_table_layout() {
        let r = metrics(&confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap());
        let names = vec!["a".to_string(), "b,c".to_string()];
        assert_eq!(confusion_csv(&r, &names).unwrap(), "actual,a,\"b,c\"\na,1,1\n\"b,c\",0,1\n");
        assert!(matches!(confusion_csv(&r, &names[..1]), Err(ReportError::ClassCount { .. })));
    }

    #[test]
    fn thresholds_blank_when_never_reached() {
        let c = SweepCurve {
            classifier: "nb".into(),
            scenario: Scenario::Gb,
            points: vec![
                SweepPoint { snr_db: 0.0, accuracy: 0.25, n_samples: 5 },
                SweepPoint { snr_db: 10.0, accuracy: 0.75, n_samples: 5 },
            ],
        };
        let csv = thresholds_csv(&[c], &[0.5, 0.9]).unwrap();
        assert_eq!(csv, "classifier,scenario,level,snr_db\nnb,gb,0.5,5\nnb,gb,0.9,\n");
    }
}
