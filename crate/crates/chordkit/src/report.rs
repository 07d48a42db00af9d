//! CSV tables and the SVG views derived from them.

use std::fmt::Write as _;

use chordkit_core::chord::component_class_name;
use chordkit_core::harness::EpochRecord;
use chordkit_core::metrics::ConfusionMatrix;
use chordkit_core::objective::{ClassWeights, ComponentCounts};
use chordkit_core::chord::COMPONENT_NAMES;

/// Column order of the metrics table.
pub const METRIC_COLUMNS: [&str; 9] =
    ["root", "thirds", "majmin", "triads", "sevenths", "tetrads", "mirex", "acc_frame", "acc_class"];

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.6}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per metric; WCSR families in percent, frame accuracies in [0, 1].
pub fn metrics_csv(values: &[Option<f64>; 9]) -> String {
    let mut s = String::from("metric,value\n");
    for (name, v) in METRIC_COLUMNS.iter().zip(values) {
        let _ = writeln!(s, "{name},{}", cell(*v));
    }
    s
}

pub fn log_csv(log: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,lr\n");
    for r in log {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.lr);
    }
    s
}

pub fn weights_csv(counts: &ComponentCounts, weights: &ClassWeights) -> String {
    let mut s = String::from("component,class,count,weight\n");
    for (j, name) in COMPONENT_NAMES.iter().enumerate() {
        for (k, &c) in counts.counts[j].iter().enumerate() {
            let label = component_class_name(j, k).unwrap_or_else(|| k.to_string());
            let _ = writeln!(s, "{name},{},{c},{:.6}", csv_field(&label), weights.get(j, k));
        }
    }
    s
}

/// Classes with any reference or estimate mass, in matrix order.
pub fn active_classes(m: &ConfusionMatrix) -> Vec<usize> {
    (0..m.size()).filter(|&i| m.row_sum(i) > 0.0 || (0..m.size()).any(|r| m.get(r, i) > 0.0)).collect()
}

/// Durations in seconds; rows are references.
pub fn confusion_csv(m: &ConfusionMatrix) -> String {
    let keep = active_classes(m);
    let mut s = String::from("reference");
    for &c in &keep {
        let _ = write!(s, ",{}", csv_field(&m.classes[c]));
    }
    s.push('\n');
    for &r in &keep {
        s.push_str(&csv_field(&m.classes[r]));
        for &c in &keep {
            let _ = write!(s, ",{:.6}", m.get(r, c));
        }
        s.push('\n');
    }
    s
}

/// Recall of each reference quality with its total duration.
pub fn quality_recall(m: &ConfusionMatrix) -> Vec<(String, f64, f64)> {
    (0..m.size())
        .filter_map(|r| m.recall(r).map(|rec| (m.classes[r].clone(), m.row_sum(r), rec)))
        .collect()
}

pub fn quality_recall_csv(rows: &[(String, f64, f64)]) -> String {
    let mut s = String::from("quality,duration,recall\n");
    for (q, d, r) in rows {
        let _ = writeln!(s, "{},{d:.6},{r:.6}", csv_field(q));
    }
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Row-normalised heatmap, darker is larger.
pub fn confusion_svg(m: &ConfusionMatrix) -> String {
    let keep = active_classes(m);
    let n = keep.len();
    let cellw = 18;
    let margin = 90;
    let size = margin + n * cellw + 10;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, &r) in keep.iter().enumerate() {
        let total = m.row_sum(r);
        let y = margin + i * cellw;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, margin - 4, y + 12, esc(&m.classes[r]));
        let x = margin + i * cellw;
        let _ = writeln!(
            s,
            r#"<text transform="translate({},{}) rotate(-90)">{}</text>"#,
            x + 12,
            margin - 4,
            esc(&m.classes[r])
        );
        for (j, &c) in keep.iter().enumerate() {
            let v = if total > 0.0 { m.get(r, c) / total } else { 0.0 };
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{y}" width="{cellw}" height="{cellw}" fill="rgb({shade},{shade},255)" stroke="#ddd"><title>{} -&gt; {}: {v:.3}</title></rect>"##,
                margin + j * cellw,
                esc(&m.classes[r]),
                esc(&m.classes[c])
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars of recall per quality.
pub fn recall_svg(rows: &[(String, f64, f64)]) -> String {
    let bar = 16;
    let margin = 90;
    let width = 400;
    let height = rows.len() * bar + 30;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="10">"#,
        margin + width + 50
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (q, _, r)) in rows.iter().enumerate() {
        let y = 10 + i * bar;
        let w = (r * width as f64).round();
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, margin - 4, y + 12, esc(q));
        let _ = writeln!(s, r#"<rect x="{margin}" y="{y}" width="{w}" height="{}" fill="steelblue"/>"#, bar - 3);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{r:.2}</text>"#, margin as f64 + w + 4.0, y + 12);
    }
    s.push_str("</svg>\n");
    s
}
