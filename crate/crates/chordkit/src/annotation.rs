//! Tab-separated `start end label` interval files.

use std::fmt::Write as _;
use std::path::Path;

use chordkit_core::features::{validate_intervals, ChordInterval};

use crate::error::{format_err, IoContext, Result};

/// Parses interval lines. Fields may be separated by tabs or runs of
/// spaces; blank lines and `#` comments are skipped.
pub fn parse_annotation(text: &str) -> std::result::Result<Vec<ChordInterval>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), Some(label)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(format!("line {}: expected start, end and label", n + 1));
        };
        if fields.next().is_some() {
            return Err(format!("line {}: trailing fields", n + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("line {}: bad time {s:?}", n + 1));
        out.push(ChordInterval::new(num(a)?, num(b)?, label));
    }
    validate_intervals(&out).map_err(|e| e.to_string())?;
    Ok(out)
}

pub fn format_annotation(intervals: &[ChordInterval]) -> String {
    let mut s = String::new();
    for iv in intervals {
        let _ = writeln!(s, "{:.6}\t{:.6}\t{}", iv.start, iv.end, iv.label);
    }
    s
}

pub fn read_annotation(path: &Path) -> Result<Vec<ChordInterval>> {
    let text = std::fs::read_to_string(path).at(path)?;
    parse_annotation(&text).map_err(|m| format_err(path, m))
}

pub fn write_annotation(path: &Path, intervals: &[ChordInterval]) -> Result<()> {
    std::fs::write(path, format_annotation(intervals)).at(path)
}
