//! Report emission: floats normalized to 12 significant digits, JSON with a
//! fixed (alphabetical) key order, CSV rows for sweeps, atomic file writes.

use crate::config::CliResult;
use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Round to 12 significant digits so identical configurations produce
/// byte-identical reports regardless of how the value was computed.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// 12-significant-digit fixed formatting for CSV cells.
pub fn fmt_sig(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.11e}")
}

/// Normalize every number in a JSON tree to 12 significant digits.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig(f)) {
                        *value = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Write to stdout, or atomically (temp file + rename) to a path.
pub fn write_output(path: Option<&PathBuf>, content: &str) -> CliResult<()> {
    match path {
        None => {
            println!("{content}");
            Ok(())
        }
        Some(p) => {
            let tmp = temp_path(p);
            {
                let mut f = std::fs::File::create(&tmp)?;
                f.write_all(content.as_bytes())?;
                f.write_all(b"\n")?;
                f.sync_all()?;
            }
            std::fs::rename(&tmp, p)?;
            Ok(())
        }
    }
}

fn temp_path(target: &Path) -> PathBuf {
    let mut name = target
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "report".into());
    name.push(".tmp");
    target.with_file_name(name)
}

/// Serialize a report to pretty JSON with normalized floats.
pub fn to_json_string(value: &impl serde::Serialize) -> CliResult<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Assemble a CSV table.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    for row in rows {
        out.push('\n');
        out.push_str(&row.join(","));
    }
    out
}
