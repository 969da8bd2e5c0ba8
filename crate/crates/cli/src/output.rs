//! CSV, JSON envelope, and SVG emission.
//!
//! CSV files are UTF-8 with a header row, comma separators, `.` decimals and
//! LF line endings. Floats are printed in Rust's shortest round-trip form, so
//! a write/read cycle reproduces every value bit for bit.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub fn write_csv(
    out: &mut dyn Write,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a two-column CSV of (x, y) with a header row, reporting row and
/// column positions on malformed input.
pub fn read_xy_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut lines = text.lines().enumerate();
    let Some((_, _header)) = lines.next() else {
        return Err("empty CSV: missing header row".into());
    };
    for (idx, line) in lines {
        let row_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 2 {
            return Err(format!("row {row_no}: expected 2 columns, found {}", cols.len()));
        }
        let parse = |col: usize, s: &str| -> Result<f64, String> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("row {row_no}, column {}: '{s}' is not a number", col + 1))
        };
        x.push(parse(0, cols[0])?);
        y.push(parse(1, cols[1])?);
    }
    if x.len() < 2 {
        return Err(format!("need at least 2 data rows, found {}", x.len()));
    }
    Ok((x, y))
}

/// Versioned wrapper around JSON results; the embedded config text reproduces
/// the run exactly.
#[derive(Serialize, Deserialize)]
pub struct ResultEnvelope<T> {
    pub version: String,
    pub config_hash: String,
    pub config_text: String,
    pub timestamp_unix_s: u64,
    pub payload: T,
}

impl<T: Serialize> ResultEnvelope<T> {
    pub fn new(config_text: &str, payload: T) -> Self {
        ResultEnvelope {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: crate::config::config_hash(config_text),
            config_text: config_text.to_string(),
            timestamp_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }
}

/// Minimal SVG rendering: axes box, min/max labels, one polyline.
pub fn write_svg(path: &Path, x: &[f64], y: &[f64], x_label: &str, y_label: &str) -> std::io::Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let (x_lo, x_hi) = bounds(x);
    let (mut y_lo, mut y_hi) = bounds(y);
    if y_lo == y_hi {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let sx = |v: f64| M + (v - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let sy = |v: f64| H - M - (v - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);

    let mut pts = String::new();
    for (a, b) in x.iter().zip(y.iter()) {
        pts.push_str(&format!("{:.3},{:.3} ", sx(*a), sy(*b)));
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">"
        ),
        w = W,
        h = H
    )?;
    writeln!(f, "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", W - 2.0 * M, H - 2.0 * M)?;
    if y_lo < 0.0 && y_hi > 0.0 {
        let zy = sy(0.0);
        writeln!(f, "<line x1=\"{M}\" y1=\"{zy:.3}\" x2=\"{}\" y2=\"{zy:.3}\" stroke=\"#bbbbbb\"/>", W - M)?;
    }
    writeln!(f, "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\"/>", pts.trim_end())?;
    writeln!(f, "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 18.0, xml_escape(x_label))?;
    writeln!(f, "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>", H / 2.0, H / 2.0, xml_escape(y_label))?;
    writeln!(f, "<text x=\"{M}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{x_lo}</text>", H - M + 16.0)?;
    writeln!(f, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{x_hi}</text>", W - M, H - M + 16.0)?;
    writeln!(f, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y_lo:e}</text>", M - 6.0, H - M)?;
    writeln!(f, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y_hi:e}</text>", M - 6.0, M + 4.0)?;
    writeln!(f, "</svg>")?;
    Ok(())
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for x in v {
        lo = lo.min(*x);
        hi = hi.max(*x);
    }
    (lo, hi)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let xs = [0.1, 0.2 + 1e-16, std::f64::consts::PI, 1e-300, 16.451234567890123];
        let ys = [1.0 / 3.0, -2.5e-7, 0.0, 9.87654321e12, -1.0];
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &["B_mT", "dPL_over_PL"],
            xs.iter().zip(ys.iter()).map(|(a, b)| vec![format!("{a}"), format!("{b}")]),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let (x2, y2) = read_xy_csv(&text).unwrap();
        assert_eq!(x2, xs);
        assert_eq!(y2, ys);
    }

    #[test]
    fn csv_reader_reports_position() {
        let e = read_xy_csv("h1,h2\n1.0,2.0\n3.0,oops\n").unwrap_err();
        assert!(e.contains("row 3"), "{e}");
        assert!(e.contains("column 2"), "{e}");
        let e2 = read_xy_csv("h1,h2\n1.0\n").unwrap_err();
        assert!(e2.contains("2 columns"), "{e2}");
    }
}
