//! Rendering of experiment results: correlation tables, CSV and SVG scatter plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::consistency::{CorrelationEntry, CorrelationKind, ScoreTable};
use crate::experiment::ExperimentResult;
use crate::metrics::{Method, MetricFamily};
use crate::{Error, Result};

/// Fill colors assigned to datasets in config order.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];
/// Circle radius in px.
pub const MARKER_RADIUS: u32 = 4;
/// Axis maximum used when every score on an axis is zero.
pub const MIN_AXIS_MAX: f64 = 0.01;

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 60.0;

/// Two decimals, never a negative zero. Rounds the shortest decimal form of
/// `r` (the digits `r` prints as), ties to even, so `0.505` gives `0.50`.
pub fn format_r(r: f64) -> String {
    let shortest = format!("{}", r.abs());
    let (int, frac) = shortest.split_once('.').unwrap_or((&shortest, ""));
    let digit = |i: usize| frac.as_bytes().get(i).map_or(0, |b| u64::from(b - b'0'));
    let mut hundredths = int.parse::<u64>().expect("finite") * 100 + digit(0) * 10 + digit(1);
    let rest = frac.get(2..).unwrap_or("").as_bytes();
    let round_up = match rest.first() {
        Some(b'6'..=b'9') => true,
        Some(b'5') => rest[1..].iter().any(|&b| b != b'0') || hundredths % 2 == 1,
        _ => false,
    };
    hundredths += u64::from(round_up);
    let sign = if r < 0.0 && hundredths > 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

/// One dataset's share of a table cell: `0.99*`, `-0.31`, `undefined` or `-`.
pub fn format_entry(entry: Option<&CorrelationEntry>) -> String {
    match entry {
        Some(CorrelationEntry::Value(c)) => {
            format!("{}{}", format_r(c.r), if c.significant { "*" } else { "" })
        }
        Some(CorrelationEntry::Diagonal) => "-".into(),
        Some(CorrelationEntry::Undefined { .. }) | None => "undefined".into(),
    }
}

/// A table cell across datasets, e.g. `(0.99*, 0.50*, -0.31)`. Diagonal cells are `-`.
pub fn format_cell(
    result: &ExperimentResult,
    kind: CorrelationKind,
    m1: Method,
    m2: Method,
) -> String {
    if m1 == m2 {
        return "-".into();
    }
    let parts: Vec<String> = result
        .datasets
        .iter()
        .map(|d| format_entry(d.entry(kind, m1, m2)))
        .collect();
    format!("({})", parts.join(", "))
}

/// A parsed share of a table cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParsedEntry {
    /// `None` for `undefined`.
    pub r: Option<f64>,
    pub significant: bool,
}

/// Inverse of [`format_cell`] for off-diagonal cells.
pub fn parse_cell(cell: &str) -> Result<Vec<ParsedEntry>> {
    let inner = cell
        .trim()
        .strip_prefix('(')
        .and_then(|c| c.strip_suffix(')'))
        .ok_or_else(|| Error::InvalidArgument(format!("not a table cell: '{cell}'")))?;
    inner
        .split(',')
        .map(|part| {
            let part = part.trim();
            if part == "undefined" {
                return Ok(ParsedEntry {
                    r: None,
                    significant: false,
                });
            }
            let (num, significant) = match part.strip_suffix('*') {
                Some(n) => (n, true),
                None => (part, false),
            };
            let r = num
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad correlation '{part}'")))?;
            Ok(ParsedEntry {
                r: Some(r),
                significant,
            })
        })
        .collect()
}

fn families(methods: &[Method]) -> Vec<Vec<Method>> {
    [MetricFamily::Parity, MetricFamily::Separation]
        .into_iter()
        .map(|f| {
            methods
                .iter()
                .copied()
                .filter(|m| m.family() == f)
                .collect::<Vec<_>>()
        })
        .filter(|ms| ms.len() >= 2)
        .collect()
}

/// Plain-text correlation tables, one block per correlation kind and metric family.
pub fn render_table(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let names: Vec<&str> = result.datasets.iter().map(|d| d.name.as_str()).collect();
    let _ = writeln!(out, "datasets: {}", names.join(", "));
    let _ = writeln!(out, "* p < 0.05");
    for kind in CorrelationKind::ALL {
        for fam in families(&result.methods) {
            let cells: Vec<Vec<String>> = fam
                .iter()
                .map(|&r| {
                    fam.iter()
                        .map(|&c| format_cell(result, kind, r, c))
                        .collect()
                })
                .collect();
            let width = cells
                .iter()
                .flatten()
                .map(String::len)
                .max()
                .unwrap_or(1)
                .max(2);
            let _ = writeln!(out, "\n{kind}");
            let _ = write!(out, "{:4}", "");
            for m in &fam {
                let _ = write!(out, "  {:>width$}", m.as_str());
            }
            out.push('\n');
            for (m, row) in fam.iter().zip(&cells) {
                let _ = write!(out, "{:4}", m.as_str());
                for c in row {
                    let _ = write!(out, "  {c:>width$}");
                }
                out.push('\n');
            }
        }
    }
    out
}

fn csv_error(path: &Path, e: impl ToString) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Long-form CSV of every table cell: `correlation,row_method,col_method,cell`.
pub fn tables_csv(result: &ExperimentResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["correlation", "row_method", "col_method", "cell"])
        .expect("in-memory write");
    for kind in CorrelationKind::ALL {
        for fam in families(&result.methods) {
            for &r in &fam {
                for &c in &fam {
                    w.write_record([
                        kind.as_str(),
                        r.as_str(),
                        c.as_str(),
                        &format_cell(result, kind, r, c),
                    ])
                    .expect("in-memory write");
                }
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Point<'a> {
    dataset: &'a str,
    model: &'a str,
    color: &'static str,
    x: f64,
    y: f64,
}

fn scatter_points<'a>(tables: &'a [ScoreTable], m1: Method, m2: Method) -> Result<Vec<Point<'a>>> {
    let mut points = Vec::new();
    for (k, t) in tables.iter().enumerate() {
        let missing = |m: Method| {
            Error::InvalidArgument(format!("method {m} not in score table '{}'", t.dataset))
        };
        let xs = t.column(m1).ok_or_else(|| missing(m1))?;
        let ys = t.column(m2).ok_or_else(|| missing(m2))?;
        for (i, id) in t.model_ids().iter().enumerate() {
            points.push(Point {
                dataset: &t.dataset,
                model: id,
                color: PALETTE[k % PALETTE.len()],
                x: xs[i],
                y: ys[i],
            });
        }
    }
    Ok(points)
}

fn axis_max(values: impl Iterator<Item = f64>) -> f64 {
    let m = values.fold(0.0, f64::max);
    if m > 0.0 {
        m * 1.05
    } else {
        MIN_AXIS_MAX
    }
}

/// SVG 1.1 scatter of `m1` against `m2`, one circle per (dataset, model).
pub fn scatter_svg(tables: &[ScoreTable], m1: Method, m2: Method) -> Result<String> {
    let points = scatter_points(tables, m1, m2)?;
    let xmax = axis_max(points.iter().map(|p| p.x));
    let ymax = axis_max(points.iter().map(|p| p.y));
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let px = |x: f64| SVG_MARGIN + x / xmax * span;
    let py = |y: f64| SVG_SIZE - SVG_MARGIN - y / ymax * span;
    let (lo, hi) = (SVG_MARGIN, SVG_SIZE - SVG_MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>"#
    );
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{lo}" y1="{hi}" x2="{hi}" y2="{hi}"/>"#);
    let _ = writeln!(s, r#"<line x1="{lo}" y1="{lo}" x2="{lo}" y2="{hi}"/>"#);
    for f in [0.0, 0.5, 1.0] {
        let (tx, ty) = (lo + f * span, hi - f * span);
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.3}" y1="{hi}" x2="{tx:.3}" y2="{:.3}"/>"#,
            hi + 5.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{ty:.3}" x2="{lo}" y2="{ty:.3}"/>"#,
            lo - 5.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<g font-family="sans-serif" font-size="11" fill="black">"#
    );
    for f in [0.0, 0.5, 1.0] {
        let (tx, ty) = (lo + f * span, hi - f * span);
        let _ = writeln!(
            s,
            r#"<text x="{tx:.3}" y="{:.3}" text-anchor="middle">{:.3}</text>"#,
            hi + 18.0,
            f * xmax
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{:.3}</text>"#,
            lo - 8.0,
            ty + 4.0,
            f * ymax
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" font-size="14">{}</text>"#,
        lo + span / 2.0,
        SVG_SIZE - 15.0,
        m1
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0:.3}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {0:.3})">{1}</text>"#,
        lo + span / 2.0,
        m2
    );
    for (k, t) in tables.iter().enumerate() {
        let y = 20.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="8" height="8" fill="{}"/><text x="{:.3}" y="{:.3}">{}</text>"#,
            hi - 100.0,
            y - 8.0,
            PALETTE[k % PALETTE.len()],
            hi - 88.0,
            y,
            xml_escape(&t.dataset)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "<g>");
    for p in &points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{MARKER_RADIUS}" fill="{}"><title>{} / {}</title></circle>"#,
            px(p.x),
            py(p.y),
            p.color,
            xml_escape(p.dataset),
            xml_escape(p.model)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

/// Sidecar data for [`scatter_svg`]: `dataset,model_id,m1_value,m2_value`.
pub fn scatter_csv(tables: &[ScoreTable], m1: Method, m2: Method) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "model_id", "m1_value", "m2_value"])
        .expect("in-memory write");
    for p in scatter_points(tables, m1, m2)? {
        w.write_record([p.dataset, p.model, &p.x.to_string(), &p.y.to_string()])
            .expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the SVG to `path` and its CSV sidecar next to it.
pub fn emit_scatter_svg(tables: &[ScoreTable], m1: Method, m2: Method, path: &Path) -> Result<()> {
    let svg = scatter_svg(tables, m1, m2)?;
    let csv = scatter_csv(tables, m1, m2).map_err(|e| csv_error(path, e))?;
    write(path, &svg)?;
    write(&path.with_extension("csv"), &csv)
}

/// Writes report.json, tables.csv, tables.txt and one scatter per within-family method pair.
pub fn write_report(result: &ExperimentResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, contents) in [
        ("report.json", result.to_json()),
        ("tables.csv", tables_csv(result)),
        ("tables.txt", render_table(result)),
    ] {
        let path = out_dir.join(name);
        write(&path, &contents)?;
        written.push(path);
    }
    let tables: Vec<ScoreTable> = result.score_tables().cloned().collect();
    for fam in families(&result.methods) {
        for i in 0..fam.len() {
            for j in i + 1..fam.len() {
                let path = out_dir.join(format!("scatter_{}_{}.svg", fam[i], fam[j]));
                emit_scatter_svg(&tables, fam[i], fam[j], &path)?;
                written.push(path.with_extension("csv"));
                written.push(path);
            }
        }
    }
    Ok(written)
}
