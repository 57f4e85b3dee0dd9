//! Text formats: edge lists, feature matrices, filter spec files, CSV output.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::filter::FilterSpec;
use crate::graph::{build_graph, Graph};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, column: usize, reason: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        column,
        reason: reason.into(),
    }
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let base = line.as_ptr() as usize;
    line.split_whitespace()
        .map(move |t| (t.as_ptr() as usize - base + 1, t))
}

/// Parses `u v [w]` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_edge_list(text: &str, num_nodes: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks: Vec<(usize, &str)> = tokens(line).collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 2 || toks.len() > 3 {
            return Err(parse_err(
                line_no,
                toks[0].0,
                format!("expected `u v [w]`, found {} fields", toks.len()),
            ));
        }
        let index = |(col, t): (usize, &str)| -> Result<usize> {
            t.parse::<usize>()
                .map_err(|_| parse_err(line_no, col, format!("invalid node index `{t}`")))
        };
        let u = index(toks[0])?;
        let v = index(toks[1])?;
        let w = match toks.get(2) {
            Some(&(col, t)) => t
                .parse::<f64>()
                .map_err(|_| parse_err(line_no, col, format!("invalid weight `{t}`")))?,
            None => 1.0,
        };
        edges.push((u, v, w));
    }
    if edges.is_empty() && num_nodes.is_none() {
        return Err(parse_err(1, 1, "edge list is empty"));
    }
    build_graph(edges, num_nodes)
}

/// Parses delimiter-separated reals, one node per row. Commas, semicolons,
/// tabs and spaces are all accepted as separators.
pub fn parse_features(text: &str) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut col = 1;
        for field in line.split(|c: char| c == ',' || c == ';' || c.is_whitespace()) {
            if !field.is_empty() {
                let v = field
                    .parse::<f64>()
                    .map_err(|_| parse_err(line_no, col, format!("invalid number `{field}`")))?;
                row.push(v);
            }
            col += field.chars().count() + 1;
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::RaggedRows {
                    line: line_no,
                    expected: w,
                    found: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, 1, "feature file is empty"));
    }
    FeatureMatrix::from_rows(&rows)
}

/// Comma-separated rows without a header.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// CSV with a header row; each row is formatted by the caller.
pub fn table_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn filter_spec_to_json(f: &FilterSpec) -> String {
    serde_json::to_string_pretty(f).expect("filter spec serializes")
}

pub fn filter_spec_from_json(text: &str) -> Result<FilterSpec> {
    serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.column(), e.to_string()))
}
