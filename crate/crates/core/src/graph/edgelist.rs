//! Plain-text edge lists.
//!
//! One `u v` pair per line, 0-indexed. Blank lines and lines starting with `#`
//! are ignored, except for an optional `# n=<count>` directive that fixes the
//! vertex count (otherwise it is one more than the largest index). Duplicate
//! edges and self-loops are rejected.

use std::fmt::Write as _;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

pub fn parse_edge_list(text: &str, path: &Path) -> Result<Graph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut declared_n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("n=") {
                let n = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(line_no, format!("bad vertex count: {e}")))?;
                declared_n = Some(n);
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(line_no, format!("expected `u v`, got `{line}`")));
        };
        let u: usize = a
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad vertex `{a}`: {e}")))?;
        let v: usize = b
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad vertex `{b}`: {e}")))?;
        if u == v {
            return Err(parse_err(line_no, format!("self-loop at vertex {u}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(parse_err(line_no, format!("duplicate edge ({u}, {v})")));
        }
        edges.push((u, v));
    }
    let max_index = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match declared_n {
        Some(n) if n < max_index => {
            return Err(parse_err(
                0,
                format!("declared n={n} but an edge uses vertex {}", max_index - 1),
            ))
        }
        Some(n) => n,
        None => max_index,
    };
    Graph::from_edges(n, edges)
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edge_list(&text, path)
}

/// Serialize in canonical labels, with a `# n=` directive so isolated vertices survive.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("# n={}\n", g.n());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
