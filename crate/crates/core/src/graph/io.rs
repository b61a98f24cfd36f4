use std::fmt::Write as _;
use std::str::FromStr;

use super::{BuildStats, Graph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Warnings collected while reading a graph file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub dropped_self_loops: usize,
    pub merged_duplicates: usize,
}

impl From<BuildStats> for LoadReport {
    fn from(s: BuildStats) -> Self {
        Self { dropped_self_loops: s.dropped_self_loops, merged_duplicates: s.merged_duplicates }
    }
}

#[derive(Clone, Debug)]
pub struct Loaded<T> {
    pub graph: Graph<T>,
    pub report: LoadReport,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_tok<F: FromStr>(tok: &str, line: usize) -> Result<F> {
    tok.parse::<F>().map_err(|_| parse_err(line, format!("cannot parse `{tok}`")))
}

/// Reads a MatrixMarket `coordinate` file (`real`, `integer` or `pattern`; `general` or
/// `symmetric`). Symmetric files yield undirected graphs, general files directed ones.
pub fn load_matrix_market<T: Scalar>(bytes: &[u8]) -> Result<Loaded<T>> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(1, "input is not UTF-8"))?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(parse_err(1, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    if toks[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format `{}`", toks[2])));
    }
    let pattern = match toks[3].as_str() {
        "pattern" => true,
        "real" | "integer" => false,
        other => return Err(parse_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match toks[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> =
        size.split_whitespace().map(|t| parse_tok(t, size_line)).collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(parse_err(size_line, "size line must be `rows cols nnz`"));
    }
    if dims[0] != dims[1] {
        return Err(Error::NotSquare { rows: dims[0], cols: dims[1] });
    }
    let (n, nnz) = (dims[0], dims[2]);

    let mut entries = Vec::with_capacity(nnz);
    for (line, l) in data {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if toks.len() != want {
            return Err(parse_err(line, format!("expected {want} fields, got {}", toks.len())));
        }
        let i: usize = parse_tok(toks[0], line)?;
        let j: usize = parse_tok(toks[1], line)?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::Index { index: i.max(j), size: n });
        }
        let w = if pattern { T::one() } else { T::lit(parse_tok::<f64>(toks[2], line)?) };
        entries.push((i - 1, j - 1, w));
    }
    if entries.len() != nnz {
        return Err(parse_err(0, format!("header declares {nnz} entries, found {}", entries.len())));
    }
    let (graph, stats) = Graph::from_entries(n, !symmetric, entries)?;
    Ok(Loaded { graph, report: stats.into() })
}

/// Node numbering used by an edge-list file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IndexBase {
    Zero,
    #[default]
    One,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeListOptions {
    pub directed: bool,
    pub base: IndexBase,
    /// Node count; defaults to one past the largest id seen.
    pub n: Option<usize>,
}

/// Reads whitespace-separated `i j [w]` lines; `#` starts a comment.
///
/// Either every data line carries a weight or none does.
pub fn load_edge_list<T: Scalar>(bytes: &[u8], opts: EdgeListOptions) -> Result<Loaded<T>> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(1, "input is not UTF-8"))?;
    let offset = match opts.base {
        IndexBase::Zero => 0,
        IndexBase::One => 1,
    };
    let mut weighted: Option<bool> = None;
    let mut entries = Vec::new();
    let mut max_id = None::<usize>;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 && toks.len() != 3 {
            return Err(parse_err(line, format!("expected `i j [w]`, got {} fields", toks.len())));
        }
        let has_w = toks.len() == 3;
        if *weighted.get_or_insert(has_w) != has_w {
            return Err(parse_err(line, "ragged edge list: weights present on some lines only"));
        }
        let i: usize = parse_tok(toks[0], line)?;
        let j: usize = parse_tok(toks[1], line)?;
        if i < offset || j < offset {
            return Err(parse_err(line, "node id below index base"));
        }
        let w = if has_w { parse_tok::<f64>(toks[2], line)? } else { 1.0 };
        if !(w > 0.0) {
            return Err(Error::Weight { i, j, weight: w });
        }
        let (i, j) = (i - offset, j - offset);
        max_id = Some(max_id.map_or(i.max(j), |m| m.max(i).max(j)));
        entries.push((i, j, T::lit(w)));
    }
    let n = match (opts.n, max_id) {
        (Some(n), Some(m)) if m >= n => return Err(Error::Index { index: m, size: n }),
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    let (graph, stats) = Graph::from_entries(n, opts.directed, entries)?;
    Ok(Loaded { graph, report: stats.into() })
}

/// One label per line; blank lines are kept as empty labels so that line `k` names node `k`.
pub fn load_labels(bytes: &[u8]) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(1, "input is not UTF-8"))?;
    Ok(text.lines().map(|l| l.trim().to_string()).collect())
}

/// Writes `real general` (digraphs) or `real symmetric` (lower triangle) MatrixMarket text.
pub fn write_matrix_market<T: Scalar>(g: &Graph<T>) -> String {
    let sym = !g.is_directed();
    let entries: Vec<_> = g.entries().filter(|&(i, j, _)| !sym || i > j).collect();
    let mut s = String::new();
    let kind = if sym { "symmetric" } else { "general" };
    let _ = writeln!(s, "%%MatrixMarket matrix coordinate real {kind}");
    let _ = writeln!(s, "{} {} {}", g.n(), g.n(), entries.len());
    for (i, j, w) in entries {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, w.to_f64_lossy());
    }
    s
}

/// Writes a 1-based weighted edge list; undirected edges appear once with `i < j`.
pub fn write_edge_list<T: Scalar>(g: &Graph<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# n={} directed={}", g.n(), g.is_directed());
    for (i, j, w) in g.entries() {
        if g.is_directed() || i < j {
            let _ = writeln!(s, "{} {} {}", i + 1, j + 1, w.to_f64_lossy());
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_symmetric_pattern_file() {
        let src = "%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n2 1\n";
        let l = load_matrix_market::<f64>(src.as_bytes()).unwrap();
        assert!(!l.graph.is_directed());
        assert_eq!(l.graph.n(), 2);
        assert_eq!(l.graph.weight(0, 1), Some(1.0));
        assert_eq!(l.graph.weight(1, 0), Some(1.0));
    }

    #[test]
    fn diagonal_entry_is_dropped_with_warning() {
        let src = "%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 3.0\n1 2 1.5\n";
        let l = load_matrix_market::<f64>(src.as_bytes()).unwrap();
        assert_eq!(l.report.dropped_self_loops, 1);
        assert_eq!(l.graph.nnz(), 1);
        assert!(l.graph.is_directed());
    }

    #[test]
    fn matrix_market_errors() {
        let bad_header = "%%MatrixMarket matrix array real general\n2 2\n";
        assert!(load_matrix_market::<f64>(bad_header.as_bytes()).is_err());
        let oob = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n3 1\n";
        assert!(matches!(load_matrix_market::<f64>(oob.as_bytes()), Err(Error::Index { .. })));
        let neg = "%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 -1\n";
        assert!(matches!(load_matrix_market::<f64>(neg.as_bytes()), Err(Error::Weight { .. })));
    }

    #[test]
    fn edge_list_path() {
        let l = load_edge_list::<f64>(b"1 2\n2 3\n", EdgeListOptions::default()).unwrap();
        assert_eq!(l.graph.n(), 3);
        assert_eq!(l.graph.nnz(), 4);
    }

    #[test]
    fn edge_list_weighted_arc() {
        let opts = EdgeListOptions { directed: true, ..Default::default() };
        let l = load_edge_list::<f64>(b"1 2 0.5", opts).unwrap();
        assert_eq!(l.graph.nnz(), 1);
        assert_eq!(l.graph.weight(0, 1), Some(0.5));
    }

    #[test]
    fn edge_list_errors() {
        let o = EdgeListOptions::default();
        assert!(load_edge_list::<f64>(b"1 2\n2 3 1.0\n", o).is_err());
        assert!(load_edge_list::<f64>(b"1 2 -0.5\n", o).is_err());
        assert!(load_edge_list::<f64>(b"1\n", o).is_err());
    }

    #[test]
    fn zero_based_and_comments() {
        let o = EdgeListOptions { base: IndexBase::Zero, ..Default::default() };
        let l = load_edge_list::<f64>(b"# header\n0 1 # trailing\n\n1 2\n", o).unwrap();
        assert_eq!(l.graph.n(), 3);
    }
}
