use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use netsens::graph::{load_edge_list, load_labels, load_matrix_market, EdgeListOptions, IndexBase};
use netsens::{fixtures, EdgePair, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Florentine,
    LondonLike,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// `.mtx` files are MatrixMarket, everything else an edge list.
    Auto,
    Mtx,
    Edges,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Graph file (MatrixMarket or `i j [w]` edge list).
    #[arg(required_unless_present = "fixture")]
    pub input: Option<PathBuf>,
    /// Use a bundled network instead of a file.
    #[arg(long, value_enum, conflicts_with = "input")]
    pub fixture: Option<Fixture>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Read an edge list as directed.
    #[arg(long)]
    pub directed: bool,
    /// Node ids in files, arguments and output start at 0 instead of 1.
    #[arg(long)]
    pub zero_based: bool,
    /// One node name per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

pub struct Input {
    pub graph: Graph,
    pub labels: Option<Vec<String>>,
    pub base: usize,
}

impl Input {
    pub fn label(&self, v: usize) -> String {
        self.labels.as_ref().and_then(|l| l.get(v).cloned()).unwrap_or_default()
    }

    /// Displayed id of internal node `v`.
    pub fn id(&self, v: usize) -> usize {
        v + self.base
    }

    /// Internal index of a user-supplied id.
    pub fn node(&self, id: usize) -> Result<usize> {
        if id < self.base || id - self.base >= self.graph.n() {
            bail!("node id {id} outside {}..={}", self.base, self.graph.n() + self.base - 1);
        }
        Ok(id - self.base)
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

impl GraphArgs {
    pub fn base(&self) -> IndexBase {
        if self.zero_based {
            IndexBase::Zero
        } else {
            IndexBase::One
        }
    }

    pub fn load(&self) -> Result<Input> {
        let base = usize::from(!self.zero_based);
        let (graph, mut labels) = match (self.fixture, &self.input) {
            (Some(Fixture::Florentine), _) => {
                let (g, l) = fixtures::florentine()?;
                (g, Some(l))
            }
            (Some(Fixture::LondonLike), _) => (fixtures::london_like()?.0, None),
            (None, Some(path)) => {
                let bytes = read(path)?;
                let mtx = match self.format {
                    InputFormat::Mtx => true,
                    InputFormat::Edges => false,
                    InputFormat::Auto => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")),
                };
                let loaded = if mtx {
                    load_matrix_market(&bytes)
                } else {
                    let opts = EdgeListOptions { directed: self.directed, base: self.base(), n: None };
                    load_edge_list(&bytes, opts)
                }
                .with_context(|| format!("cannot parse {}", path.display()))?;
                let r = loaded.report;
                if r.dropped_self_loops > 0 || r.merged_duplicates > 0 {
                    eprintln!(
                        "warning: dropped {} self-loops, merged {} duplicate entries",
                        r.dropped_self_loops, r.merged_duplicates
                    );
                }
                (loaded.graph, None)
            }
            (None, None) => bail!("no input graph given"),
        };
        if let Some(path) = &self.labels {
            labels = Some(load_labels(&read(path)?)?);
        }
        if let Some(l) = &labels {
            if l.len() < graph.n() {
                eprintln!("warning: {} labels for {} nodes", l.len(), graph.n());
            }
        }
        Ok(Input { graph, labels, base })
    }
}

/// Reads `i j [delta]` weight increments; `delta` defaults to 1 and may be negative.
pub fn load_updates(path: &Path, base: usize) -> Result<Vec<EdgePair>> {
    let text = String::from_utf8(read(path)?).context("update file is not UTF-8")?;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let line = k + 1;
        if toks.len() > 3 || toks.len() < 2 {
            bail!("{}:{line}: expected `i j [delta]`", path.display());
        }
        let id = |t: &str| -> Result<usize> {
            let v: usize = t.parse().with_context(|| format!("{}:{line}: bad node id `{t}`", path.display()))?;
            v.checked_sub(base).with_context(|| format!("{}:{line}: node id below {base}", path.display()))
        };
        let delta = match toks.get(2) {
            Some(t) => t.parse::<f64>().with_context(|| format!("{}:{line}: bad weight `{t}`", path.display()))?,
            None => 1.0,
        };
        out.push(EdgePair::new(id(toks[0])?, id(toks[1])?, delta));
    }
    Ok(out)
}
