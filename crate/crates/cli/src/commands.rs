use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use netsens::bounds::{
    edge_sensitivity_bound_map, fov_disk, node_bound, sensitivity_bound_map, spectrum_interval, FovMethod, Regime,
    SpectrumMethod,
};
use netsens::graph::{random_geometric_graph, threshold_for_mean_degree, write_edge_list, write_matrix_market};
use netsens::krylov::KrylovStatus;
use netsens::maxelem::TopPConfig;
use netsens::sensitivity::{
    all_node_removal_sensitivities, estrada_index, subgraph_centrality, top_p_edges, total_communicability,
    Convention, Measure, ReportStatus, SensitivityOptions,
};
use netsens::{fixtures, BoundContext, BoundResult, EdgePair, Graph, SensitivityReport};
use serde_json::json;

use crate::input::{load_updates, GraphArgs, Input};
use crate::table::{Cell, Table};

/// Result classes with their process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Success,
    EstimatorWarning,
    NotConverged,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 3,
            Outcome::EstimatorWarning => 4,
        }
    }

    fn from_status(s: KrylovStatus) -> Self {
        if s.is_ok() {
            Outcome::Success
        } else {
            Outcome::NotConverged
        }
    }

    fn from_report(r: &SensitivityReport) -> Self {
        if !r.converged() {
            Outcome::NotConverged
        } else if r.estimator_warning() {
            Outcome::EstimatorWarning
        } else {
            Outcome::Success
        }
    }
}

pub enum Output {
    Table(Table, Outcome),
    Text(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    /// Total communicability.
    Tn,
    /// Subgraph centrality of `--focus`.
    Sc,
    /// Estrada index.
    Ee,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    RankOne,
    /// Derivative along `E_ij + E_ji` (undirected graphs only).
    Doubled,
}

#[derive(Args, Debug, Clone)]
pub struct KrylovArgs {
    /// Relative tolerance; sensitivity sweeps use tol / n.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub m_max: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SensArgs {
    #[arg(long, value_enum, default_value_t = MeasureArg::Tn)]
    pub measure: MeasureArg,
    /// Focus node for `--measure sc`.
    #[arg(long)]
    pub focus: Option<usize>,
    #[arg(long, value_enum, default_value_t = ConventionArg::RankOne)]
    pub convention: ConventionArg,
    #[command(flatten)]
    pub krylov: KrylovArgs,
}

impl KrylovArgs {
    fn options(&self) -> Result<SensitivityOptions<f64>> {
        if !(self.tol > 0.0) || self.m_max == 0 {
            bail!("--tol must be positive and --m-max at least 1");
        }
        Ok(SensitivityOptions { tol: self.tol, m_max: self.m_max, convention: Convention::RankOne })
    }
}

impl SensArgs {
    fn measure(&self, input: &Input) -> Result<Measure> {
        Ok(match (self.measure, self.focus) {
            (MeasureArg::Tn, _) => Measure::Total,
            (MeasureArg::Ee, _) => Measure::Estrada,
            (MeasureArg::Sc, Some(u)) => Measure::Subgraph(input.node(u)?),
            (MeasureArg::Sc, None) => bail!("--measure sc needs --focus"),
        })
    }

    fn options(&self) -> Result<SensitivityOptions<f64>> {
        let convention = match self.convention {
            ConventionArg::RankOne => Convention::RankOne,
            ConventionArg::Doubled => Convention::SymmetricDoubled,
        };
        Ok(SensitivityOptions { convention, ..self.krylov.options()? })
    }
}

#[derive(Args, Debug, Clone)]
pub struct EstimatorArgs {
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Search non-edges instead of existing edges.
    #[arg(long = "virtual")]
    pub virtual_edges: bool,
    /// Block size factor: alpha * p columns per sweep.
    #[arg(long, default_value_t = 3)]
    pub alpha: usize,
    #[arg(long, default_value_t = 10)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EstimatorArgs {
    fn config(&self) -> Result<TopPConfig> {
        if self.p == 0 || self.alpha == 0 || self.max_iters == 0 {
            bail!("--p, --alpha and --max-iters must be at least 1");
        }
        Ok(TopPConfig { p: self.p, alpha: self.alpha, max_iters: self.max_iters, seed: self.seed, verify: true })
    }
}

fn measure_name(m: Measure) -> &'static str {
    match m {
        Measure::Total => "tn",
        Measure::Subgraph(_) => "sc",
        Measure::Estrada => "ee",
    }
}

fn status_text(s: &ReportStatus) -> String {
    match s {
        ReportStatus::Krylov(k) => format!("krylov:{k:?}").to_lowercase(),
        ReportStatus::EstimatorShort { found, requested } => format!("estimator-short:{found}/{requested}"),
        ReportStatus::NoAdmissiblePairs => "no-admissible-pairs".into(),
    }
}

#[derive(Args, Debug)]
pub struct TopEdgesArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sens: SensArgs,
    #[command(flatten)]
    pub est: EstimatorArgs,
}

pub fn top_edges(args: &TopEdgesArgs) -> Result<Output> {
    let input = args.graph.load()?;
    let measure = args.sens.measure(&input)?;
    let opts = args.sens.options()?;
    let report = top_p_edges(&input.graph, measure, args.est.virtual_edges, &opts, &args.est.config()?)?;
    let convention = match opts.convention {
        Convention::RankOne => "rank-one",
        Convention::SymmetricDoubled => "doubled",
    };
    let mut t = Table::new(
        "top-edges",
        &["rank", "i", "j", "label_i", "label_j", "sensitivity", "measure", "convention"],
    );
    for (k, e) in report.entries.iter().enumerate() {
        t.push(vec![
            (k + 1).into(),
            input.id(e.i).into(),
            input.id(e.j).into(),
            input.label(e.i).into(),
            input.label(e.j).into(),
            e.value.into(),
            measure_name(measure).into(),
            convention.into(),
        ]);
    }
    let statuses: Vec<String> = report.statuses.iter().map(status_text).collect();
    if report.statuses.contains(&ReportStatus::NoAdmissiblePairs) {
        eprintln!("note: the mask admits no pairs; nothing to report");
    }
    t.meta("statuses", json!(statuses));
    t.meta("krylov_dimension", json!(report.m));
    t.meta("estimator_iterations", json!(report.estimator_iterations));
    t.meta("tol", json!(opts.tol));
    t.meta("virtual", json!(args.est.virtual_edges));
    Ok(Output::Table(t, Outcome::from_report(&report)))
}

#[derive(Args, Debug)]
pub struct NodeSensArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Also report the subgraph-centrality sensitivity of this node.
    #[arg(long)]
    pub focus: Option<usize>,
    #[command(flatten)]
    pub krylov: KrylovArgs,
}

pub fn node_sens(args: &NodeSensArgs) -> Result<Output> {
    let input = args.graph.load()?;
    let opts = args.krylov.options()?;
    let g = &input.graph;
    let mut measures = vec![Measure::Total, Measure::Estrada];
    let mut columns = vec!["node", "label", "s_tn", "s_ee"];
    if let Some(u) = args.focus {
        measures.push(Measure::Subgraph(input.node(u)?));
        columns.push("s_sc");
    }
    let mut outcome = Outcome::Success;
    let mut values = Vec::new();
    for &m in &measures {
        let (v, status, _) = all_node_removal_sensitivities(g, m, &opts)?;
        outcome = outcome.max(Outcome::from_status(status));
        values.push(v);
    }
    let mut t = Table::new("node-sens", &columns);
    for v in 0..g.n() {
        let mut row: Vec<Cell> = vec![input.id(v).into(), input.label(v).into()];
        row.extend(values.iter().map(|col| Cell::from(col[v])));
        t.push(row);
    }
    t.meta("tol", json!(opts.tol));
    Ok(Output::Table(t, outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    Exact,
    Lanczos,
    Gershgorin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FovArg {
    /// Proven disk of radius sqrt(|A|_1 |A|_inf).
    Norm,
    /// Sampled numerical radius (heuristic).
    Sampled,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Removed node.
    #[arg(long, conflicts_with = "edge", required_unless_present = "edge")]
    pub node: Option<usize>,
    /// Modified edge `I J`.
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub edge: Option<Vec<usize>>,
    /// Spectral interval for undirected graphs.
    #[arg(long, value_enum, default_value_t = SpectrumArg::Lanczos)]
    pub spectrum: SpectrumArg,
    #[arg(long, default_value_t = 2000)]
    pub exact_cap: usize,
    /// Numerical-range disk for digraphs.
    #[arg(long, value_enum, default_value_t = FovArg::Norm)]
    pub fov: FovArg,
    /// Assert that the adjacency matrix is normal (constant 1 instead of (1+sqrt 2)^2).
    #[arg(long)]
    pub normal: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Regime1 => "regime1",
        Regime::Regime2 => "regime2",
        Regime::Disk => "disk",
        Regime::Generic => "generic",
        Regime::Inapplicable => "inapplicable",
        Regime::Vanishing => "vanishing",
    }
}

fn bound_context(args: &BoundsArgs, g: &Graph) -> Result<BoundContext> {
    let mut ctx = if g.is_directed() {
        let method = match args.fov {
            FovArg::Norm => FovMethod::NormBound,
            FovArg::Sampled => FovMethod::Sampled { angles: 16, safety: 1.05, seed: args.seed },
        };
        fov_disk(g, method)?
    } else {
        let method = match args.spectrum {
            SpectrumArg::Exact => SpectrumMethod::ExactDense { cap: args.exact_cap },
            SpectrumArg::Lanczos => SpectrumMethod::Lanczos { max_steps: 100, seed: args.seed },
            SpectrumArg::Gershgorin => SpectrumMethod::Gershgorin,
        };
        spectrum_interval(g, method)?
    };
    if args.normal {
        ctx.constant = 1.0;
    }
    Ok(ctx)
}

/// Directed node-removal bounds with `m = d(u, v) + d(v, u) + 1` and the total degree of `v`.
fn directed_node_map(g: &Graph, v: usize, ctx: &BoundContext) -> Vec<BoundResult> {
    let to_v = g.distances_to(v);
    let from_v = g.geodesic_distances(v);
    let (_, wo) = g.out_edges(v);
    let (_, wi) = g.in_edges(v);
    let deg: f64 = wo.iter().chain(wi).sum();
    (0..g.n())
        .map(|u| match (to_v[u], from_v[u]) {
            (Some(a), Some(b)) => node_bound(ctx, deg, a + b + 1, true),
            _ => BoundResult { value: 0.0, regime: Regime::Vanishing, m: None },
        })
        .collect()
}

pub fn bounds(args: &BoundsArgs) -> Result<Output> {
    let input = args.graph.load()?;
    let g = &input.graph;
    let ctx = bound_context(args, g)?;
    let results = match (&args.edge, args.node) {
        (Some(e), _) => edge_sensitivity_bound_map(g, input.node(e[0])?, input.node(e[1])?, &ctx)?,
        (None, Some(v)) if g.is_directed() => directed_node_map(g, input.node(v)?, &ctx),
        (None, Some(v)) => sensitivity_bound_map(g, input.node(v)?, &ctx)?,
        (None, None) => bail!("give --node or --edge"),
    };
    let mut t = Table::new("bounds", &["node", "label", "m", "regime", "bound"]);
    for (u, r) in results.iter().enumerate() {
        let m = r.m.map_or(Cell::Empty, Cell::from);
        t.push(vec![input.id(u).into(), input.label(u).into(), m, regime_name(r.regime).into(), r.value.into()]);
    }
    t.meta("lambda_min", json!(ctx.lambda_min));
    t.meta("lambda_max", json!(ctx.lambda_max));
    t.meta("r", json!(ctx.r));
    t.meta("c", json!(ctx.c));
    t.meta("constant", json!(ctx.constant));
    t.meta("provenance", json!(format!("{:?}", ctx.provenance)));
    Ok(Output::Table(t, Outcome::Success))
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 400, 800, 1600, 3200, 6400, 12800])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub avg_degree: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 3)]
    pub alpha: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Timed runs per size; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

pub fn bench(args: &BenchArgs) -> Result<Output> {
    if args.sizes.is_empty() || args.repeats == 0 {
        bail!("need at least one size and one repeat");
    }
    let opts = SensitivityOptions::with_tol(args.tol);
    let cfg = TopPConfig { p: args.p, alpha: args.alpha, seed: args.seed, ..TopPConfig::default() };
    let mut t = Table::new(
        "bench",
        &["n", "edges", "avg_degree", "krylov_iters", "estimator_iters", "wall_time_s"],
    );
    let mut outcome = Outcome::Success;
    for (k, &n) in args.sizes.iter().enumerate() {
        let g: Graph =
            random_geometric_graph(n, threshold_for_mean_degree(n, args.avg_degree), args.seed + k as u64)?;
        let mut best = f64::INFINITY;
        let mut report = None;
        for _ in 0..args.repeats {
            let start = Instant::now();
            let r = top_p_edges(&g, Measure::Total, true, &opts, &cfg)?;
            best = best.min(start.elapsed().as_secs_f64());
            report = Some(r);
        }
        let report = report.expect("at least one repeat");
        outcome = outcome.max(Outcome::from_report(&report));
        t.push(vec![
            n.into(),
            g.edge_count().into(),
            (g.nnz() as f64 / n as f64).into(),
            report.m.into(),
            report.estimator_iterations.into(),
            best.into(),
        ]);
    }
    t.meta("tol", json!(args.tol));
    t.meta("p", json!(args.p));
    Ok(Output::Table(t, outcome))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Random geometric graph in the unit square.
    Rgg,
    Florentine,
    LondonLike,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WriteFormat {
    Mtx,
    Edges,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 10.0)]
    pub avg_degree: f64,
    /// Connection radius; overrides `--avg-degree`.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = WriteFormat::Mtx)]
    pub write: WriteFormat,
}

pub fn generate(args: &GenArgs) -> Result<Output> {
    let g: Graph = match args.kind {
        GenKind::Rgg => {
            let d = args.radius.unwrap_or_else(|| threshold_for_mean_degree(args.n, args.avg_degree));
            random_geometric_graph(args.n, d, args.seed)?
        }
        GenKind::Florentine => fixtures::florentine()?.0,
        GenKind::LondonLike => fixtures::london_like()?.0,
    };
    Ok(Output::Text(match args.write {
        WriteFormat::Mtx => write_matrix_market(&g),
        WriteFormat::Edges => write_edge_list(&g),
    }))
}

#[derive(Args, Debug)]
pub struct ApplyUpdateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Weight increments `i j [delta]`, one per line.
    #[arg(long)]
    pub updates: Option<PathBuf>,
    /// Add the top-P virtual edges by total-communicability sensitivity.
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub krylov: KrylovArgs,
}

pub fn apply_update(args: &ApplyUpdateArgs) -> Result<Output> {
    let input = args.graph.load()?;
    let opts = args.krylov.options()?;
    let g = &input.graph;
    let mut updates: Vec<EdgePair> = match &args.updates {
        Some(path) => load_updates(path, input.base)?,
        None => Vec::new(),
    };
    let mut outcome = Outcome::Success;
    if let Some(p) = args.top {
        let cfg = TopPConfig { p, seed: args.seed, ..TopPConfig::default() };
        let report = top_p_edges(g, Measure::Total, true, &opts, &cfg)?;
        outcome = outcome.max(Outcome::from_report(&report));
        updates.extend(report.entries.iter().map(|e| EdgePair::new(e.i, e.j, 1.0)));
    }
    let after_graph = g.with_updates(&updates)?;
    let before = total_communicability(g, &opts)?;
    let after = total_communicability(&after_graph, &opts)?;
    outcome = outcome.max(Outcome::from_status(before.status)).max(Outcome::from_status(after.status));
    let percent = 100.0 * (after.value - before.value) / before.value;
    let mut t = Table::new("apply-update", &["c_tn_before", "c_tn_after", "percent_increase", "updates"]);
    t.push(vec![before.value.into(), after.value.into(), percent.into(), updates.len().into()]);
    let applied: Vec<_> = updates.iter().map(|u| json!([input.id(u.i), input.id(u.j), u.value])).collect();
    t.meta("applied", json!(applied));
    Ok(Output::Table(t, outcome))
}

#[derive(Args, Debug)]
pub struct CommunicabilityArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Add one subgraph-centrality row per node.
    #[arg(long)]
    pub per_node: bool,
    /// Largest graph for the dense Estrada index.
    #[arg(long, default_value_t = netsens::sensitivity::DEFAULT_ESTRADA_CAP)]
    pub estrada_cap: usize,
    #[command(flatten)]
    pub krylov: KrylovArgs,
}

pub fn communicability(args: &CommunicabilityArgs) -> Result<Output> {
    let input = args.graph.load()?;
    let opts = args.krylov.options()?;
    let g = &input.graph;
    let mut t = Table::new("communicability", &["quantity", "node", "label", "value"]);
    let tn = total_communicability(g, &opts)?;
    let mut outcome = Outcome::from_status(tn.status);
    t.push(vec!["total_communicability".into(), Cell::Empty, Cell::Empty, tn.value.into()]);
    match estrada_index(g, args.estrada_cap) {
        Ok(ee) => t.push(vec!["estrada_index".into(), Cell::Empty, Cell::Empty, ee.into()]),
        Err(e) => eprintln!("note: {e}"),
    }
    if args.per_node {
        for v in 0..g.n() {
            let sc = subgraph_centrality(g, v, &opts)?;
            outcome = outcome.max(Outcome::from_status(sc.status));
            t.push(vec!["subgraph_centrality".into(), input.id(v).into(), input.label(v).into(), sc.value.into()]);
        }
    }
    Ok(Output::Table(t, outcome))
}
