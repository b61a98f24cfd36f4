//! Communicability measures and their sensitivities to edge and node modifications.
//!
//! For a measure `f(A)` and a direction `E`, the sensitivity is the directional derivative of
//! `f` at `A` along `E`. For the unit directions `E_ij = e_i e_jᵀ` all sensitivities of one
//! measure are entries of a single matrix:
//!
//! | measure | `S_ij` |
//! |---|---|
//! | total communicability `1ᵀ exp(A) 1` | `[L_exp(Aᵀ, 1 1ᵀ)]_ij` |
//! | subgraph centrality `[exp(A)]_uu` | `[L_exp(Aᵀ, e_u e_uᵀ)]_ij` |
//! | Estrada index `trace exp(A)` | `[exp(Aᵀ)]_ij` |
//!
//! Values follow the rank-one convention: the direction is the single entry `E_ij`, also for
//! undirected graphs. [`Convention::SymmetricDoubled`] reports the derivative along
//! `E_ij + E_ji` instead, which for undirected graphs is exactly twice as large.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::{expm, symmetric_eigen, DenseMatrix};
use crate::error::{Error, Result};
use crate::graph::{EdgePair, Graph};
use crate::krylov::{
    arnoldi, expm_action, krylov_frechet, GraphOperator, KrylovOptions, KrylovStatus, LowRankFrechet,
};
use crate::maxelem::{top_p, Mask, MaskedOperator, TopPConfig, TopPStatus};
use crate::scalar::Scalar;

pub const DEFAULT_ESTRADA_CAP: usize = 2000;
pub const DEFAULT_FINITE_DIFFERENCE_CAP: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// `1ᵀ exp(A) 1`.
    Total,
    /// `[exp(A)]_uu` for the focus node `u`.
    Subgraph(usize),
    /// `trace exp(A)`.
    Estrada,
}

impl Measure {
    fn validate(self, n: usize) -> Result<()> {
        match self {
            Measure::Subgraph(u) if u >= n => Err(Error::Index { index: u, size: n }),
            _ => Ok(()),
        }
    }

    /// `b = c` of the Fréchet derivative whose entries are the sensitivities.
    fn frechet_vector<T: Scalar>(self, n: usize) -> Option<Vec<T>> {
        match self {
            Measure::Total => Some(vec![T::one(); n]),
            Measure::Subgraph(u) => {
                let mut e = vec![T::zero(); n];
                e[u] = T::one();
                Some(e)
            }
            Measure::Estrada => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Convention {
    /// Direction `E_ij`.
    #[default]
    RankOne,
    /// Direction `E_ij + E_ji` on undirected graphs; ignored for digraphs.
    SymmetricDoubled,
}

impl Convention {
    fn factor<T: Scalar>(self, g: &Graph<T>) -> T {
        match self {
            Convention::SymmetricDoubled if !g.is_directed() => T::lit(2.0),
            _ => T::one(),
        }
    }
}

/// Which candidate edges a sweep or search considers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeMask {
    Existing,
    /// Pairs `i ≠ j` that are not edges.
    Virtual,
    Pattern(Vec<(usize, usize)>),
}

impl EdgeMask {
    /// The position mask; undirected graphs use the upper triangle so every edge appears once.
    fn to_mask<T: Scalar>(&self, g: &Graph<T>) -> Result<Mask> {
        let upper = !g.is_directed();
        Ok(match self {
            EdgeMask::Existing if upper => Mask::ExistingUpper,
            EdgeMask::Existing => Mask::Existing,
            EdgeMask::Virtual if upper => Mask::VirtualUpper,
            EdgeMask::Virtual => Mask::Virtual,
            EdgeMask::Pattern(pairs) => {
                let mut out = Vec::with_capacity(pairs.len());
                for &(i, j) in pairs {
                    check_pair(g, i, j)?;
                    out.push(if upper { (i.min(j), i.max(j)) } else { (i, j) });
                }
                out.sort_unstable();
                out.dedup();
                Mask::Pattern(out)
            }
        })
    }
}

fn admissible_count<T: Scalar>(g: &Graph<T>, mask: &Mask) -> usize {
    let n = g.n();
    let pairs = n * n.saturating_sub(1);
    match mask {
        Mask::Existing => g.nnz(),
        Mask::ExistingUpper => g.edge_count(),
        Mask::Virtual => pairs - g.nnz(),
        Mask::VirtualUpper => pairs / 2 - g.edge_count(),
        Mask::Pattern(p) => p.len(),
        Mask::Full => n * n,
    }
}

fn mask_pairs<T: Scalar>(g: &Graph<T>, mask: &Mask) -> Vec<(usize, usize)> {
    let n = g.n();
    match mask {
        Mask::Existing => g.entries().map(|(i, j, _)| (i, j)).collect(),
        Mask::ExistingUpper => g.entries().filter(|e| e.0 < e.1).map(|(i, j, _)| (i, j)).collect(),
        Mask::Virtual | Mask::VirtualUpper | Mask::Full => {
            let upper = *mask == Mask::VirtualUpper;
            let full = *mask == Mask::Full;
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && (!upper || i < j) && (full || !g.has_edge(i, j)))
                .collect()
        }
        Mask::Pattern(p) => p.clone(),
    }
}

fn check_pair<T: Scalar>(g: &Graph<T>, i: usize, j: usize) -> Result<()> {
    let n = g.n();
    for k in [i, j] {
        if k >= n {
            return Err(Error::Index { index: k, size: n });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(format!("({i}, {i}) would be a self-loop")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityOptions<T> {
    /// Relative tolerance for measure values; the single Fréchet derivative behind a sweep is
    /// computed with `tol / n`.
    pub tol: T,
    pub m_max: usize,
    pub convention: Convention,
}

impl<T: Scalar> Default for SensitivityOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-3), m_max: 100, convention: Convention::RankOne }
    }
}

impl<T: Scalar> SensitivityOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }

    fn measure_opts(&self) -> KrylovOptions<T> {
        KrylovOptions { tol: self.tol, m_max: self.m_max, ..KrylovOptions::default() }
    }

    fn derivative_opts(&self, n: usize) -> KrylovOptions<T> {
        KrylovOptions {
            tol: self.tol / T::from_usize_lossy(n.max(1)),
            m_max: self.m_max,
            ..KrylovOptions::default()
        }
    }
}

/// A Krylov-computed scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub status: KrylovStatus,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportStatus {
    Krylov(KrylovStatus),
    /// The search found fewer pairs than requested although enough are admissible.
    EstimatorShort { found: usize, requested: usize },
    NoAdmissiblePairs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport<T> {
    pub measure: Measure,
    /// Sorted by value descending, ties by `(i, j)`.
    pub entries: Vec<EdgePair<T>>,
    pub convention: Convention,
    pub tol: T,
    /// Krylov dimension of the derivative (largest one over columns for columnwise paths).
    pub m: usize,
    /// Block sweeps of the largest-entry search; 0 when no search ran.
    pub estimator_iterations: usize,
    pub statuses: Vec<ReportStatus>,
}

impl<T: Scalar> SensitivityReport<T> {
    pub fn converged(&self) -> bool {
        !self.statuses.contains(&ReportStatus::Krylov(KrylovStatus::NotConverged))
    }

    pub fn estimator_warning(&self) -> bool {
        self.statuses.iter().any(|s| matches!(s, ReportStatus::EstimatorShort { .. }))
    }
}

fn sort_entries<T: Scalar>(entries: &mut [EdgePair<T>]) {
    entries.sort_by(|a, b| {
        b.value.partial_cmp(&a.value).unwrap_or(std::cmp::Ordering::Equal).then((a.i, a.j).cmp(&(b.i, b.j)))
    });
}

fn unit<T: Scalar>(n: usize, k: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[k] = T::one();
    e
}

fn worst(a: KrylovStatus, b: KrylovStatus) -> KrylovStatus {
    use KrylovStatus::*;
    match (a, b) {
        (NotConverged, _) | (_, NotConverged) => NotConverged,
        (Converged, _) | (_, Converged) => Converged,
        _ => Exact,
    }
}

/// `1ᵀ exp(A) 1`.
pub fn total_communicability<T: Scalar>(g: &Graph<T>, opts: &SensitivityOptions<T>) -> Result<Estimate<T>> {
    let n = g.n();
    if n == 0 {
        return Ok(Estimate { value: T::zero(), status: KrylovStatus::Exact, iterations: 0 });
    }
    let act = expm_action(g, &vec![T::one(); n], false, &opts.measure_opts())?;
    Ok(Estimate { value: act.value.iter().copied().sum(), status: act.status, iterations: act.iterations })
}

/// `[exp(A)]_vv`.
pub fn subgraph_centrality<T: Scalar>(g: &Graph<T>, v: usize, opts: &SensitivityOptions<T>) -> Result<Estimate<T>> {
    Measure::Subgraph(v).validate(g.n())?;
    let act = expm_action(g, &unit(g.n(), v), false, &opts.measure_opts())?;
    Ok(Estimate { value: act.value[v], status: act.status, iterations: act.iterations })
}

/// `trace exp(A)` from a dense exponential; refused above `cap` nodes.
pub fn estrada_index<T: Scalar>(g: &Graph<T>, cap: usize) -> Result<T> {
    if g.n() > cap {
        return Err(Error::TooLarge {
            n: g.n(),
            cap,
            hint: "sum per-node subgraph centralities instead",
        });
    }
    Ok(expm(&g.to_dense())?.trace())
}

/// Columns `exp(Aᵀ) e_j` for the given `j`, in order.
fn exp_transpose_columns<T: Scalar>(
    g: &Graph<T>,
    cols: &[usize],
    kopts: &KrylovOptions<T>,
) -> Result<Vec<(Vec<T>, KrylovStatus, usize)>> {
    let n = g.n();
    cols.par_iter()
        .map(|&j| expm_action(g, &unit(n, j), true, kopts).map(|a| (a.value, a.status, a.iterations)))
        .collect()
}

fn frechet_for<T: Scalar>(g: &Graph<T>, measure: Measure, opts: &SensitivityOptions<T>) -> Result<LowRankFrechet<T>> {
    let b = measure.frechet_vector(g.n()).expect("Fréchet path is only used for TN and SC");
    krylov_frechet(g, &b, &b, &opts.derivative_opts(g.n()))
}

/// Sensitivity of `measure` to the weight of the single pair `(i, j)`.
pub fn edge_sensitivity<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    i: usize,
    j: usize,
    opts: &SensitivityOptions<T>,
) -> Result<Estimate<T>> {
    check_pair(g, i, j)?;
    measure.validate(g.n())?;
    let factor = opts.convention.factor(g);
    match measure {
        Measure::Estrada => {
            let act = expm_action(g, &unit(g.n(), j), true, &opts.derivative_opts(g.n()))?;
            Ok(Estimate { value: act.value[i] * factor, status: act.status, iterations: act.iterations })
        }
        _ => {
            let f = frechet_for(g, measure, opts)?;
            Ok(Estimate { value: f.entry(i, j)? * factor, status: f.status, iterations: f.iterations })
        }
    }
}

/// Sensitivities of every pair in `mask` from one derivative (TN, SC) or one column of
/// `exp(Aᵀ)` per distinct column index (EE).
pub fn all_edge_sensitivities<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    mask: &EdgeMask,
    opts: &SensitivityOptions<T>,
) -> Result<SensitivityReport<T>> {
    measure.validate(g.n())?;
    let pairs = mask_pairs(g, &mask.to_mask(g)?);
    let factor = opts.convention.factor(g);
    let mut report = SensitivityReport {
        measure,
        entries: Vec::with_capacity(pairs.len()),
        convention: opts.convention,
        tol: opts.tol,
        m: 0,
        estimator_iterations: 0,
        statuses: Vec::new(),
    };
    if pairs.is_empty() {
        report.statuses.push(ReportStatus::NoAdmissiblePairs);
        return Ok(report);
    }
    match measure {
        Measure::Estrada => {
            let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            cols.sort_unstable();
            cols.dedup();
            let columns = exp_transpose_columns(g, &cols, &opts.derivative_opts(g.n()))?;
            let mut status = KrylovStatus::Exact;
            for (_, s, it) in &columns {
                status = worst(status, *s);
                report.m = report.m.max(*it);
            }
            report.statuses.push(ReportStatus::Krylov(status));
            for &(i, j) in &pairs {
                let k = cols.binary_search(&j).expect("column was evaluated");
                report.entries.push(EdgePair::new(i, j, columns[k].0[i] * factor));
            }
        }
        _ => {
            let f = frechet_for(g, measure, opts)?;
            report.m = f.iterations;
            report.statuses.push(ReportStatus::Krylov(f.status));
            report.entries = pairs
                .par_iter()
                .map(|&(i, j)| f.entry(i, j).map(|v| EdgePair::new(i, j, v * factor)))
                .collect::<Result<_>>()?;
        }
    }
    sort_entries(&mut report.entries);
    Ok(report)
}

/// Estimated `p` largest sensitivities over existing or virtual edges.
///
/// TN and SC search the masked balanced factorization of the low-rank derivative. EE on an
/// undirected graph searches the masked factorization `exp(A) ≈ (V e^{T/2})(V e^{T/2})ᵀ` from
/// a Lanczos run, then re-evaluates twice as many candidates as requested on exact columns of
/// `exp(A)`. EE on a digraph scans columns of `exp(Aᵀ)`.
pub fn top_p_edges<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    virtual_edges: bool,
    opts: &SensitivityOptions<T>,
    cfg: &TopPConfig,
) -> Result<SensitivityReport<T>> {
    let mask = if virtual_edges { EdgeMask::Virtual } else { EdgeMask::Existing };
    top_p_masked(g, measure, &mask, opts, cfg)
}

pub fn top_p_masked<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    mask: &EdgeMask,
    opts: &SensitivityOptions<T>,
    cfg: &TopPConfig,
) -> Result<SensitivityReport<T>> {
    measure.validate(g.n())?;
    if cfg.p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let n = g.n();
    let m = mask.to_mask(g)?;
    let admissible = admissible_count(g, &m);
    let factor = opts.convention.factor(g);
    let mut report = SensitivityReport {
        measure,
        entries: Vec::new(),
        convention: opts.convention,
        tol: opts.tol,
        m: 0,
        estimator_iterations: 0,
        statuses: Vec::new(),
    };
    if admissible == 0 {
        report.statuses.push(ReportStatus::NoAdmissiblePairs);
        return Ok(report);
    }
    let kopts = opts.derivative_opts(n);
    let (mut entries, status) = match measure {
        Measure::Estrada if g.is_directed() => {
            let cols: Vec<usize> = (0..n).collect();
            let columns = exp_transpose_columns(g, &cols, &kopts)?;
            let probe = MaskedOperator::new(g, m, DenseMatrix::zeros(n, 0), DenseMatrix::zeros(n, 0))?;
            let mut status = KrylovStatus::Exact;
            let mut found = Vec::new();
            for (j, (col, s, it)) in columns.into_iter().enumerate() {
                status = worst(status, s);
                report.m = report.m.max(it);
                found.extend(
                    col.into_iter()
                        .enumerate()
                        .filter(|&(i, v)| probe.in_mask(i, j) && v != T::zero())
                        .map(|(i, v)| EdgePair::new(i, j, v)),
                );
                sort_entries(&mut found);
                found.truncate(cfg.p);
            }
            (found, status)
        }
        Measure::Estrada => {
            let (b, it) = lanczos_exp_half(g, opts.m_max, cfg.seed)?;
            report.m = it;
            let s = MaskedOperator::new(g, m, b.clone(), b)?;
            let wide = TopPConfig { p: (2 * cfg.p).min(admissible), ..*cfg };
            let cand = top_p(&s, &wide)?;
            report.estimator_iterations = cand.iterations;
            let mut cols: Vec<usize> = cand.entries.iter().map(|e| e.j).collect();
            cols.sort_unstable();
            cols.dedup();
            let columns = exp_transpose_columns(g, &cols, &kopts)?;
            let mut status = KrylovStatus::Exact;
            for (_, s, _) in &columns {
                status = worst(status, *s);
            }
            let mut exact: Vec<EdgePair<T>> = cand
                .entries
                .iter()
                .map(|e| EdgePair::new(e.i, e.j, columns[cols.binary_search(&e.j).unwrap()].0[e.i]))
                .filter(|e| e.value != T::zero())
                .collect();
            sort_entries(&mut exact);
            exact.truncate(cfg.p);
            (exact, status)
        }
        _ => {
            let f = frechet_for(g, measure, opts)?;
            report.m = f.iterations;
            let (b, c) = f.balanced_factors();
            let s = MaskedOperator::new(g, m, b, c)?;
            let res = top_p(&s, cfg)?;
            report.estimator_iterations = res.iterations;
            if res.status == TopPStatus::Short && res.entries.len() < cfg.p.min(admissible) {
                report
                    .statuses
                    .push(ReportStatus::EstimatorShort { found: res.entries.len(), requested: cfg.p });
            }
            (res.entries, f.status)
        }
    };
    report.statuses.insert(0, ReportStatus::Krylov(status));
    for e in &mut entries {
        e.value *= factor;
    }
    sort_entries(&mut entries);
    report.entries = entries;
    Ok(report)
}

/// `B` with `exp(A) ≈ B Bᵀ`, `B = V Q e^{Θ/2}` from a Lanczos run of at most `m_max` steps
/// on a seeded random start; returns the Krylov dimension as well.
fn lanczos_exp_half<T: Scalar>(g: &Graph<T>, m_max: usize, seed: u64) -> Result<(DenseMatrix<T>, usize)> {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
    let op = GraphOperator { graph: g, transposed: false };
    let dec = arnoldi(&op, &start, m_max.clamp(1, n), true, true)?;
    let m = dec.m();
    let (theta, q) = symmetric_eigen(&dec.h_square(m))?;
    let half = T::lit(0.5);
    let scaled = DenseMatrix::from_fn(m, m, |r, k| q[(r, k)] * (theta[k] * half).exp());
    Ok((dec.basis_matrix(m).matmul(&scaled), m))
}

/// Signed sensitivity of `measure` to deleting node `v`, the derivative along
/// `E_v = −(e_v A_{v,:} + A_{:,v} e_vᵀ)`; usually negative.
pub fn node_removal_sensitivity<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    v: usize,
    opts: &SensitivityOptions<T>,
) -> Result<Estimate<T>> {
    let n = g.n();
    if v >= n {
        return Err(Error::Index { index: v, size: n });
    }
    measure.validate(n)?;
    let (out_j, out_w) = g.out_edges(v);
    let (in_i, in_w) = g.in_edges(v);
    if out_j.is_empty() && in_i.is_empty() {
        return Ok(Estimate { value: T::zero(), status: KrylovStatus::Exact, iterations: 0 });
    }
    let mut total = T::zero();
    let (status, iterations) = match measure {
        Measure::Estrada => {
            let kopts = opts.derivative_opts(n);
            // [exp(Aᵀ)]_{vj} = [exp(A) e_v]_j and [exp(Aᵀ)]_{iv} = [exp(Aᵀ) e_v]_i
            let row = expm_action(g, &unit(n, v), false, &kopts)?;
            let col = if g.is_directed() { expm_action(g, &unit(n, v), true, &kopts)? } else { row.clone() };
            for (&j, &w) in out_j.iter().zip(out_w) {
                total += w * row.value[j];
            }
            for (&i, &w) in in_i.iter().zip(in_w) {
                total += w * col.value[i];
            }
            (worst(row.status, col.status), row.iterations.max(col.iterations))
        }
        _ => {
            let f = frechet_for(g, measure, opts)?;
            for (&j, &w) in out_j.iter().zip(out_w) {
                total += w * f.entry(v, j)?;
            }
            for (&i, &w) in in_i.iter().zip(in_w) {
                total += w * f.entry(i, v)?;
            }
            (f.status, f.iterations)
        }
    };
    Ok(Estimate { value: -total, status, iterations })
}

/// [`node_removal_sensitivity`] for every node at once, from a single derivative (TN, SC)
/// or one column of `exp(Aᵀ)` per node with incoming edges (EE).
pub fn all_node_removal_sensitivities<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    opts: &SensitivityOptions<T>,
) -> Result<(Vec<T>, KrylovStatus, usize)> {
    let n = g.n();
    measure.validate(n)?;
    let mut out = vec![T::zero(); n];
    if g.nnz() == 0 {
        return Ok((out, KrylovStatus::Exact, 0));
    }
    // edge (i, j) enters the directions of both of its endpoints
    let mut add = |i: usize, j: usize, w: T, s: T| {
        out[i] -= w * s;
        out[j] -= w * s;
    };
    match measure {
        Measure::Estrada => {
            let cols: Vec<usize> = (0..n).filter(|&j| !g.in_edges(j).0.is_empty()).collect();
            let columns = exp_transpose_columns(g, &cols, &opts.derivative_opts(n))?;
            let mut status = KrylovStatus::Exact;
            let mut m = 0;
            for (&j, (col, st, it)) in cols.iter().zip(&columns) {
                status = worst(status, *st);
                m = m.max(*it);
                let (srcs, ws) = g.in_edges(j);
                for (&i, &w) in srcs.iter().zip(ws) {
                    add(i, j, w, col[i]);
                }
            }
            Ok((out, status, m))
        }
        _ => {
            let f = frechet_for(g, measure, opts)?;
            for (i, j, w) in g.entries() {
                add(i, j, w, f.entry(i, j)?);
            }
            Ok((out, f.status, f.iterations))
        }
    }
}

fn dense_measure<T: Scalar>(a: &DenseMatrix<T>, measure: Measure) -> Result<T> {
    let e = expm(a)?;
    Ok(match measure {
        Measure::Total => e.as_slice().iter().copied().sum(),
        Measure::Subgraph(u) => e[(u, u)],
        Measure::Estrada => e.trace(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDifference<T> {
    /// Rank-one sensitivity from [`edge_sensitivity`].
    pub analytic: T,
    /// `(f(A + hE_ij) − f(A − hE_ij)) / 2h` on dense exponentials.
    pub numeric: T,
}

/// Compares the sensitivity of `(i, j)` with a central difference of the measure.
pub fn finite_difference_check<T: Scalar>(
    g: &Graph<T>,
    measure: Measure,
    i: usize,
    j: usize,
    h: T,
    opts: &SensitivityOptions<T>,
    cap: usize,
) -> Result<FiniteDifference<T>> {
    check_pair(g, i, j)?;
    measure.validate(g.n())?;
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if g.n() > cap {
        return Err(Error::TooLarge { n: g.n(), cap, hint: "check a truncated subgraph" });
    }
    let a = g.to_dense();
    let mut plus = a.clone();
    plus[(i, j)] += h;
    let mut minus = a;
    minus[(i, j)] -= h;
    let numeric = (dense_measure(&plus, measure)? - dense_measure(&minus, measure)?) / (h + h);
    let rank_one = SensitivityOptions { convention: Convention::RankOne, ..*opts };
    let analytic = edge_sensitivity(g, measure, i, j, &rank_one)?.value;
    Ok(FiniteDifference { analytic, numeric })
}
