//! Locating the largest-magnitude entries of a matrix that is only available through
//! products `S x` and `Sᵀ y`.
//!
//! [`power_max`] is the alternating ascent for `max |s_ij|` (a mixed `1 → ∞` operator norm),
//! [`top_p`] a blocked variant that harvests several entries per sweep and then double-checks
//! the result by deflation. [`MaskedOperator`] provides the Hadamard-masked low-rank matrices
//! `M ∘ (B Cᵀ)` these searches run on.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::{EdgePair, Graph};
use crate::scalar::{argmax_abs, dot, Scalar};

/// Matrix accessed through products only.
pub trait ImplicitMatrix<T: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn matvec(&self, x: &[T]) -> Vec<T>;
    fn tmatvec(&self, y: &[T]) -> Vec<T>;

    /// Row `i`, i.e. `Sᵀ e_i`.
    fn row(&self, i: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.nrows()];
        e[i] = T::one();
        self.tmatvec(&e)
    }

    fn entry(&self, i: usize, j: usize) -> T {
        self.row(i)[j]
    }

    /// Whether `(i, j)` may be reported (inside the mask, not excluded).
    fn admissible(&self, _i: usize, _j: usize) -> bool {
        true
    }

    /// A cheap upper bound on `max_j |s_ij|`, if one is known.
    fn row_bound(&self, _i: usize) -> Option<T> {
        None
    }
}

impl<T: Scalar> ImplicitMatrix<T> for DenseMatrix<T> {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn matvec(&self, x: &[T]) -> Vec<T> {
        DenseMatrix::matvec(self, x)
    }
    fn tmatvec(&self, y: &[T]) -> Vec<T> {
        DenseMatrix::tmatvec(self, y)
    }
    fn row(&self, i: usize) -> Vec<T> {
        DenseMatrix::row(self, i).to_vec()
    }
    fn entry(&self, i: usize, j: usize) -> T {
        self[(i, j)]
    }
}

/// Sparsity pattern applied to a low-rank product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mask {
    /// Edges of the graph, `M = pattern(A)`.
    Existing,
    /// Edges with `i < j`; one entry per undirected edge.
    ExistingUpper,
    /// Non-edges off the diagonal, `M = 11ᵀ − pattern(A) − I`.
    Virtual,
    /// Non-edges with `i < j`.
    VirtualUpper,
    /// An explicit list of positions.
    Pattern(Vec<(usize, usize)>),
    /// No masking.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum DensePart {
    None,
    Full,
    StrictUpper,
}

/// `M ∘ (B Cᵀ)` with `B`, `C` of size `n × r`; excluded positions read as zero.
#[derive(Clone, Debug)]
pub struct MaskedOperator<T> {
    mask: Mask,
    b: DenseMatrix<T>,
    c: DenseMatrix<T>,
    dense: DensePart,
    // sparse pattern added (sign +1) or removed (sign −1) on top of the dense part
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    // `b_i · c_j` on the pattern, aligned with `rows` and `cols`
    row_vals: Vec<Vec<T>>,
    col_vals: Vec<Vec<T>>,
    sign: T,
    minus_diagonal: bool,
    exclusions: BTreeMap<(usize, usize), T>,
    // row norms of `c`, and column indices sorted by them in descending order
    c_norm: Vec<T>,
    c_order: Vec<usize>,
}

impl<T: Scalar> MaskedOperator<T> {
    pub fn new(graph: &Graph<T>, mask: Mask, b: DenseMatrix<T>, c: DenseMatrix<T>) -> Result<Self> {
        let n = graph.n();
        for f in [&b, &c] {
            if f.rows() != n {
                return Err(Error::Dimension { expected: n, got: f.rows() });
            }
        }
        if b.cols() != c.cols() {
            return Err(Error::Dimension { expected: b.cols(), got: c.cols() });
        }
        let adjacency = |upper: bool| -> Vec<Vec<usize>> {
            (0..n)
                .map(|i| graph.out_edges(i).0.iter().copied().filter(|&j| !upper || j > i).collect())
                .collect()
        };
        let one = T::one();
        let (dense, rows, sign, minus_diagonal) = match &mask {
            Mask::Existing => (DensePart::None, adjacency(false), one, false),
            Mask::ExistingUpper => (DensePart::None, adjacency(true), one, false),
            Mask::Virtual => (DensePart::Full, adjacency(false), -one, true),
            Mask::VirtualUpper => (DensePart::StrictUpper, adjacency(true), -one, false),
            Mask::Full => (DensePart::Full, vec![Vec::new(); n], one, false),
            Mask::Pattern(pairs) => {
                let mut rows = vec![Vec::new(); n];
                for &(i, j) in pairs {
                    if i >= n || j >= n {
                        return Err(Error::Index { index: i.max(j), size: n });
                    }
                    rows[i].push(j);
                }
                for r in &mut rows {
                    r.sort_unstable();
                    r.dedup();
                }
                (DensePart::None, rows, one, false)
            }
        };
        let mut cols = vec![Vec::new(); n];
        let mut col_vals = vec![Vec::new(); n];
        let mut row_vals = Vec::with_capacity(n);
        for (i, r) in rows.iter().enumerate() {
            let vals: Vec<T> = r.iter().map(|&j| dot(b.row(i), c.row(j))).collect();
            for (&j, &v) in r.iter().zip(&vals) {
                cols[j].push(i);
                col_vals[j].push(v);
            }
            row_vals.push(vals);
        }
        let c_norm: Vec<T> = (0..n).map(|j| dot(c.row(j), c.row(j)).sqrt()).collect();
        let mut c_order: Vec<usize> = (0..n).collect();
        c_order.sort_by(|&x, &y| c_norm[y].partial_cmp(&c_norm[x]).unwrap_or(std::cmp::Ordering::Equal));
        let exclusions = BTreeMap::new();
        Ok(Self {
            mask,
            b,
            c,
            dense,
            rows,
            cols,
            row_vals,
            col_vals,
            sign,
            minus_diagonal,
            exclusions,
            c_norm,
            c_order,
        })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn rank(&self) -> usize {
        self.b.cols()
    }

    pub fn n(&self) -> usize {
        self.b.rows()
    }

    fn in_pattern(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    /// Membership in the mask, ignoring exclusions.
    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        match self.mask {
            Mask::Existing | Mask::ExistingUpper | Mask::Pattern(_) => self.in_pattern(i, j),
            Mask::Virtual => i != j && !self.in_pattern(i, j),
            Mask::VirtualUpper => i < j && !self.in_pattern(i, j),
            Mask::Full => true,
        }
    }

    /// Unmasked low-rank entry `b_i · c_j`.
    #[inline]
    pub fn lowrank_entry(&self, i: usize, j: usize) -> T {
        dot(self.b.row(i), self.c.row(j))
    }

    /// Zeroes `(i, j)` from now on; its value is cached for the product corrections.
    pub fn exclude(&mut self, i: usize, j: usize) {
        if i < self.n() && j < self.n() && self.in_mask(i, j) {
            let v = self.lowrank_entry(i, j);
            self.exclusions.insert((i, j), v);
        }
    }

    pub fn exclusions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.exclusions.keys().copied()
    }

    fn apply(&self, x: &[T], transposed: bool) -> Vec<T> {
        let n = self.n();
        assert_eq!(x.len(), n, "masked product dimension mismatch");
        let (p, q, pattern, values) = if transposed {
            (&self.c, &self.b, &self.cols, &self.col_vals)
        } else {
            (&self.b, &self.c, &self.rows, &self.row_vals)
        };
        let r = p.cols();
        let mut y = vec![T::zero(); n];
        match self.dense {
            DensePart::None => {}
            DensePart::Full => {
                let s = q.tmatvec(x);
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = dot(p.row(i), &s);
                }
            }
            DensePart::StrictUpper => {
                // row i of the strict upper part (lower part when transposed) sums over j > i (j < i)
                let mut acc = vec![T::zero(); r];
                let order: Box<dyn Iterator<Item = usize>> =
                    if transposed { Box::new(0..n) } else { Box::new((0..n).rev()) };
                for i in order {
                    y[i] = dot(p.row(i), &acc);
                    crate::scalar::axpy(x[i], q.row(i), &mut acc);
                }
            }
        }
        for i in 0..n {
            let mut s = T::zero();
            for (&j, &v) in pattern[i].iter().zip(&values[i]) {
                s += v * x[j];
            }
            y[i] += self.sign * s;
            if self.minus_diagonal {
                y[i] -= dot(p.row(i), q.row(i)) * x[i];
            }
        }
        for (&(i, j), &v) in &self.exclusions {
            if transposed {
                y[j] -= v * x[i];
            } else {
                y[i] -= v * x[j];
            }
        }
        y
    }

    /// The represented matrix; test use only.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.n(), self.n(), |i, j| ImplicitMatrix::entry(self, i, j))
    }
}

impl<T: Scalar> ImplicitMatrix<T> for MaskedOperator<T> {
    fn nrows(&self) -> usize {
        self.n()
    }
    fn ncols(&self) -> usize {
        self.n()
    }
    fn matvec(&self, x: &[T]) -> Vec<T> {
        self.apply(x, false)
    }
    fn tmatvec(&self, y: &[T]) -> Vec<T> {
        self.apply(y, true)
    }
    fn row(&self, i: usize) -> Vec<T> {
        let n = self.n();
        let bi = self.b.row(i);
        let mut g = vec![T::zero(); n];
        match self.mask {
            Mask::Existing | Mask::ExistingUpper | Mask::Pattern(_) => {
                for (&j, &v) in self.rows[i].iter().zip(&self.row_vals[i]) {
                    g[j] = v;
                }
            }
            Mask::Full | Mask::Virtual | Mask::VirtualUpper => {
                let start = if self.mask == Mask::VirtualUpper { i + 1 } else { 0 };
                for (j, gj) in g.iter_mut().enumerate().skip(start) {
                    *gj = dot(bi, self.c.row(j));
                }
                if self.mask != Mask::Full {
                    for &j in &self.rows[i] {
                        g[j] = T::zero();
                    }
                    g[i] = T::zero();
                }
            }
        }
        for (&(_, j), _) in self.exclusions.range((i, 0)..(i + 1, 0)) {
            g[j] = T::zero();
        }
        g
    }
    fn entry(&self, i: usize, j: usize) -> T {
        if self.admissible(i, j) {
            self.lowrank_entry(i, j)
        } else {
            T::zero()
        }
    }
    fn admissible(&self, i: usize, j: usize) -> bool {
        self.in_mask(i, j) && !self.exclusions.contains_key(&(i, j))
    }
    // Cauchy–Schwarz on b_i · c_j over the columns the mask admits; for the upper masks the
    // lower triangle is admitted too, which only loosens the bound
    fn row_bound(&self, i: usize) -> Option<T> {
        let bi = self.b.row(i);
        let c = match self.mask {
            Mask::Existing | Mask::ExistingUpper | Mask::Pattern(_) => {
                self.rows[i].iter().map(|&j| self.c_norm[j]).fold(T::zero(), |m, v| m.max(v))
            }
            Mask::Full => self.c_order.first().map_or(T::zero(), |&j| self.c_norm[j]),
            Mask::Virtual | Mask::VirtualUpper => self
                .c_order
                .iter()
                .find(|&&j| j != i && !self.in_pattern(i, j))
                .map_or(T::zero(), |&j| self.c_norm[j]),
        };
        Some(dot(bi, bi).sqrt() * c)
    }
}

/// `S` with a set of positions zeroed.
pub struct Deflated<'a, T, S: ?Sized> {
    inner: &'a S,
    excluded: BTreeMap<(usize, usize), T>,
}

impl<'a, T: Scalar, S: ImplicitMatrix<T> + ?Sized> Deflated<'a, T, S> {
    pub fn new(inner: &'a S) -> Self {
        Self { inner, excluded: BTreeMap::new() }
    }

    pub fn exclude(&mut self, i: usize, j: usize) {
        let v = self.inner.entry(i, j);
        self.excluded.insert((i, j), v);
    }

    /// Excludes `(i, j)` with a value the caller already knows.
    pub fn exclude_known(&mut self, i: usize, j: usize, value: T) {
        self.excluded.insert((i, j), value);
    }
}

impl<'a, T: Scalar, S: ImplicitMatrix<T> + ?Sized> ImplicitMatrix<T> for Deflated<'a, T, S> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = self.inner.matvec(x);
        for (&(i, j), &v) in &self.excluded {
            y[i] -= v * x[j];
        }
        y
    }
    fn tmatvec(&self, y: &[T]) -> Vec<T> {
        let mut x = self.inner.tmatvec(y);
        for (&(i, j), &v) in &self.excluded {
            x[j] -= v * y[i];
        }
        x
    }
    fn row(&self, i: usize) -> Vec<T> {
        let mut g = self.inner.row(i);
        for (&(_, j), _) in self.excluded.range((i, 0)..(i + 1, 0)) {
            g[j] = T::zero();
        }
        g
    }
    fn entry(&self, i: usize, j: usize) -> T {
        if self.excluded.contains_key(&(i, j)) {
            T::zero()
        } else {
            self.inner.entry(i, j)
        }
    }
    fn admissible(&self, i: usize, j: usize) -> bool {
        !self.excluded.contains_key(&(i, j)) && self.inner.admissible(i, j)
    }
    fn row_bound(&self, i: usize) -> Option<T> {
        self.inner.row_bound(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerMax<T> {
    /// `|s_ij|` at the located entry; never exceeds `max |s_ij|`.
    pub gamma: T,
    pub i: usize,
    pub j: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// Alternating ascent for the largest-magnitude entry with the default iteration cap.
pub fn power_max<T: Scalar, S: ImplicitMatrix<T> + ?Sized>(s: &S) -> Result<PowerMax<T>> {
    power_max_with(s, 100)
}

/// Alternating ascent: `y = S x`, pick the smallest `i` maximising `|y_i|`, read row
/// `g = Sᵀ e_i`, move to `x = e_j` at the smallest `j` maximising `|g_j|`. Stops once a
/// column step no longer improves on the row maximum, or the row maximum sits at the
/// current column already.
pub fn power_max_with<T: Scalar, S: ImplicitMatrix<T> + ?Sized>(
    s: &S,
    max_iters: usize,
) -> Result<PowerMax<T>> {
    let (nr, nc) = (s.nrows(), s.ncols());
    if nr == 0 || nc == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let mut x = vec![T::one() / T::from_usize_lossy(nc); nc];
    let mut current: Option<usize> = None;
    let mut best = PowerMax { gamma: T::zero(), i: 0, j: 0, converged: false, iterations: 0 };
    for k in 1..=max_iters.max(1) {
        best.iterations = k;
        let y = s.matvec(&x);
        let i = argmax_abs(&y).unwrap_or(0);
        let ynorm = y[i].abs();
        if k > 1 && ynorm <= best.gamma {
            best.converged = true;
            return Ok(best);
        }
        let g = s.row(i);
        let j = argmax_abs(&g).unwrap_or(0);
        let gnorm = g[j].abs();
        // gᵀx: the current column's entry, or the row mean on the first sweep
        let gx = match current {
            Some(c) => g[c].abs(),
            None => g.iter().fold(T::zero(), |a, &v| a + v).abs() / T::from_usize_lossy(nc),
        };
        if gnorm > best.gamma || k == 1 {
            best.gamma = gnorm;
            best.i = i;
            best.j = j;
        }
        if gnorm <= gx {
            best.converged = true;
            return Ok(best);
        }
        current = Some(j);
        x.iter_mut().for_each(|v| *v = T::zero());
        x[j] = T::one();
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopPConfig {
    pub p: usize,
    /// Block size is `alpha · p` columns.
    pub alpha: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Re-check the result against the deflated operator.
    pub verify: bool,
}

impl Default for TopPConfig {
    fn default() -> Self {
        Self { p: 5, alpha: 3, max_iters: 10, seed: 0, verify: true }
    }
}

impl TopPConfig {
    pub fn with_p(p: usize) -> Self {
        Self { p, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 || self.alpha == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("p, alpha and max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopPStatus {
    Complete,
    /// Fewer than `p` admissible entries were located.
    Short,
}

#[derive(Clone, Debug)]
pub struct TopP<T> {
    /// Sorted by `|value|` descending, then by linear index.
    pub entries: Vec<EdgePair<T>>,
    /// Block iterations of the main search.
    pub iterations: usize,
    /// Whether the candidate set stabilised before `max_iters`.
    pub converged: bool,
    /// Products with `S` or `Sᵀ` (row extractions included).
    pub products: usize,
    pub status: TopPStatus,
}

const NORM_PROBES: usize = 4;

/// Indices of the `k` largest scores, ties to the smaller index; zero scores are skipped.
fn top_indices<T: Scalar>(scores: &[T], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > T::zero()).collect();
    let cmp = |a: &usize, b: &usize| {
        scores[*b].partial_cmp(&scores[*a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b))
    };
    if idx.len() > k {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

struct Pool<T> {
    ncols: usize,
    found: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> Pool<T> {
    fn insert(&mut self, i: usize, j: usize, v: T) {
        self.found.insert((i, j), v);
    }

    fn ranked(&self) -> Vec<(usize, usize, T)> {
        let mut all: Vec<_> = self.found.iter().map(|(&(i, j), &v)| (i, j, v)).collect();
        let nc = self.ncols;
        all.sort_by(|a, b| {
            b.2.abs()
                .partial_cmp(&a.2.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then((a.0 * nc + a.1).cmp(&(b.0 * nc + b.1)))
        });
        all
    }

    fn top(&self, p: usize) -> Vec<(usize, usize, T)> {
        let mut r = self.ranked();
        r.truncate(p);
        r
    }
}

/// Estimates the `p` largest-magnitude admissible entries of `s`.
///
/// Row and column norms are estimated from products with random sign vectors, and the pool of
/// candidates is seeded with the [`power_max`] ascent from the uniform vector. Each sweep
/// multiplies a block of `t = alpha · p` columns by `S`, reads the rows where the products
/// peak (plus a few not yet visited, largest norm first) in full, and collects their largest
/// admissible entries. Half of the next block follows the columns of the best entries so far,
/// the rest explores unvisited columns. The search stops once the leading `p` positions
/// repeat and no unvisited row can hold an entry above the `p`-th value, judged by
/// [`ImplicitMatrix::row_bound`] or, without one, by the estimated row norm. With `verify` set, the operator deflated by the current result is searched with
/// [`power_max`] and any larger entry it turns up is swapped in.
///
/// Reported values are exact entries of `s`; positions are never invented.
pub fn top_p<T: Scalar, S: ImplicitMatrix<T> + ?Sized>(s: &S, cfg: &TopPConfig) -> Result<TopP<T>> {
    cfg.validate()?;
    let (nr, nc) = (s.nrows(), s.ncols());
    let mut out = TopP {
        entries: Vec::new(),
        iterations: 0,
        converged: false,
        products: 0,
        status: TopPStatus::Short,
    };
    if nr == 0 || nc == 0 {
        return Ok(out);
    }
    let p = cfg.p;
    let t = (cfg.alpha * p).min(nc).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut colnorm = vec![T::zero(); nc];
    for _ in 0..NORM_PROBES {
        let z: Vec<T> = (0..nr).map(|_| if rng.gen::<bool>() { T::one() } else { -T::one() }).collect();
        for (c, w) in colnorm.iter_mut().zip(s.tmatvec(&z)) {
            *c += w * w;
        }
        out.products += 1;
    }
    let mut rownorm = vec![T::zero(); nr];
    for _ in 0..NORM_PROBES {
        let z: Vec<T> = (0..nc).map(|_| if rng.gen::<bool>() { T::one() } else { -T::one() }).collect();
        for (r, w) in rownorm.iter_mut().zip(s.matvec(&z)) {
            *r += w * w;
        }
        out.products += 1;
    }
    let probes = T::from_usize_lossy(NORM_PROBES);
    let bounded = nr > 0 && s.row_bound(0).is_some();
    let row_cap: Vec<T> = (0..nr).map(|i| s.row_bound(i).unwrap_or_else(|| (rownorm[i] / probes).sqrt())).collect();
    // visiting order for exploration: rows that may hold the largest entries first
    let row_order = top_indices(&row_cap, nr);
    let col_order = top_indices(&colnorm, nc);
    let mut visited_rows = BTreeSet::new();
    let mut visited_cols = BTreeSet::new();

    // `None` is the uniform start vector
    let mut block: Vec<Option<usize>> = std::iter::once(None)
        .chain(col_order.iter().copied().take(t.saturating_sub(1)).map(Some))
        .collect();
    let mut pool = Pool { ncols: nc, found: BTreeMap::new() };
    let seed = power_max_with(s, cfg.max_iters)?;
    out.products += 2 * seed.iterations;
    if seed.gamma > T::zero() && s.admissible(seed.i, seed.j) {
        pool.insert(seed.i, seed.j, s.entry(seed.i, seed.j));
    }
    let mut previous: Option<Vec<(usize, usize)>> = None;
    let uniform = vec![T::one() / T::from_usize_lossy(nc); nc];
    let mut unit = vec![T::zero(); nc];

    for it in 1..=cfg.max_iters {
        out.iterations = it;
        let mut row_score = vec![T::zero(); nr];
        visited_cols.extend(block.iter().flatten().copied());
        for col in &block {
            let y = match *col {
                None => s.matvec(&uniform),
                Some(j) => {
                    unit[j] = T::one();
                    let y = s.matvec(&unit);
                    unit[j] = T::zero();
                    y
                }
            };
            out.products += 1;
            for (r, v) in row_score.iter_mut().zip(&y) {
                *r = r.max(v.abs());
            }
        }
        let mut rows = top_indices(&row_score, t);
        // at least t/2 unvisited rows, plus every row whose bound beats the current p-th value
        // once there is one; estimated norms are no bound, so those add at most 2t rows
        let current = pool.top(p);
        let floor = if current.len() == p { current[p - 1].2.abs() } else { T::zero() };
        let fresh: Vec<usize> = row_order
            .iter()
            .copied()
            .filter(|i| !visited_rows.contains(i) && !rows.contains(i))
            .enumerate()
            .take_while(|&(k, i)| {
                k < t.div_ceil(2) || (floor > T::zero() && (bounded || k < 2 * t) && row_cap[i] > floor)
            })
            .map(|(_, i)| i)
            .collect();
        rows.extend(fresh);
        visited_rows.extend(rows.iter().copied());
        if rows.is_empty() {
            break;
        }
        let mut row_best_cols = Vec::with_capacity(rows.len());
        for &i in &rows {
            let g = s.row(i);
            out.products += 1;
            let mag: Vec<T> = g
                .iter()
                .enumerate()
                .map(|(j, v)| if s.admissible(i, j) { v.abs() } else { T::zero() })
                .collect();
            let best = top_indices(&mag, p);
            if let Some(&j) = best.first() {
                row_best_cols.push(j);
            }
            for j in best {
                pool.insert(i, j, g[j]);
            }
        }
        let ranked_top = pool.top(p);
        let top: Vec<(usize, usize)> = ranked_top.iter().map(|&(i, j, _)| (i, j)).collect();
        // an unvisited row whose bound exceeds the p-th value may still hide a larger entry
        let floor = if ranked_top.len() == p { ranked_top[p - 1].2.abs() } else { T::zero() };
        let open_row = (0..nr).any(|i| !visited_rows.contains(&i) && row_cap[i] > floor);
        if previous.as_ref() == Some(&top) && !open_row {
            out.converged = true;
            break;
        }
        previous = Some(top);

        // half the next block follows the best entries, the rest explores unvisited columns
        let mut seen = BTreeSet::new();
        let exploit: Vec<usize> = pool
            .ranked()
            .iter()
            .map(|e| e.1)
            .chain(row_best_cols)
            .filter(|j| seen.insert(*j))
            .collect();
        let keep = t.div_ceil(2).min(exploit.len());
        let mut next: Vec<usize> = exploit[..keep].to_vec();
        for &j in col_order.iter().filter(|j| !visited_cols.contains(*j)) {
            if next.len() >= t {
                break;
            }
            next.push(j);
        }
        for &j in &exploit[keep..] {
            if next.len() >= t {
                break;
            }
            next.push(j);
        }
        block = next.into_iter().map(Some).collect();
    }

    if cfg.verify {
        for _round in 0..p {
            let top = pool.top(p);
            let mut deflated = Deflated::new(s);
            for &(i, j, v) in &top {
                deflated.exclude_known(i, j, v);
            }
            let pm = power_max_with(&deflated, cfg.max_iters.max(10))?;
            out.products += 2 * pm.iterations;
            let threshold = if top.len() < p { T::zero() } else { top[p - 1].2.abs() };
            let fresh = !pool.found.contains_key(&(pm.i, pm.j));
            if pm.gamma > threshold && fresh && s.admissible(pm.i, pm.j) {
                pool.insert(pm.i, pm.j, s.entry(pm.i, pm.j));
            } else {
                break;
            }
        }
    }

    let mut entries: Vec<EdgePair<T>> = pool
        .top(p)
        .into_iter()
        .filter(|&(_, _, v)| v != T::zero())
        .map(|(i, j, _)| EdgePair::new(i, j, s.entry(i, j)))
        .collect();
    entries.sort_by(|a, b| {
        b.value
            .abs()
            .partial_cmp(&a.value.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((a.i * nc + a.j).cmp(&(b.i * nc + b.j)))
    });
    out.status = if entries.len() == p { TopPStatus::Complete } else { TopPStatus::Short };
    out.entries = entries;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_dense(r: usize, c: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_lowrank(n: usize, r: usize, seed: u64) -> DenseMatrix<f64> {
        random_dense(n, r, seed).matmul(&random_dense(r, n, seed + 1_000))
    }

    fn exhaustive_max(s: &DenseMatrix<f64>) -> f64 {
        s.max_abs()
    }

    #[test]
    fn power_max_diagonal() {
        let s = DenseMatrix::diag(&[1.0, 2.0]);
        let r = power_max(&s).unwrap();
        assert_eq!((r.gamma, r.i, r.j), (2.0, 1, 1));
        assert!(r.converged);
    }

    #[test]
    fn power_max_single_entry() {
        let mut s = DenseMatrix::zeros(2, 2);
        s[(0, 1)] = 1.0;
        let r = power_max(&s).unwrap();
        assert_eq!((r.gamma, r.i, r.j), (1.0, 0, 1));
    }

    #[test]
    fn power_max_exact_on_rank_one() {
        for seed in 0..500 {
            let s = random_lowrank(20, 1, seed);
            let r = power_max(&s).unwrap();
            assert_eq!(r.gamma, exhaustive_max(&s), "seed {seed}");
        }
    }

    #[test]
    fn power_max_is_a_lower_bound_and_blocked_search_is_usually_exact() {
        // a single ascent stops at the first entry that is maximal in its row and column;
        // the blocked search is what reaches the global maximum reliably
        let trials = 500;
        let (mut single, mut blocked) = (0, 0);
        for seed in 0..trials {
            let s = random_lowrank(20, 2, seed);
            let r = power_max(&s).unwrap();
            let truth = exhaustive_max(&s);
            assert!(r.gamma <= truth);
            assert_eq!(s[(r.i, r.j)].abs(), r.gamma);
            single += usize::from(r.gamma == truth);
            let cfg = TopPConfig { p: 1, seed, ..TopPConfig::default() };
            let t = top_p(&s, &cfg).unwrap();
            blocked += usize::from(t.entries[0].value.abs() == truth);
        }
        assert!(single as f64 >= 0.4 * trials as f64, "{single}/{trials}");
        assert!(blocked as f64 >= 0.95 * trials as f64, "{blocked}/{trials}");
    }

    #[test]
    fn power_max_dense_random_is_sound() {
        for seed in 0..200 {
            let s = random_dense(20, 20, seed);
            let r = power_max(&s).unwrap();
            assert!(r.gamma <= exhaustive_max(&s));
            assert_eq!(s[(r.i, r.j)].abs(), r.gamma);
        }
    }

    fn path_graph(n: usize) -> Graph<f64> {
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::undirected_from_pairs(n, &pairs).unwrap()
    }

    fn random_graph(n: usize, p: f64, directed: bool, seed: u64) -> Graph<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && (directed || i < j) && rng.gen::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        if directed {
            Graph::directed_from_pairs(n, &pairs).unwrap()
        } else {
            Graph::undirected_from_pairs(n, &pairs).unwrap()
        }
    }

    fn hadamard_oracle(g: &Graph<f64>, mask: &Mask, b: &DenseMatrix<f64>, c: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        let bc = b.matmul(&c.transpose());
        let n = g.n();
        DenseMatrix::from_fn(n, n, |i, j| {
            let m = match mask {
                Mask::Existing => g.has_edge(i, j),
                Mask::ExistingUpper => g.has_edge(i, j) && i < j,
                Mask::Virtual => i != j && !g.has_edge(i, j),
                Mask::VirtualUpper => i < j && !g.has_edge(i, j),
                Mask::Pattern(p) => p.contains(&(i, j)),
                Mask::Full => true,
            };
            if m {
                bc[(i, j)]
            } else {
                0.0
            }
        })
    }

    fn all_masks(n: usize) -> Vec<Mask> {
        vec![
            Mask::Existing,
            Mask::ExistingUpper,
            Mask::Virtual,
            Mask::VirtualUpper,
            Mask::Full,
            Mask::Pattern(vec![(0, 1), (2, 2), (n - 1, 0), (3, 4)]),
        ]
    }

    #[test]
    fn masked_products_match_dense_oracle() {
        for (seed, directed) in [(1, false), (2, true)] {
            let n = 40;
            let g = random_graph(n, 0.1, directed, seed);
            let b = random_dense(n, 3, seed + 10);
            let c = random_dense(n, 3, seed + 20);
            let x: Vec<f64> = random_dense(n, 1, seed + 30).column(0);
            for mask in all_masks(n) {
                let op = MaskedOperator::new(&g, mask.clone(), b.clone(), c.clone()).unwrap();
                let dense = hadamard_oracle(&g, &mask, &b, &c);
                let (y, yt) = (op.matvec(&x), op.tmatvec(&x));
                let (want, want_t) = (dense.matvec(&x), dense.tmatvec(&x));
                for k in 0..n {
                    assert!((y[k] - want[k]).abs() < 1e-12, "{mask:?}");
                    assert!((yt[k] - want_t[k]).abs() < 1e-12, "{mask:?} transposed");
                }
                assert!(op.to_dense().sub(&dense).max_abs() < 1e-14);
                for i in [0, 7, n - 1] {
                    let row = ImplicitMatrix::row(&op, i);
                    for j in 0..n {
                        assert!((row[j] - dense[(i, j)]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn exclusions_zero_entries() {
        let g = random_graph(20, 0.2, true, 3);
        let b = random_dense(20, 2, 4);
        let c = random_dense(20, 2, 5);
        let mut op = MaskedOperator::new(&g, Mask::Virtual, b.clone(), c.clone()).unwrap();
        let (i, j) = (0..20)
            .flat_map(|i| (0..20).map(move |j| (i, j)))
            .find(|&(i, j)| op.in_mask(i, j))
            .unwrap();
        op.exclude(i, j);
        let mut dense = hadamard_oracle(&g, &Mask::Virtual, &b, &c);
        dense[(i, j)] = 0.0;
        let x: Vec<f64> = (0..20).map(|k| (k as f64).cos()).collect();
        let (y, yt) = (op.matvec(&x), op.tmatvec(&x));
        let (w, wt) = (dense.matvec(&x), dense.tmatvec(&x));
        for k in 0..20 {
            assert!((y[k] - w[k]).abs() < 1e-12 && (yt[k] - wt[k]).abs() < 1e-12);
        }
        assert!(!op.admissible(i, j));
        assert_eq!(ImplicitMatrix::entry(&op, i, j), 0.0);
    }

    #[test]
    fn virtual_mask_on_complete_graph_is_zero() {
        let n = 6;
        let pairs: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let g = Graph::undirected_from_pairs(n, &pairs).unwrap();
        let ones = DenseMatrix::from_fn(n, 1, |_, _| 1.0);
        let op = MaskedOperator::new(&g, Mask::Virtual, ones.clone(), ones).unwrap();
        assert!(op.matvec(&[1.0; 6]).iter().all(|v: &f64| v.abs() < 1e-15));
        let r = top_p(&op, &TopPConfig::with_p(3)).unwrap();
        assert!(r.entries.is_empty());
        assert_eq!(r.status, TopPStatus::Short);
    }

    #[test]
    fn full_mask_is_plain_lowrank_product() {
        let g = Graph::<f64>::empty(10, true);
        let b = random_dense(10, 2, 1);
        let c = random_dense(10, 2, 2);
        let op = MaskedOperator::new(&g, Mask::Full, b.clone(), c.clone()).unwrap();
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let want = b.matvec(&c.tmatvec(&x));
        for (a, w) in op.matvec(&x).iter().zip(want) {
            assert!((a - w).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_consistency() {
        let g = random_graph(30, 0.15, true, 8);
        let b = random_dense(30, 4, 9);
        let c = random_dense(30, 4, 10);
        for mask in all_masks(30) {
            let op = MaskedOperator::new(&g, mask, b.clone(), c.clone()).unwrap();
            let x = random_dense(30, 1, 11).column(0);
            let y = random_dense(30, 1, 12).column(0);
            let lhs = dot(&y, &op.matvec(&x));
            let rhs = dot(&x, &op.tmatvec(&y));
            assert!((lhs - rhs).abs() <= 1e-10 * op.to_dense().frobenius_norm());
        }
    }

    #[test]
    fn all_ones_on_path_ties_break_by_index() {
        let g = path_graph(3);
        let ones = DenseMatrix::from_fn(3, 1, |_, _| 1.0);
        let op = MaskedOperator::new(&g, Mask::Existing, ones.clone(), ones).unwrap();
        let r = top_p(&op, &TopPConfig::with_p(2)).unwrap();
        let got: Vec<_> = r.entries.iter().map(|e| (e.i, e.j, e.value)).collect();
        assert_eq!(got, vec![(0, 1, 1.0), (1, 0, 1.0)]);
    }

    #[test]
    fn top_one_dominates_power_max() {
        for seed in 0..50 {
            let s = random_lowrank(30, 3, seed);
            let pm = power_max(&s).unwrap();
            let cfg = TopPConfig { p: 1, verify: false, ..TopPConfig::default() };
            let tp = top_p(&s, &cfg).unwrap();
            let e = tp.entries[0];
            assert!(e.value.abs() >= pm.gamma);
            if pm.gamma == exhaustive_max(&s) {
                assert_eq!(e.value.abs(), pm.gamma);
            }
        }
    }

    fn exhaustive_top(s: &DenseMatrix<f64>, p: usize) -> Vec<(usize, usize)> {
        let n = s.cols();
        let mut all: Vec<(usize, usize)> =
            (0..s.rows()).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        all.sort_by(|a, b| s[*b].abs().partial_cmp(&s[*a].abs()).unwrap().then((a.0 * n + a.1).cmp(&(b.0 * n + b.1))));
        all.truncate(p);
        all
    }

    #[test]
    fn top_p_recovers_lowrank_maxima() {
        let mut exact = 0;
        let trials = 100;
        for seed in 0..trials {
            let s = random_lowrank(60, 3, 500 + seed);
            let r = top_p(&s, &TopPConfig { p: 5, seed, ..TopPConfig::default() }).unwrap();
            let got: Vec<_> = r.entries.iter().map(|e| (e.i, e.j)).collect();
            assert_eq!(got.len(), 5);
            let set: BTreeSet<_> = got.iter().collect();
            assert_eq!(set.len(), 5, "duplicates");
            for e in &r.entries {
                assert_eq!(e.value, s[(e.i, e.j)]);
            }
            assert!(r.iterations <= 10);
            if got == exhaustive_top(&s, 5) {
                exact += 1;
            }
        }
        assert!(exact >= 90, "{exact}/{trials}");
    }

    #[test]
    fn deflation_finds_second_maximum() {
        let mut hits = 0;
        for seed in 0..100 {
            let s = random_lowrank(40, 2, 2_000 + seed);
            let top2 = exhaustive_top(&s, 2);
            let mut d = Deflated::new(&s);
            d.exclude(top2[0].0, top2[0].1);
            let cfg = TopPConfig { p: 1, seed, ..TopPConfig::default() };
            let r = top_p(&d, &cfg).unwrap();
            assert_ne!((r.entries[0].i, r.entries[0].j), top2[0]);
            if r.entries[0].value.abs() == s[top2[1]].abs() {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn masks_are_respected() {
        let g = random_graph(50, 0.08, false, 41);
        let b = random_dense(50, 3, 42);
        let c = b.clone();
        for mask in [Mask::ExistingUpper, Mask::VirtualUpper, Mask::Virtual, Mask::Existing] {
            let mut op = MaskedOperator::new(&g, mask.clone(), b.clone(), c.clone()).unwrap();
            let first = top_p(&op, &TopPConfig::with_p(4)).unwrap();
            let ex = first.entries[0];
            op.exclude(ex.i, ex.j);
            let r = top_p(&op, &TopPConfig::with_p(8)).unwrap();
            for e in &r.entries {
                assert!(op.in_mask(e.i, e.j), "{mask:?}: ({}, {})", e.i, e.j);
                assert_ne!((e.i, e.j), (ex.i, ex.j));
                if matches!(mask, Mask::Virtual | Mask::VirtualUpper) {
                    assert_ne!(e.i, e.j);
                }
            }
        }
    }

    #[test]
    fn row_bound_covers_every_admissible_entry() {
        let g = random_graph(40, 0.1, true, 5);
        let pattern = vec![(0, 3), (7, 2), (7, 9), (39, 0)];
        for mask in [Mask::Existing, Mask::ExistingUpper, Mask::Virtual, Mask::VirtualUpper, Mask::Full, Mask::Pattern(pattern)] {
            let op = MaskedOperator::new(&g, mask.clone(), random_dense(40, 3, 6), random_dense(40, 3, 7)).unwrap();
            for i in 0..40 {
                let max = op.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(max <= op.row_bound(i).unwrap() * (1.0 + 1e-12), "{mask:?} row {i}");
            }
        }
    }

    #[test]
    fn invalid_config() {
        let s = DenseMatrix::<f64>::identity(3);
        assert!(top_p(&s, &TopPConfig::with_p(0)).is_err());
        assert!(top_p(&s, &TopPConfig { alpha: 0, ..TopPConfig::default() }).is_err());
    }
}
