//! A priori decay bounds for entries of `L_exp(A, E)` with `E = e_i e_jᵀ` (edge change) or
//! `E = E_v` (node removal).
//!
//! Entries of the derivative decay with the geodesic distance parameter `m`: a polynomial of
//! degree below `m` has a derivative with an exact zero at that position, so the entry is
//! bounded by how well `exp` can be approximated on the numerical range of `A`. The numerical
//! range enters only through an enclosing interval (undirected graphs) or disk (digraphs),
//! collected in a [`BoundContext`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{symmetric_eigen, DenseMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::krylov::{arnoldi, LinearOperator};
use crate::scalar::Scalar;

/// How the enclosure in a [`BoundContext`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ExactDense,
    Lanczos,
    Gershgorin,
    NormBound,
    /// Numerical radius sampled over finitely many angles and inflated by a safety factor;
    /// heuristic, not a proven enclosure.
    SampledNumericalRadius,
    User,
}

/// Enclosure of the numerical range of `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundContext<T> {
    pub lambda_min: T,
    pub lambda_max: T,
    /// Disk radius.
    pub r: T,
    /// Disk center (real).
    pub c: T,
    /// `1` for normal `A`, `(1 + √2)²` otherwise.
    pub constant: T,
    pub provenance: Provenance,
}

/// `(1 + √2)²`.
pub fn nonnormal_constant<T: Scalar>() -> T {
    let s = T::one() + T::lit(2.0).sqrt();
    s * s
}

impl<T: Scalar> BoundContext<T> {
    /// Spectral interval of a symmetric matrix; also sets the disk enclosing it.
    pub fn interval(lambda_min: T, lambda_max: T, provenance: Provenance) -> Result<Self> {
        if !(lambda_min <= lambda_max) {
            return Err(Error::InvalidArgument(format!(
                "empty spectral interval [{lambda_min}, {lambda_max}]"
            )));
        }
        let half = T::lit(0.5);
        Ok(Self {
            lambda_min,
            lambda_max,
            r: (lambda_max - lambda_min) * half,
            c: (lambda_max + lambda_min) * half,
            constant: T::one(),
            provenance,
        })
    }

    /// Disk of radius `r` around `c`; `normal` selects the constant 1.
    pub fn disk(r: T, c: T, normal: bool, provenance: Provenance) -> Result<Self> {
        if !(r >= T::zero()) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("disk radius must be finite and >= 0, got {r}")));
        }
        Ok(Self {
            lambda_min: c - r,
            lambda_max: c + r,
            r,
            c,
            constant: if normal { T::one() } else { nonnormal_constant() },
            provenance,
        })
    }

    fn spread(&self) -> f64 {
        (self.lambda_max - self.lambda_min).to_f64_lossy()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `√Δ ≤ m ≤ Δ/2` (undirected).
    Regime1,
    /// `m > Δ/2` (undirected).
    Regime2,
    /// Disk enclosure (directed).
    Disk,
    /// Caller-supplied approximation error.
    Generic,
    /// No bound available for this `m`; value is `+∞`.
    Inapplicable,
    /// The entry is zero by structure (unreachable, or isolated node).
    Vanishing,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundResult<T> {
    pub value: T,
    pub regime: Regime,
    /// Distance parameter; `None` for infinite distance.
    pub m: Option<usize>,
}

impl<T: Scalar> BoundResult<T> {
    fn inapplicable(m: usize) -> Self {
        Self { value: T::infinity(), regime: Regime::Inapplicable, m: Some(m) }
    }

    fn vanishing(m: Option<usize>) -> Self {
        Self { value: T::zero(), regime: Regime::Vanishing, m }
    }

    pub fn is_applicable(&self) -> bool {
        self.regime != Regime::Inapplicable
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMethod {
    /// `[−deg_max, deg_max]`.
    Gershgorin,
    /// Extremal Ritz values widened by their residuals, clipped to the Gershgorin interval.
    Lanczos { max_steps: usize, seed: u64 },
    /// Dense symmetric eigensolve, refused above `cap` nodes.
    ExactDense { cap: usize },
}

impl Default for SpectrumMethod {
    fn default() -> Self {
        SpectrumMethod::Lanczos { max_steps: 100, seed: 0 }
    }
}

struct Ritz {
    min: f64,
    max: f64,
    res_min: f64,
    res_max: f64,
}

fn extreme_ritz<T: Scalar, O: LinearOperator<T>>(op: &O, max_steps: usize, seed: u64) -> Result<Ritz> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
    let dec = arnoldi(op, &b, max_steps.clamp(1, n), true, true)?;
    let m = dec.m();
    let t = dec.h_square(m);
    let tf = DenseMatrix::from_fn(m, m, |i, j| t[(i, j)].to_f64_lossy());
    let (vals, vecs) = symmetric_eigen(&tf)?;
    let beta = if dec.breakdown { 0.0 } else { dec.last_subdiagonal().to_f64_lossy().abs() };
    Ok(Ritz {
        min: vals[0],
        max: vals[m - 1],
        res_min: beta * vecs[(m - 1, 0)].abs(),
        res_max: beta * vecs[(m - 1, m - 1)].abs(),
    })
}

/// Interval `[λ_min, λ_max]` enclosing the spectrum of an undirected graph.
pub fn spectrum_interval<T: Scalar>(g: &Graph<T>, method: SpectrumMethod) -> Result<BoundContext<T>> {
    if g.is_directed() {
        return Err(Error::RequiresUndirected);
    }
    let n = g.n();
    let dmax = g.max_weighted_degree();
    if n == 0 {
        return BoundContext::interval(T::zero(), T::zero(), Provenance::ExactDense);
    }
    match method {
        SpectrumMethod::Gershgorin => BoundContext::interval(-dmax, dmax, Provenance::Gershgorin),
        SpectrumMethod::ExactDense { cap } => {
            if n > cap {
                return Err(Error::TooLarge { n, cap, hint: "use the Lanczos or Gershgorin enclosure" });
            }
            let (vals, _) = symmetric_eigen(&g.to_dense())?;
            BoundContext::interval(vals[0], vals[n - 1], Provenance::ExactDense)
        }
        SpectrumMethod::Lanczos { max_steps, seed } => {
            let op = crate::krylov::GraphOperator { graph: g, transposed: false };
            let ritz = extreme_ritz(&op, max_steps, seed)?;
            let d = dmax.to_f64_lossy();
            let lo = (ritz.min - ritz.res_min).max(-d);
            let hi = (ritz.max + ritz.res_max).min(d);
            BoundContext::interval(T::lit(lo), T::lit(hi), Provenance::Lanczos)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FovMethod {
    /// `r = √(‖A‖₁‖A‖_∞)`, a proven enclosure.
    NormBound,
    /// `r = safety · max_θ λ_max((e^{iθ}A + e^{−iθ}Aᵀ)/2)` over `angles` equispaced `θ`.
    Sampled { angles: usize, safety: f64, seed: u64 },
}

impl Default for FovMethod {
    fn default() -> Self {
        FovMethod::Sampled { angles: 16, safety: 1.05, seed: 0 }
    }
}

/// Real symmetric `2n × 2n` embedding `[[X, −Y], [Y, X]]` of the Hermitian part
/// `X + iY` of `e^{iθ}A`.
struct RotatedHermitian<'a, T> {
    g: &'a Graph<T>,
    cos: T,
    sin: T,
    norm: T,
}

impl<'a, T: Scalar> LinearOperator<T> for RotatedHermitian<'a, T> {
    fn dim(&self) -> usize {
        2 * self.g.n()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.g.n();
        let half = T::lit(0.5);
        let (x1, x2) = x.split_at(n);
        let part = |v: &[T]| {
            let a = self.g.apply(v, false);
            let at = self.g.apply(v, true);
            let sym: Vec<T> = a.iter().zip(&at).map(|(&p, &q)| (p + q) * half * self.cos).collect();
            let skew: Vec<T> = a.iter().zip(&at).map(|(&p, &q)| (p - q) * half * self.sin).collect();
            (sym, skew)
        };
        let (xx1, yx1) = part(x1);
        let (xx2, yx2) = part(x2);
        for k in 0..n {
            y[k] = xx1[k] - yx2[k];
            y[n + k] = yx1[k] + xx2[k];
        }
    }
    fn norm_estimate(&self) -> T {
        self.norm
    }
}

/// Disk centered at the origin containing the numerical range of `A`.
pub fn fov_disk<T: Scalar>(g: &Graph<T>, method: FovMethod) -> Result<BoundContext<T>> {
    let normal = !g.is_directed();
    let bound = g.norm2_upper();
    match method {
        FovMethod::NormBound => BoundContext::disk(bound, T::zero(), normal, Provenance::NormBound),
        FovMethod::Sampled { angles, safety, seed } => {
            if angles == 0 || !(safety >= 1.0) {
                return Err(Error::InvalidArgument("need at least one angle and safety >= 1".into()));
            }
            if g.n() == 0 || g.nnz() == 0 {
                return BoundContext::disk(T::zero(), T::zero(), normal, Provenance::SampledNumericalRadius);
            }
            let mut nu = 0.0f64;
            for k in 0..angles {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
                let op = RotatedHermitian { g, cos: T::lit(theta.cos()), sin: T::lit(theta.sin()), norm: bound };
                let ritz = extreme_ritz(&op, 120, seed.wrapping_add(k as u64))?;
                nu = nu.max(ritz.max);
            }
            let r = (nu * safety).min(bound.to_f64_lossy());
            BoundContext::disk(T::lit(r), T::zero(), normal, Provenance::SampledNumericalRadius)
        }
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / (a − 1)!` for integer `a ≥ 1`.
pub fn regularized_lower_gamma(a: usize, x: f64) -> Result<f64> {
    if a == 0 || !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("incomplete gamma needs a >= 1 and finite x >= 0, got ({a}, {x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let af = a as f64;
    if x < af + 1.0 {
        // P = e^{-x} x^a / a! · Σ_k x^k / ((a+1)⋯(a+k))
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..10_000 {
            term *= x / (af + k as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        let log_prefix = -x + af * x.ln() - ln_factorial(a);
        Ok((log_prefix.exp() * sum).min(1.0))
    } else {
        // Q = e^{-x} Σ_{k<a} x^k / k!, accumulated in log space
        let mut q = 0.0;
        for k in 0..a {
            q += (-x + k as f64 * x.ln() - ln_factorial(k)).exp();
        }
        Ok((1.0 - q).max(0.0))
    }
}

/// `γ(a, x) = ∫₀ˣ t^{a−1} e^{−t} dt` for integer `a ≥ 1`.
pub fn lower_incomplete_gamma(a: usize, x: f64) -> Result<f64> {
    Ok(regularized_lower_gamma(a, x)? * ln_factorial(a - 1).exp())
}

/// Undirected two-regime bound for `|[L_exp(A, e_i e_jᵀ)]_uv|` with `m = d(u,i) + d(j,v)`.
pub fn edge_bound_undirected<T: Scalar>(ctx: &BoundContext<T>, m: usize) -> BoundResult<T> {
    match undirected_value(ctx.spread(), ctx.lambda_max.to_f64_lossy(), m) {
        Some((v, regime)) => BoundResult { value: T::lit(v) * ctx.constant, regime, m: Some(m) },
        None => BoundResult::inapplicable(m),
    }
}

fn undirected_value(delta: f64, lmax: f64, m: usize) -> Option<(f64, Regime)> {
    if m == 0 {
        return None;
    }
    let mf = m as f64;
    if delta <= 0.0 {
        // limit of the second regime as the interval shrinks to a point
        let v = if m == 1 { 2.0 * (lmax + 1.0).exp() } else { 0.0 };
        return Some((v, Regime::Regime2));
    }
    if mf > delta / 2.0 {
        let log = 8f64.ln() + lmax + mf.ln() - delta.ln()
            + mf * (1.0 + delta.ln() - (4.0 * mf + 2.0 * delta).ln());
        Some((log.exp(), Regime::Regime2))
    } else if delta.sqrt() <= mf {
        let v = 2.0 * delta / mf * (lmax - 4.0 * mf * mf / (5.0 * delta)).exp();
        Some((v, Regime::Regime1))
    } else {
        None
    }
}

/// Disk bound for digraphs: `2C e^{r+c} γ(m, r)/(m−1)!`, or with `simple` the weaker
/// `2C (e^{r+c} − 1) r^{m−1}/m!`.
pub fn edge_bound_directed<T: Scalar>(ctx: &BoundContext<T>, m: usize, simple: bool) -> BoundResult<T> {
    if m == 0 {
        return BoundResult::inapplicable(m);
    }
    let (r, c) = (ctx.r.to_f64_lossy(), ctx.c.to_f64_lossy());
    let k = 2.0 * ctx.constant.to_f64_lossy();
    let v = if simple {
        let tail = if r == 0.0 {
            if m == 1 { 1.0 } else { 0.0 }
        } else {
            ((m as f64 - 1.0) * r.ln() - ln_factorial(m)).exp()
        };
        k * (r + c).exp_m1() * tail
    } else {
        k * (r + c).exp() * regularized_lower_gamma(m, r).unwrap_or(f64::NAN)
    };
    BoundResult { value: T::lit(v), regime: Regime::Disk, m: Some(m) }
}

/// Bound for `|[L_exp(A, E_v)]_{u₁u₂}|` with `m = d(u₁,v) + d(v,u₂) + 1`.
///
/// Undirected: the edge bound at `m − 1` times `√deg(v)`, so both regime gates shift by one.
/// Directed: `2C √deg(v) e^{r+c} γ(m, r)/(m−1)!`.
pub fn node_bound<T: Scalar>(ctx: &BoundContext<T>, deg_v: T, m: usize, directed: bool) -> BoundResult<T> {
    if deg_v == T::zero() {
        return BoundResult::vanishing(Some(m));
    }
    let root = deg_v.sqrt();
    let inner = if directed {
        edge_bound_directed(ctx, m, false)
    } else if m == 0 {
        BoundResult::inapplicable(0)
    } else {
        edge_bound_undirected(ctx, m - 1)
    };
    match inner.regime {
        Regime::Inapplicable => BoundResult::inapplicable(m),
        regime => BoundResult { value: inner.value * root, regime, m: Some(m) },
    }
}

/// `C · ε` (times `√deg(v)` for node removal) for a user-supplied error `ε` of the best
/// polynomial approximation of `f′` of degree `m − 1` on the numerical range.
pub fn generic_bound<T: Scalar>(ctx: &BoundContext<T>, approx_error: T, deg_v: Option<T>) -> BoundResult<T> {
    let scale = deg_v.map_or(T::one(), |d| d.sqrt());
    BoundResult { value: ctx.constant * approx_error * scale, regime: Regime::Generic, m: None }
}

/// Bounds on the subgraph-centrality sensitivity of every node `u` to the removal of `v`,
/// using `m(u, u) = 2 d(u, v) + 1`. Unreachable nodes get a vanishing bound.
pub fn sensitivity_bound_map<T: Scalar>(
    g: &Graph<T>,
    v: usize,
    ctx: &BoundContext<T>,
) -> Result<Vec<BoundResult<T>>> {
    if g.is_directed() {
        return Err(Error::RequiresUndirected);
    }
    if v >= g.n() {
        return Err(Error::Index { index: v, size: g.n() });
    }
    let deg = g.weighted_degree(v);
    Ok(g
        .geodesic_distances(v)
        .into_iter()
        .map(|d| match d {
            Some(d) => node_bound(ctx, deg, 2 * d + 1, false),
            None => BoundResult::vanishing(None),
        })
        .collect())
}

/// Bounds on the subgraph-centrality sensitivity of every node `u` to a change of edge
/// `(i, j)`, using `m(u, u) = d(u, i) + d(j, u)`. Digraphs use the disk bound.
pub fn edge_sensitivity_bound_map<T: Scalar>(
    g: &Graph<T>,
    i: usize,
    j: usize,
    ctx: &BoundContext<T>,
) -> Result<Vec<BoundResult<T>>> {
    let n = g.n();
    for k in [i, j] {
        if k >= n {
            return Err(Error::Index { index: k, size: n });
        }
    }
    let to_i = g.distances_to(i);
    let from_j = g.geodesic_distances(j);
    Ok((0..n)
        .map(|u| match (to_i[u], from_j[u]) {
            (Some(a), Some(b)) if g.is_directed() => edge_bound_directed(ctx, a + b, false),
            (Some(a), Some(b)) => edge_bound_undirected(ctx, a + b),
            _ => BoundResult::vanishing(None),
        })
        .collect())
}

/// `L_p(A, E) = Σ_k α_k Σ_{ℓ=1..k} A^{ℓ−1} E A^{k−ℓ}` for `p(z) = Σ_k α_k z^k`, evaluated densely.
pub fn poly_frechet<T: Scalar>(a: &DenseMatrix<T>, coeffs: &[T], e: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if (e.rows(), e.cols()) != (n, n) {
        return Err(Error::Dimension { expected: n, got: e.rows() });
    }
    let deg = coeffs.len().saturating_sub(1);
    let mut powers = vec![DenseMatrix::identity(n)];
    for k in 1..deg {
        let next = powers[k - 1].matmul(a);
        powers.push(next);
    }
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &alpha) in coeffs.iter().enumerate().skip(1) {
        if alpha == T::zero() {
            continue;
        }
        for l in 1..=k {
            let term = powers[l - 1].matmul(e).matmul(&powers[k - l]);
            out = out.add(&term.scaled(alpha));
        }
    }
    Ok(out)
}
