//! Two-sided Krylov approximation of `L_exp(Aᵀ, b cᵀ)`.
//!
//! With Arnoldi decompositions `Aᵀ V = V G + …` (started at `b`) and `A W = W H + …`
//! (started at `c`), the derivative is approximated by `‖b‖‖c‖ · V X Wᵀ` where `X` is the
//! upper-right block of `exp([[G, e₁e₁ᵀ], [0, Hᵀ]])`. Because the bases are nested and
//! orthonormal, the change between consecutive iterates is measured on the small core `X`
//! alone, and the `n × n` matrix is never formed.

use crate::dense::{block_triangular_exp_corner, expm, thin_svd, DenseMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{axpy, dot, norm2, Scalar};

/// Square operator accessed through products only.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
    /// Upper estimate of `‖A‖₂`; scales the breakdown test.
    fn norm_estimate(&self) -> T;
}

/// `A` or `Aᵀ` of a graph.
#[derive(Clone, Copy, Debug)]
pub struct GraphOperator<'a, T> {
    pub graph: &'a Graph<T>,
    pub transposed: bool,
}

impl<'a, T: Scalar> LinearOperator<T> for GraphOperator<'a, T> {
    fn dim(&self) -> usize {
        self.graph.n()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.graph.apply_into(x, y, self.transposed)
    }
    fn norm_estimate(&self) -> T {
        self.graph.norm2_upper()
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(&self.matvec(x));
    }
    fn norm_estimate(&self) -> T {
        (self.norm1() * self.norm_inf()).sqrt()
    }
}

/// `A V_m = V_{m+1} H̄_m` with orthonormal `V`.
#[derive(Clone, Debug)]
pub struct ArnoldiDecomposition<T> {
    basis: Vec<Vec<T>>,
    // column k holds h_{0..=k+1, k}
    hcols: Vec<Vec<T>>,
    pub breakdown: bool,
    pub symmetric: bool,
}

impl<T: Scalar> ArnoldiDecomposition<T> {
    /// Steps completed.
    pub fn m(&self) -> usize {
        self.hcols.len()
    }

    /// Basis vector `k` (0-based).
    pub fn v(&self, k: usize) -> &[T] {
        &self.basis[k]
    }

    /// Number of stored basis vectors: `m + 1`, or `m` after breakdown.
    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }

    /// `n × k` matrix of the first `k` basis vectors.
    pub fn basis_matrix(&self, k: usize) -> DenseMatrix<T> {
        let n = self.basis.first().map_or(0, Vec::len);
        DenseMatrix::from_fn(n, k, |i, j| self.basis[j][i])
    }

    /// The `(m+1) × m` Hessenberg matrix.
    pub fn hessenberg(&self) -> DenseMatrix<T> {
        let m = self.m();
        DenseMatrix::from_fn(m + 1, m, |i, j| self.hcols[j].get(i).copied().unwrap_or(T::zero()))
    }

    /// Leading `k × k` block of `H`.
    pub fn h_square(&self, k: usize) -> DenseMatrix<T> {
        DenseMatrix::from_fn(k, k, |i, j| self.hcols[j].get(i).copied().unwrap_or(T::zero()))
    }

    /// `h_{m+1,m}`.
    pub fn last_subdiagonal(&self) -> T {
        self.hcols.last().map_or(T::zero(), |c| c[c.len() - 1])
    }
}

/// Incremental Arnoldi (or Lanczos) process.
struct Arnoldi<'a, T, O: ?Sized> {
    op: &'a O,
    dec: ArnoldiDecomposition<T>,
    reorth: bool,
    threshold: T,
    work: Vec<T>,
}

fn breakdown_factor<T: Scalar>() -> T {
    T::lit(1e-14).max(T::epsilon() * T::lit(45.0))
}

impl<'a, T: Scalar, O: LinearOperator<T> + ?Sized> Arnoldi<'a, T, O> {
    fn new(op: &'a O, b: &[T], reorth: bool, symmetric: bool) -> Result<Self> {
        let n = op.dim();
        if b.len() != n {
            return Err(Error::Dimension { expected: n, got: b.len() });
        }
        let nb = norm2(b);
        if nb == T::zero() || !nb.is_finite() {
            return Err(Error::ZeroVector);
        }
        let v0 = b.iter().map(|&x| x / nb).collect();
        Ok(Self {
            op,
            dec: ArnoldiDecomposition { basis: vec![v0], hcols: Vec::new(), breakdown: false, symmetric },
            reorth,
            threshold: breakdown_factor::<T>() * op.norm_estimate(),
            work: vec![T::zero(); n],
        })
    }

    fn done(&self) -> bool {
        self.dec.breakdown
    }

    /// One more step; no-op after breakdown.
    fn step(&mut self) {
        if self.dec.breakdown {
            return;
        }
        let k = self.dec.m();
        let n = self.op.dim();
        self.op.apply(&self.dec.basis[k], &mut self.work);
        let w = &mut self.work;
        let basis = &self.dec.basis;
        let mut col = vec![T::zero(); k + 2];
        if self.dec.symmetric {
            if k > 0 {
                let beta = self.dec.hcols[k - 1][k];
                axpy(-beta, &basis[k - 1], w);
                col[k - 1] = beta;
            }
            let alpha = dot(&basis[k], w);
            axpy(-alpha, &basis[k], w);
            col[k] = alpha;
            if self.reorth {
                // corrections off the tridiagonal are rounding noise and are discarded
                for (j, v) in basis.iter().enumerate() {
                    let c = dot(v, w);
                    axpy(-c, v, w);
                    if j == k {
                        col[k] += c;
                    }
                }
            }
        } else {
            let passes = if self.reorth { 2 } else { 1 };
            for _ in 0..passes {
                for (j, v) in basis.iter().enumerate() {
                    let c = dot(v, w);
                    axpy(-c, v, w);
                    col[j] += c;
                }
            }
        }
        let beta = norm2(w);
        col[k + 1] = beta;
        self.dec.hcols.push(col);
        if beta <= self.threshold || k + 1 >= n {
            self.dec.breakdown = true;
        } else {
            let inv = T::one() / beta;
            self.dec.basis.push(w.iter().map(|&x| x * inv).collect());
        }
    }
}

/// Runs up to `m_max` Arnoldi steps from `b`; Lanczos three-term recurrence when `symmetric`.
pub fn arnoldi<T: Scalar, O: LinearOperator<T> + ?Sized>(
    op: &O,
    b: &[T],
    m_max: usize,
    reorth: bool,
    symmetric: bool,
) -> Result<ArnoldiDecomposition<T>> {
    let mut a = Arnoldi::new(op, b, reorth, symmetric)?;
    while a.dec.m() < m_max && !a.done() {
        a.step();
    }
    Ok(a.dec)
}

/// Outcome of an adaptive Krylov run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrylovStatus {
    /// Increment fell below the tolerance.
    Converged,
    /// Invariant subspaces found on every side; the result is exact up to rounding.
    Exact,
    /// `m_max` reached first.
    NotConverged,
}

impl KrylovStatus {
    pub fn is_ok(self) -> bool {
        !matches!(self, KrylovStatus::NotConverged)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions<T> {
    /// Relative tolerance on the Frobenius norm of the increment between iterates.
    pub tol: T,
    pub m_max: usize,
    /// Second Gram–Schmidt pass (full reorthogonalisation also in Lanczos mode).
    pub reorth: bool,
    /// Check convergence every `check_every` steps.
    pub check_every: usize,
}

impl<T: Scalar> Default for KrylovOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-3), m_max: 100, reorth: true, check_every: 1 }
    }
}

impl<T: Scalar> KrylovOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.m_max == 0 || self.check_every == 0 {
            return Err(Error::InvalidArgument("m_max and check_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// `scale · V X Wᵀ` with orthonormal `V` (`n × m₁`) and `W` (`n × m₂`).
#[derive(Clone, Debug)]
pub struct LowRankFrechet<T> {
    left: DenseMatrix<T>,
    core: DenseMatrix<T>,
    right: DenseMatrix<T>,
    scale: T,
    pub iterations: usize,
    pub status: KrylovStatus,
    /// Last measured `‖L_m − L_{m−1}‖_F` (infinite if never measured).
    pub increment: T,
}

impl<T: Scalar> LowRankFrechet<T> {
    pub fn from_parts(
        left: DenseMatrix<T>,
        core: DenseMatrix<T>,
        right: DenseMatrix<T>,
        scale: T,
    ) -> Result<Self> {
        if left.cols() != core.rows() {
            return Err(Error::Dimension { expected: core.rows(), got: left.cols() });
        }
        if right.cols() != core.cols() {
            return Err(Error::Dimension { expected: core.cols(), got: right.cols() });
        }
        if left.rows() != right.rows() {
            return Err(Error::Dimension { expected: left.rows(), got: right.rows() });
        }
        Ok(Self {
            left,
            core,
            right,
            scale,
            iterations: 0,
            status: KrylovStatus::Exact,
            increment: T::zero(),
        })
    }

    pub fn n(&self) -> usize {
        self.left.rows()
    }

    /// `(m₁, m₂)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.core.rows(), self.core.cols())
    }

    pub fn left(&self) -> &DenseMatrix<T> {
        &self.left
    }

    pub fn core(&self) -> &DenseMatrix<T> {
        &self.core
    }

    pub fn right(&self) -> &DenseMatrix<T> {
        &self.right
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// `[scale · V X Wᵀ]_{uv}` in `O(m₁m₂)`.
    pub fn entry(&self, u: usize, v: usize) -> Result<T> {
        let n = self.n();
        for idx in [u, v] {
            if idx >= n {
                return Err(Error::Index { index: idx, size: n });
            }
        }
        let xv = self.core.matvec(self.right.row(v));
        Ok(self.scale * dot(self.left.row(u), &xv))
    }

    /// `scale · V X Wᵀ x`, or the transposed product.
    pub fn matvec(&self, x: &[T], transposed: bool) -> Result<Vec<T>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len() });
        }
        let (first, last) = if transposed { (&self.left, &self.right) } else { (&self.right, &self.left) };
        let t = first.tmatvec(x);
        let s = if transposed { self.core.tmatvec(&t) } else { self.core.matvec(&t) };
        let mut y = last.matvec(&s);
        for yi in &mut y {
            *yi *= self.scale;
        }
        Ok(y)
    }

    /// The represented `n × n` matrix; test use only.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.left.matmul(&self.core).matmul(&self.right.transpose()).scaled(self.scale)
    }

    /// Balanced factors `B`, `C` (`n × r`) with `B Cᵀ` equal to the represented matrix:
    /// `B = V U Σ^{1/2} √scale`, `C = W Vₓ Σ^{1/2} √scale` from the thin SVD `X = U Σ Vₓᵀ`.
    /// Directions with zero singular value are dropped.
    pub fn balanced_factors(&self) -> (DenseMatrix<T>, DenseMatrix<T>) {
        let svd = thin_svd(&self.core);
        let r = svd.sigma.iter().take_while(|&&s| s > T::zero()).count();
        let root = self.scale.abs().sqrt();
        let sign = if self.scale < T::zero() { -T::one() } else { T::one() };
        let w: Vec<T> = svd.sigma[..r].iter().map(|&s| s.sqrt() * root).collect();
        let us = DenseMatrix::from_fn(svd.u.rows(), r, |i, k| svd.u[(i, k)] * w[k] * sign);
        let vs = DenseMatrix::from_fn(svd.v.rows(), r, |i, k| svd.v[(i, k)] * w[k]);
        (self.left.matmul(&us), self.right.matmul(&vs))
    }
}

/// `‖X_curr − pad(X_prev)‖_F · scale` for nested iterates.
///
/// Each side may grow by at most one basis vector (zero for a side frozen by breakdown).
pub fn convergence_norm<T: Scalar>(prev: &LowRankFrechet<T>, curr: &LowRankFrechet<T>) -> Result<T> {
    let (p1, p2) = prev.dims();
    let (c1, c2) = curr.dims();
    let nested = |p: usize, c: usize| c >= p && c - p <= 1;
    if !nested(p1, c1) || !nested(p2, c2) {
        return Err(Error::NotNested { prev_rows: p1, prev_cols: p2, rows: c1, cols: c2 });
    }
    Ok(padded_difference(&prev.core, &curr.core) * curr.scale.abs())
}

fn padded_difference<T: Scalar>(prev: &DenseMatrix<T>, curr: &DenseMatrix<T>) -> T {
    let d = DenseMatrix::from_fn(curr.rows(), curr.cols(), |i, j| {
        let p = if i < prev.rows() && j < prev.cols() { prev[(i, j)] } else { T::zero() };
        curr[(i, j)] - p
    });
    d.frobenius_norm()
}

fn e11<T: Scalar>(r: usize, c: usize) -> DenseMatrix<T> {
    let mut e = DenseMatrix::zeros(r, c);
    e[(0, 0)] = T::one();
    e
}

/// Two-sided Krylov approximation of `L_exp(Aᵀ, b cᵀ)` given `Aᵀ` (`op_t`) and `A` (`op`).
///
/// When `shared` is set the caller asserts `A` symmetric and `b = c`, and a single Lanczos
/// run serves both sides.
pub fn krylov_frechet_op<T, O1, O2>(
    op_t: &O1,
    op: &O2,
    symmetric: bool,
    b: &[T],
    c: &[T],
    opts: &KrylovOptions<T>,
) -> Result<LowRankFrechet<T>>
where
    T: Scalar,
    O1: LinearOperator<T> + ?Sized,
    O2: LinearOperator<T> + ?Sized,
{
    opts.validate()?;
    let scale = norm2(b) * norm2(c);
    let shared = symmetric && b == c;
    let mut left = Arnoldi::new(op_t, b, opts.reorth, symmetric)?;
    let mut right = if shared { None } else { Some(Arnoldi::new(op, c, opts.reorth, symmetric)?) };

    let mut prev: Option<DenseMatrix<T>> = None;
    let mut increment = T::infinity();
    let mut status = KrylovStatus::NotConverged;
    let mut core = DenseMatrix::zeros(0, 0);
    let mut steps = 0;
    while steps < opts.m_max {
        steps += 1;
        left.step();
        if let Some(r) = right.as_mut() {
            r.step();
        }
        let exact = left.done() && right.as_ref().map_or(true, |r| r.done());
        if !(exact || steps % opts.check_every == 0 || steps == opts.m_max) {
            continue;
        }
        let g = left.dec.h_square(left.dec.m());
        let h = right.as_ref().map_or_else(|| g.clone(), |r| r.dec.h_square(r.dec.m()));
        core = block_triangular_exp_corner(&g, &e11(g.rows(), h.rows()), &h.transpose())?;
        if !core.is_finite() {
            return Err(Error::InvalidArgument("overflow in the projected exponential".into()));
        }
        if exact {
            if let Some(p) = &prev {
                increment = padded_difference(p, &core) * scale;
            }
            status = KrylovStatus::Exact;
            break;
        }
        if let Some(p) = &prev {
            let diff = padded_difference(p, &core);
            increment = diff * scale;
            if steps >= 2 && diff <= opts.tol * core.frobenius_norm() {
                status = KrylovStatus::Converged;
                break;
            }
        }
        prev = Some(core.clone());
    }
    let left_basis = left.dec.basis_matrix(core.rows());
    let right_basis = match &right {
        Some(r) => r.dec.basis_matrix(core.cols()),
        None => left_basis.clone(),
    };
    Ok(LowRankFrechet {
        left: left_basis,
        core,
        right: right_basis,
        scale,
        iterations: steps,
        status,
        increment,
    })
}

/// Low-rank approximation of `L_exp(Aᵀ, b cᵀ)` for the adjacency matrix `A` of `g`.
pub fn krylov_frechet<T: Scalar>(
    g: &Graph<T>,
    b: &[T],
    c: &[T],
    opts: &KrylovOptions<T>,
) -> Result<LowRankFrechet<T>> {
    let op_t = GraphOperator { graph: g, transposed: true };
    let op = GraphOperator { graph: g, transposed: false };
    krylov_frechet_op(&op_t, &op, !g.is_directed(), b, c, opts)
}

/// Krylov approximation of `exp(A) x`.
#[derive(Clone, Debug)]
pub struct ExpmAction<T> {
    pub value: Vec<T>,
    pub iterations: usize,
    pub status: KrylovStatus,
}

/// `exp(A) x` (or `exp(Aᵀ) x`) as `‖x‖ V_m exp(H_m) e₁`, grown until the relative
/// increment drops below `opts.tol`.
pub fn expm_action_op<T: Scalar, O: LinearOperator<T> + ?Sized>(
    op: &O,
    symmetric: bool,
    x: &[T],
    opts: &KrylovOptions<T>,
) -> Result<ExpmAction<T>> {
    opts.validate()?;
    let nx = norm2(x);
    let mut arn = Arnoldi::new(op, x, opts.reorth, symmetric)?;
    let mut prev: Option<Vec<T>> = None;
    let mut small = Vec::new();
    let mut status = KrylovStatus::NotConverged;
    let mut steps = 0;
    while steps < opts.m_max {
        steps += 1;
        arn.step();
        let exact = arn.done();
        if !(exact || steps % opts.check_every == 0 || steps == opts.m_max) {
            continue;
        }
        let h = arn.dec.h_square(arn.dec.m());
        small = expm(&h)?.column(0);
        if exact {
            status = KrylovStatus::Exact;
            break;
        }
        if let Some(p) = &prev {
            let diff: Vec<T> =
                small.iter().enumerate().map(|(i, &s)| s - p.get(i).copied().unwrap_or(T::zero())).collect();
            if norm2(&diff) <= opts.tol * norm2(&small) {
                status = KrylovStatus::Converged;
                break;
            }
        }
        prev = Some(small.clone());
    }
    let mut value = vec![T::zero(); op.dim()];
    for (k, &s) in small.iter().enumerate() {
        axpy(s * nx, arn.dec.v(k), &mut value);
    }
    Ok(ExpmAction { value, iterations: steps, status })
}

pub fn expm_action<T: Scalar>(
    g: &Graph<T>,
    x: &[T],
    transposed: bool,
    opts: &KrylovOptions<T>,
) -> Result<ExpmAction<T>> {
    let op = GraphOperator { graph: g, transposed };
    expm_action_op(&op, !g.is_directed(), x, opts)
}
