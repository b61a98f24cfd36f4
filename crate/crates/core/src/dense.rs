//! Small dense kernels: matrix exponential, block-triangular Fréchet oracle, thin SVD and a
//! symmetric eigensolver.
//!
//! These run on Krylov-sized matrices (a few hundred rows at most) and serve as test oracles;
//! nothing here is meant for `n`-sized problems.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// `u vᵀ`.
    pub fn outer(u: &[T], v: &[T]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| crate::scalar::dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn tmatvec(&self, y: &[T]) -> Vec<T> {
        assert_eq!(self.rows, y.len(), "tmatvec shape mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            crate::scalar::axpy(yi, self.row(i), &mut out);
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> T {
        crate::scalar::norm2(&self.data)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.abs()).sum::<T>()).fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        crate::scalar::norm_inf(&self.data)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Solves `A X = B` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        if rhs.rows != self.rows {
            return Err(Error::Dimension { expected: self.rows, got: rhs.rows });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[(i, k)].abs() > a[(p, k)].abs() {
                    p = i;
                }
            }
            if a[(p, k)] == T::zero() {
                return Err(Error::InvalidArgument("singular matrix in solve".into()));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                for j in 0..b.cols {
                    b.data.swap(k * b.cols + j, p * b.cols + j);
                }
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f == T::zero() {
                    continue;
                }
                a[(i, k)] = T::zero();
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                for j in 0..b.cols {
                    let v = b[(k, j)];
                    b[(i, j)] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            let piv = a[(k, k)];
            for j in 0..b.cols {
                let mut s = b[(k, j)];
                for l in k + 1..n {
                    s -= a[(k, l)] * b[(l, j)];
                }
                b[(k, j)] = s / piv;
            }
        }
        Ok(b)
    }
}

/// Degree-m diagonal Padé coefficients of exp, normalised so the leading one is 1 at `z^m`.
fn pade_coefficients(m: usize) -> Vec<f64> {
    // c_k ∝ (2m - k)! / (k! (m - k)!)
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;
    for k in (0..m).rev() {
        // c_k / c_{k+1} = (2m - k)(k + 1) / (m - k)
        c[k] = c[k + 1] * ((2 * m - k) as f64) * ((k + 1) as f64) / ((m - k) as f64);
    }
    c
}

// Higham (2005) backward-error thresholds for the degree 3, 5, 7, 9, 13 approximants.
const THETAS: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = a.norm1().to_f64_lossy();
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("expm of a non-finite matrix".into()));
    }
    let (degree, squarings) = match THETAS.iter().find(|(_, th)| norm <= *th) {
        Some(&(m, _)) => (m, 0),
        None => {
            let s = (norm / THETAS[4].1).log2().ceil().max(0.0) as i32;
            (13, s)
        }
    };
    let scaled = a.scaled(T::lit(0.5f64.powi(squarings)));
    let c: Vec<T> = pade_coefficients(degree).into_iter().map(T::lit).collect();

    // even powers A^0, A^2, ..., A^(degree-1)
    let a2 = scaled.matmul(&scaled);
    let mut evens = vec![DenseMatrix::identity(n), a2.clone()];
    let top = if degree == 13 { 3 } else { degree / 2 };
    while evens.len() <= top {
        let next = evens.last().expect("nonempty").matmul(&a2);
        evens.push(next);
    }
    let (u_inner, v) = if degree == 13 {
        // U = A[A6(c13 A6 + c11 A4 + c9 A2) + c7 A6 + c5 A4 + c3 A2 + c1 I]
        let (a2, a4, a6) = (&evens[1], &evens[2], &evens[3]);
        let id = &evens[0];
        let lin = |w: &[(T, &DenseMatrix<T>)]| {
            w.iter().fold(DenseMatrix::zeros(n, n), |acc, (s, m)| acc.add(&m.scaled(*s)))
        };
        let u_hi = lin(&[(c[13], a6), (c[11], a4), (c[9], a2)]);
        let u_lo = lin(&[(c[7], a6), (c[5], a4), (c[3], a2), (c[1], id)]);
        let v_hi = lin(&[(c[12], a6), (c[10], a4), (c[8], a2)]);
        let v_lo = lin(&[(c[6], a6), (c[4], a4), (c[2], a2), (c[0], id)]);
        (a6.matmul(&u_hi).add(&u_lo), a6.matmul(&v_hi).add(&v_lo))
    } else {
        let mut u = DenseMatrix::zeros(n, n);
        let mut v = DenseMatrix::zeros(n, n);
        for (k, p) in evens.iter().enumerate().take(degree / 2 + 1) {
            if 2 * k + 1 <= degree {
                u = u.add(&p.scaled(c[2 * k + 1]));
            }
            v = v.add(&p.scaled(c[2 * k]));
        }
        (u, v)
    };
    let u = scaled.matmul(&u_inner);
    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// `L_exp(A, E)` as the upper-right block of `exp([[A, E], [0, A]])`.
///
/// `O(n³)` test equipment; callers pass `cap` to refuse large inputs.
pub fn block_frechet_oracle<T: Scalar>(
    a: &DenseMatrix<T>,
    e: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if (e.rows, e.cols) != (a.rows, a.cols) {
        return Err(Error::Dimension { expected: a.rows, got: e.rows.max(e.cols) });
    }
    let n = a.rows;
    let mut big = DenseMatrix::zeros(2 * n, 2 * n);
    big.set_block(0, 0, a);
    big.set_block(0, n, e);
    big.set_block(n, n, a);
    Ok(expm(&big)?.block(0, n, n, n))
}

/// Upper-right block of `exp([[G, E], [0, H]])` for square `G` (`p×p`), `H` (`q×q`) and
/// `E` (`p×q`): the generalised Fréchet derivative used by the Krylov extraction.
pub fn block_triangular_exp_corner<T: Scalar>(
    g: &DenseMatrix<T>,
    e: &DenseMatrix<T>,
    h: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let (p, q) = (g.rows, h.rows);
    let mut big = DenseMatrix::zeros(p + q, p + q);
    big.set_block(0, 0, g);
    big.set_block(0, p, e);
    big.set_block(p, p, h);
    Ok(expm(&big)?.block(0, p, p, q))
}

/// Thin SVD `A = U diag(σ) Vᵀ` by one-sided Jacobi.
#[derive(Clone, Debug)]
pub struct ThinSvd<T> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
}

pub fn thin_svd<T: Scalar>(a: &DenseMatrix<T>) -> ThinSvd<T> {
    if a.rows < a.cols {
        let t = thin_svd(&a.transpose());
        return ThinSvd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let (m, n) = (a.rows, a.cols);
    // work on columns: W = A V, rotating pairs of columns until mutually orthogonal
    let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = crate::scalar::dot(&w[p], &w[p]);
                let beta = crate::scalar::dot(&w[q], &w[q]);
                let gamma = crate::scalar::dot(&w[p], &w[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (x, y) = (w[p][k], w[q][k]);
                    w[p][k] = c * x - s * y;
                    w[q][k] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[p][k], v[q][k]);
                    v[p][k] = c * x - s * y;
                    v[q][k] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sig: Vec<(T, usize)> =
        w.iter().enumerate().map(|(j, c)| (crate::scalar::norm2(c), j)).collect();
    sig.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));

    let smax = sig.first().map_or(T::zero(), |s| s.0);
    let tiny = smax * eps * T::from_usize_lossy(m.max(n));
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &(s, j) in &sig {
        if s > tiny && s > T::zero() {
            u_cols.push(w[j].iter().map(|&x| x / s).collect());
            sigma.push(s);
        } else {
            u_cols.push(Vec::new());
            sigma.push(T::zero());
        }
        v_cols.push(v[j].clone());
    }
    complete_orthonormal(&mut u_cols, m);
    let u = DenseMatrix::from_fn(m, n, |i, j| u_cols[j][i]);
    let vm = DenseMatrix::from_fn(n, n, |i, j| v_cols[j][i]);
    ThinSvd { u, sigma, v: vm }
}

/// Replaces empty columns by unit vectors orthogonal to all others.
fn complete_orthonormal<T: Scalar>(cols: &mut [Vec<T>], m: usize) {
    let mut candidate = 0usize;
    for k in 0..cols.len() {
        if !cols[k].is_empty() {
            continue;
        }
        loop {
            let mut e = vec![T::zero(); m];
            e[candidate % m] = T::one();
            candidate += 1;
            for _pass in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let h = crate::scalar::dot(other, &e);
                    crate::scalar::axpy(-h, other, &mut e);
                }
            }
            let nrm = crate::scalar::norm2(&e);
            if nrm > T::lit(0.5) {
                cols[k] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi; eigenvalues ascending, the
/// matching eigenvectors in the columns of the returned matrix.
pub fn symmetric_eigen<T: Scalar>(a: &DenseMatrix<T>) -> Result<(Vec<T>, DenseMatrix<T>)> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut q = DenseMatrix::identity(n);
    let scale = m.frobenius_norm();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= T::epsilon() * scale || scale == T::zero() {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = m[(p, r)];
                if apr == T::zero() {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (T::lit(2.0) * apr);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (x, y) = (m[(k, p)], m[(k, r)]);
                    m[(k, p)] = c * x - s * y;
                    m[(k, r)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (m[(p, k)], m[(r, k)]);
                    m[(p, k)] = c * x - s * y;
                    m[(r, k)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * x - s * y;
                    q[(k, r)] = s * x + c * y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let vecs = DenseMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn rel(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
        a.sub(b).frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&DenseMatrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(e, DenseMatrix::identity(3));
    }

    #[test]
    fn expm_diagonal() {
        let e = expm(&DenseMatrix::diag(&[1.0, -1.0])).unwrap();
        assert!((e[(0, 0)] - std::f64::consts::E).abs() < 1e-14);
        assert!((e[(1, 1)] - (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn expm_swap_matrix_closed_form() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = expm(&a).unwrap();
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        for (i, j, want) in [(0, 0, c), (0, 1, s), (1, 0, s), (1, 1, c)] {
            assert!((e[(i, j)] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn expm_inverse_and_shift() {
        for seed in 0..10 {
            let a = random(7, 7, seed).scaled(1.0 + seed as f64);
            let (ep, em) = (expm(&a).unwrap(), expm(&a.scaled(-1.0)).unwrap());
            // rounding in the product grows with ‖e^A‖‖e^-A‖
            let cond = ep.frobenius_norm() * em.frobenius_norm();
            let prod = ep.matmul(&em);
            assert!(rel(&prod, &DenseMatrix::identity(7)) < 1e-14 * cond, "seed {seed}");
            let sigma = 0.7;
            let shifted = a.add(&DenseMatrix::identity(7).scaled(sigma));
            let lhs = expm(&shifted).unwrap();
            let rhs = expm(&a).unwrap().scaled(sigma.exp());
            assert!(rel(&lhs, &rhs) < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn expm_rejects_rectangular() {
        assert!(matches!(expm(&DenseMatrix::<f64>::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn expm_single_precision() {
        let a = DenseMatrix::<f32>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 1)] - 1f32.sinh()).abs() < 1e-6);
    }

    #[test]
    fn frechet_at_zero_is_identity_map() {
        let e = random(4, 4, 3);
        let l = block_frechet_oracle(&DenseMatrix::zeros(4, 4), &e).unwrap();
        assert!(rel(&l, &e) < 1e-14);
    }

    #[test]
    fn frechet_transposition_for_symmetric_a() {
        let r = random(5, 5, 9);
        let a = r.add(&r.transpose());
        let eij = DenseMatrix::outer(&unit(5, 1), &unit(5, 3));
        let eji = DenseMatrix::outer(&unit(5, 3), &unit(5, 1));
        let l1 = block_frechet_oracle(&a, &eij).unwrap().transpose();
        let l2 = block_frechet_oracle(&a, &eji).unwrap();
        assert!(rel(&l1, &l2) < 1e-13);
    }

    fn unit(n: usize, k: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        e
    }

    #[test]
    fn frechet_matches_central_difference() {
        let a = random(8, 8, 21);
        let e = random(8, 8, 22);
        let h = 1e-5;
        let plus = expm(&a.add(&e.scaled(h))).unwrap();
        let minus = expm(&a.sub(&e.scaled(h))).unwrap();
        let fd = plus.sub(&minus).scaled(0.5 / h);
        let l = block_frechet_oracle(&a, &e).unwrap();
        assert!(rel(&l, &fd) < 1e-6);
    }

    #[test]
    fn frechet_lower_left_block_vanishes() {
        let a = random(6, 6, 1).scaled(4.0);
        let e = random(6, 6, 2);
        let mut big = DenseMatrix::zeros(12, 12);
        big.set_block(0, 0, &a);
        big.set_block(0, 6, &e);
        big.set_block(6, 6, &a);
        let x = expm(&big).unwrap();
        assert!(x.block(6, 0, 6, 6).max_abs() <= 1e-14 * x.max_abs());
    }

    #[test]
    fn frechet_is_linear() {
        let a = random(6, 6, 5);
        let (e1, e2) = (random(6, 6, 6), random(6, 6, 7));
        let (al, be) = (0.8, -2.5);
        let lhs = block_frechet_oracle(&a, &e1.scaled(al).add(&e2.scaled(be))).unwrap();
        let rhs = block_frechet_oracle(&a, &e1)
            .unwrap()
            .scaled(al)
            .add(&block_frechet_oracle(&a, &e2).unwrap().scaled(be));
        assert!(rel(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn frechet_size_mismatch() {
        let r = block_frechet_oracle(&DenseMatrix::<f64>::zeros(3, 3), &DenseMatrix::zeros(2, 2));
        assert!(r.is_err());
    }

    #[test]
    fn svd_identity_and_rank_one() {
        let s = thin_svd(&DenseMatrix::<f64>::identity(3));
        assert_eq!(s.sigma.len(), 3);
        assert!(s.sigma.iter().all(|&x| (x - 1.0).abs() < 1e-15));

        let u = [2.0, 0.0, 0.0];
        let v = [0.0, 3.0 / 2f64.sqrt(), 3.0 / 2f64.sqrt()];
        let a = DenseMatrix::outer(&u, &v);
        let s = thin_svd(&a);
        assert!((s.sigma[0] - 6.0).abs() < 1e-14);
        assert!(s.sigma[1..].iter().all(|&x| x.abs() < 1e-14));
        let utu = s.u.transpose().matmul(&s.u);
        assert!(rel(&utu, &DenseMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn svd_reconstructs_random() {
        for (r, c, seed) in [(5, 5, 1), (7, 3, 2), (3, 6, 3)] {
            let a = random(r, c, seed);
            let s = thin_svd(&a);
            let rec = s.u.matmul(&DenseMatrix::diag(&s.sigma)).matmul(&s.v.transpose());
            assert!(rel(&rec, &a) < 1e-13);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
            let k = s.sigma.len();
            assert!(rel(&s.u.transpose().matmul(&s.u), &DenseMatrix::identity(k)) < 1e-13);
            assert!(rel(&s.v.transpose().matmul(&s.v), &DenseMatrix::identity(k)) < 1e-13);
        }
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let r = random(9, 9, 4);
        let a = r.add(&r.transpose());
        let (vals, q) = symmetric_eigen(&a).unwrap();
        let rec = q.matmul(&DenseMatrix::diag(&vals)).matmul(&q.transpose());
        assert!(rel(&rec, &a) < 1e-13);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}
