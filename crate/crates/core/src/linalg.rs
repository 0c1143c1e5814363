//! Thin dense-matrix helpers over `faer`.

use faer::linalg::matmul::matmul;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

pub type C64 = faer::c64;
pub type CMat = Mat<C64>;

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[inline]
pub fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn zeros(r: usize, cols: usize) -> CMat {
    Mat::zeros(r, cols)
}

pub fn from_real_diagonal(d: &[f64]) -> CMat {
    let n = d.len();
    Mat::from_fn(n, n, |i, j| if i == j { c(d[i]) } else { czero() })
}

pub fn max_abs(m: MatRef<'_, C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

pub fn hermitian_defect(m: MatRef<'_, C64>) -> f64 {
    let n = m.nrows();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// `(m + m*) / 2`
pub fn hermitize(m: MatRef<'_, C64>) -> CMat {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn trace(m: MatRef<'_, C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr(a* b)`
pub fn hs_inner(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> C64 {
    let mut acc = czero();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> C64 {
    let mut acc = czero();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn scale(m: MatRef<'_, C64>, k: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * k)
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    a.kron(b)
}

pub fn mul<L, R>(a: MatRef<'_, L>, b: MatRef<'_, R>) -> CMat
where
    L: Conjugate<Canonical = C64>,
    R: Conjugate<Canonical = C64>,
{
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, c(1.0), Par::Seq);
    out
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(m: MatRef<'_, C64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver: {e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn eigvalsh(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver: {e:?}")))
}

/// Eigenvalues of a general complex matrix.
pub fn eigvals(m: MatRef<'_, C64>) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))
}

/// Eigenvalues of a general real matrix.
pub fn eigvals_real(m: MatRef<'_, f64>) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))
}

/// Full SVD; singular values nonincreasing.
pub fn svd(m: MatRef<'_, C64>) -> Result<(Vec<f64>, CMat, CMat)> {
    let s = m
        .svd()
        .map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    let vals = s.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, s.U().to_owned(), s.V().to_owned()))
}

pub fn svd_real(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>, Mat<f64>)> {
    let s = m
        .svd()
        .map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    let vals = s.S().column_vector().iter().copied().collect();
    Ok((vals, s.U().to_owned(), s.V().to_owned()))
}

/// `U diag(f(λ)) U*` for an eigendecomposition `(λ, U)`.
pub fn spectral_apply(vals: &[f64], u: MatRef<'_, C64>, f: impl Fn(f64) -> f64) -> CMat {
    let n = u.nrows();
    let k = vals.len();
    let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    let scaled = Mat::from_fn(n, k, |i, j| u[(i, j)] * fv[j]);
    let mut out = Mat::zeros(n, n);
    matmul(
        out.as_mut(),
        Accum::Replace,
        scaled.as_ref(),
        u.adjoint(),
        c(1.0),
        Par::Seq,
    );
    hermitize(out.as_ref())
}

/// Row-major vectorization `vec(X)[i * cols + j] = X[i, j]`.
pub fn vectorize(m: MatRef<'_, C64>) -> Vec<C64> {
    let mut v = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> CMat {
    Mat::from_fn(rows, cols, |i, j| v[i * cols + j])
}
