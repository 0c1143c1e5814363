//! Dense operator kernel: Hermitian and density operators, tensor products,
//! partial traces, shifts, functional calculus with the support convention,
//! trace norm and relative entropy.
//!
//! Tolerances default to `1e-9 * dim * max|entry|` (see [`default_tol`]) and
//! every check has a `*_with_tol` variant.

use std::sync::{Arc, OnceLock};

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};

/// Scale-aware default tolerance `1e-9 * dim * max|entry|`.
pub fn default_tol(m: faer::MatRef<'_, C64>) -> f64 {
    1e-9 * m.nrows().max(1) as f64 * linalg::max_abs(m)
}

/// A square complex matrix.
#[derive(Clone, Debug)]
pub struct ComplexOperator {
    mat: CMat,
}

impl ComplexOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    /// Builds a `dim x dim` operator from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} operator",
                entries.len()
            )));
        }
        Ok(Self {
            mat: linalg::unvectorize(entries, dim, dim),
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: linalg::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: linalg::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> faer::MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(self.mat.as_ref())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn scaled(&self, k: C64) -> Self {
        Self {
            mat: linalg::scale(self.mat.as_ref(), k),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            mat: linalg::mul(self.mat.as_ref(), other.mat.as_ref()),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        linalg::max_abs(self.mat.as_ref())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(self.mat.as_ref(), other.mat.as_ref())
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(self.mat.as_ref())
    }
}

/// Eigen-decomposition of a Hermitian operator with ascending eigenvalues and
/// one rank-one projector per eigenvalue. Degenerate eigenvalues are not
/// merged; use [`SpectralDecomposition::grouped_projectors`] for that.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

impl SpectralDecomposition {
    fn compute(m: faer::MatRef<'_, C64>) -> Result<Self> {
        let (eigenvalues, eigenvectors) = linalg::eigh(m)?;
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> faer::MatRef<'_, C64> {
        self.eigenvectors.as_ref()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn projector(&self, i: usize) -> ComplexOperator {
        let u = self.eigenvectors.as_ref();
        let n = u.nrows();
        ComplexOperator {
            mat: Mat::from_fn(n, n, |a, b| u[(a, i)] * u[(b, i)].conj()),
        }
    }

    pub fn projectors(&self) -> Vec<ComplexOperator> {
        (0..self.len()).map(|i| self.projector(i)).collect()
    }

    /// Groups consecutive eigenvalues lying within `tol` of the first member
    /// of their group. Returns the mean eigenvalue and member indices.
    pub fn groups(&self, tol: f64) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut anchor = f64::NAN;
        for (i, &v) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some((_, members)) if (v - anchor).abs() <= tol => members.push(i),
                _ => {
                    anchor = v;
                    out.push((v, vec![i]));
                }
            }
        }
        for (value, members) in out.iter_mut() {
            *value =
                members.iter().map(|&i| self.eigenvalues[i]).sum::<f64>() / members.len() as f64;
        }
        out
    }

    /// Joint spectral projections of eigenvalue clusters.
    pub fn grouped_projectors(&self, tol: f64) -> Vec<(f64, ComplexOperator)> {
        let u = self.eigenvectors.as_ref();
        let n = u.nrows();
        self.groups(tol)
            .into_iter()
            .map(|(value, members)| {
                let p = Mat::from_fn(n, n, |a, b| {
                    members.iter().map(|&k| u[(a, k)] * u[(b, k)].conj()).sum()
                });
                (value, ComplexOperator { mat: p })
            })
            .collect()
    }

    /// `Σ f(λ_i) P_i`
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        linalg::spectral_apply(&self.eigenvalues, self.eigenvectors.as_ref(), f)
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply(|x| x)
    }
}

/// A Hermitian operator. The stored matrix is exactly Hermitian; the
/// eigendecomposition is computed once on demand.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    op: ComplexOperator,
    spectrum: OnceLock<std::result::Result<Arc<SpectralDecomposition>, Error>>,
}

impl HermitianOperator {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        let tol = default_tol(op.matrix());
        Self::with_tol(op, tol)
    }

    pub fn with_tol(op: ComplexOperator, tol: f64) -> Result<Self> {
        let defect = op.hermitian_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        Ok(Self::from_matrix_unchecked(op.mat))
    }

    pub fn from_matrix(mat: CMat) -> Result<Self> {
        Self::new(ComplexOperator::new(mat)?)
    }

    /// Hermitizes `(m + m*)/2` without checking the defect.
    pub(crate) fn from_matrix_unchecked(mat: CMat) -> Self {
        Self {
            op: ComplexOperator {
                mat: linalg::hermitize(mat.as_ref()),
            },
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_matrix_unchecked(linalg::from_real_diagonal(diag))
    }

    /// Real symmetric matrix given by rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        Self::from_matrix(Mat::from_fn(n, n, |i, j| c(rows[i][j])))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(linalg::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(linalg::identity(dim))
    }

    pub fn as_operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn matrix(&self) -> faer::MatRef<'_, C64> {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    pub fn spectral_decomposition(&self) -> Result<&SpectralDecomposition> {
        self.spectrum
            .get_or_init(|| SpectralDecomposition::compute(self.op.matrix()).map(Arc::new))
            .as_ref()
            .map(|s| s.as_ref())
            .map_err(Clone::clone)
    }

    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(self.spectral_decomposition()?.eigenvalues())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }

    pub fn operator_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().fold(0.0f64, |m, x| m.max(x.abs())))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_matrix_unchecked(linalg::scale(self.matrix(), c(k)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.op.mat + &other.op.mat)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.op.mat - &other.op.mat)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(linalg::kron(self.matrix(), other.matrix()))
    }

    /// `Tr(self · x)`; real whenever `x` is Hermitian.
    pub fn trace_with(&self, x: &ComplexOperator) -> C64 {
        linalg::trace_of_product(self.matrix(), x.matrix())
    }

    /// Conjugation `v* self v` restricted by the columns of `v`.
    pub fn compress(&self, v: faer::MatRef<'_, C64>) -> Self {
        let tmp = linalg::mul(self.matrix(), v);
        Self::from_matrix_unchecked(linalg::mul(v.adjoint(), tmp.as_ref()))
    }
}

/// A positive semidefinite unit-trace operator.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    h: HermitianOperator,
}

impl DensityOperator {
    pub fn new(h: HermitianOperator) -> Result<Self> {
        let tol = default_tol(h.matrix());
        Self::with_tol(h, tol, tol)
    }

    pub fn with_tol(h: HermitianOperator, psd_tol: f64, trace_tol: f64) -> Result<Self> {
        let trace = h.trace();
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::InvalidTrace {
                trace,
                tol: trace_tol,
            });
        }
        let min = h.min_eigenvalue()?;
        if min < -psd_tol {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
                tol: psd_tol,
            });
        }
        Ok(Self { h })
    }

    pub fn from_matrix(mat: CMat) -> Result<Self> {
        Self::new(HermitianOperator::from_matrix(mat)?)
    }

    /// Skips the spectral check; for operators that are densities by
    /// construction.
    pub(crate) fn from_trusted(h: HermitianOperator) -> Self {
        Self { h }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            h: HermitianOperator::from_real_diagonal(&vec![1.0 / dim as f64; dim]),
        }
    }

    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(p))
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized here.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let n = psi.len();
        let mat = Mat::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Ok(Self {
            h: HermitianOperator::from_matrix_unchecked(mat),
        })
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.h
    }

    pub fn into_hermitian(self) -> HermitianOperator {
        self.h
    }

    pub fn matrix(&self) -> faer::MatRef<'_, C64> {
        self.h.matrix()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `Tr(ρ x)` for Hermitian `x`.
    pub fn expectation(&self, x: &HermitianOperator) -> f64 {
        self.h.trace_with(x.as_operator()).re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            h: self.h.tensor(&other.h),
        }
    }

    pub fn tensor_power(&self, k: usize) -> Self {
        let mut out = DensityOperator {
            h: HermitianOperator::identity(1),
        };
        for _ in 0..k {
            out = out.tensor(self);
        }
        out
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexOperator, b: &ComplexOperator) -> ComplexOperator {
    ComplexOperator {
        mat: linalg::kron(a.matrix(), b.matrix()),
    }
}

/// Partial trace over every factor not listed in `keep`. Factors are ordered
/// with the first one most significant in the flat index.
pub fn partial_trace(
    x: &ComplexOperator,
    factor_dims: &[usize],
    keep: &[usize],
) -> Result<ComplexOperator> {
    let total: usize = factor_dims.iter().product();
    if total != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {factor_dims:?} multiply to {total}, operator has dim {}",
            x.dim()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= factor_dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "kept factor {bad} out of range"
        )));
    }
    let mut strides = vec![1usize; factor_dims.len()];
    for i in (0..factor_dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * factor_dims[i + 1];
    }
    let kept: Vec<usize> = (0..factor_dims.len())
        .filter(|i| keep.contains(i))
        .collect();
    let traced: Vec<usize> = (0..factor_dims.len())
        .filter(|i| !keep.contains(i))
        .collect();
    let offsets = |which: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in which {
            let mut next = Vec::with_capacity(offs.len() * factor_dims[f]);
            for &o in &offs {
                for v in 0..factor_dims[f] {
                    next.push(o + v * strides[f]);
                }
            }
            offs = next;
        }
        offs
    };
    let kept_offsets = offsets(&kept);
    let traced_offsets = offsets(&traced);
    let m = x.matrix();
    let out_dim = kept_offsets.len();
    let mat = Mat::from_fn(out_dim, out_dim, |i, j| {
        let (ri, rj) = (kept_offsets[i], kept_offsets[j]);
        traced_offsets
            .iter()
            .map(|&t| m[(ri + t, rj + t)])
            .sum::<C64>()
    });
    Ok(ComplexOperator { mat })
}

/// Places a window operator `a` acting on `r` consecutive sites at
/// `[site, site + r)` inside a chain of `n` sites of dimension `d`.
pub fn shift_embed(
    a: &HermitianOperator,
    site: usize,
    n: usize,
    d: usize,
) -> Result<HermitianOperator> {
    let r = window_length(a.dim(), d)?;
    if site + r > n {
        return Err(Error::WindowOutOfRange {
            site,
            end: site + r,
            n,
        });
    }
    let left = linalg::identity(d.pow(site as u32));
    let right = linalg::identity(d.pow((n - site - r) as u32));
    let mat = linalg::kron(
        linalg::kron(left.as_ref(), a.matrix()).as_ref(),
        right.as_ref(),
    );
    Ok(HermitianOperator::from_matrix_unchecked(mat))
}

/// Number of sites `r` with `d^r = dim`.
pub fn window_length(dim: usize, d: usize) -> Result<usize> {
    if d < 2 {
        return if d == 1 && dim == 1 {
            Ok(1)
        } else {
            Err(Error::DimensionMismatch(format!("site dimension {d}")))
        };
    }
    let mut r = 0;
    let mut p = 1usize;
    while p < dim {
        p *= d;
        r += 1;
    }
    if p != dim || r == 0 {
        return Err(Error::DimensionMismatch(format!(
            "dimension {dim} is not a positive power of {d}"
        )));
    }
    Ok(r)
}

/// Scalar functions for the functional calculus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFunction {
    Exp,
    /// Logarithm on the support; eigenvalues at or below tolerance map to 0.
    Log,
    /// `x^t` on the support with `0^t := 0`; `power(0)` is the support projection.
    Power(f64),
}

pub fn matrix_function(a: &HermitianOperator, f: MatrixFunction) -> Result<HermitianOperator> {
    matrix_function_with_tol(a, f, default_tol(a.matrix()))
}

pub fn matrix_function_with_tol(
    a: &HermitianOperator,
    f: MatrixFunction,
    tol: f64,
) -> Result<HermitianOperator> {
    let spec = a.spectral_decomposition()?;
    if !matches!(f, MatrixFunction::Exp) {
        let min = spec.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
                tol,
            });
        }
    }
    let mat = match f {
        MatrixFunction::Exp => spec.apply(f64::exp),
        MatrixFunction::Log => spec.apply(|x| if x > tol { x.ln() } else { 0.0 }),
        MatrixFunction::Power(t) => spec.apply(|x| if x > tol { x.powf(t) } else { 0.0 }),
    };
    Ok(HermitianOperator::from_matrix_unchecked(mat))
}

/// `e^{a}` for Hermitian `a`.
pub fn exp_hermitian(a: &HermitianOperator) -> Result<HermitianOperator> {
    matrix_function(a, MatrixFunction::Exp)
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(a: &HermitianOperator) -> Result<f64> {
    Ok(a.eigenvalues()?.iter().map(|x| x.abs()).sum())
}

/// Orthogonal projection onto the eigenvectors with eigenvalue above `tol`.
pub fn support_projection(a: &HermitianOperator, tol: Option<f64>) -> Result<ComplexOperator> {
    let tol = tol.unwrap_or_else(|| default_tol(a.matrix()));
    let spec = a.spectral_decomposition()?;
    let min = spec.eigenvalues().first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
            tol,
        });
    }
    Ok(ComplexOperator {
        mat: spec.apply(|x| if x > tol { 1.0 } else { 0.0 }),
    })
}

/// Umegaki relative entropy `Tr φ(log φ − log ω)`, `+∞` when the support of
/// `φ` is not contained in the support of `ω`.
pub fn relative_entropy(phi: &DensityOperator, omega: &DensityOperator) -> Result<f64> {
    if phi.dim() != omega.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            phi.dim(),
            omega.dim()
        )));
    }
    let tol_phi = default_tol(phi.matrix());
    let tol_omega = default_tol(omega.matrix());
    let sp = phi.as_hermitian().spectral_decomposition()?;
    let so = omega.as_hermitian().spectral_decomposition()?;
    // overlaps |<u_i|v_j>|^2
    let overlap = linalg::mul(sp.eigenvectors().adjoint(), so.eigenvectors());
    let mut leak = 0.0;
    let mut cross = 0.0;
    let mut self_term = 0.0;
    for (i, &p) in sp.eigenvalues().iter().enumerate() {
        if p <= tol_phi {
            continue;
        }
        self_term += p * p.ln();
        for (j, &q) in so.eigenvalues().iter().enumerate() {
            let w = overlap[(i, j)].norm_sqr();
            if q > tol_omega {
                cross += p * w * q.ln();
            } else {
                leak += p * w;
            }
        }
    }
    if leak > tol_phi.max(1e-12) {
        return Ok(f64::INFINITY);
    }
    Ok((self_term - cross).max(0.0))
}

/// Minimal `c ≥ 0` with `target ≤ c · reference` for positive semidefinite
/// operators, or `None` when the support of `target` leaks out of the
/// support of `reference`. Computed as the largest eigenvalue of
/// `R^{-1/2} T R^{-1/2}` on the support of `R`.
pub fn dominance_constant(
    target: &HermitianOperator,
    reference: &HermitianOperator,
    tol: Option<f64>,
) -> Result<Option<f64>> {
    if target.dim() != reference.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            target.dim(),
            reference.dim()
        )));
    }
    let tol =
        tol.unwrap_or_else(|| default_tol(reference.matrix()).max(default_tol(target.matrix())));
    let spec = reference.spectral_decomposition()?;
    let vals = spec.eigenvalues();
    let u = spec.eigenvectors();
    let n = reference.dim();
    let support: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > tol).collect();
    let complement: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= tol).collect();
    if !complement.is_empty() {
        let w = Mat::from_fn(n, complement.len(), |i, j| u[(i, complement[j])]);
        let outside = target.compress(w.as_ref());
        let leak = outside.trace();
        if leak > tol {
            return Ok(None);
        }
    }
    if support.is_empty() {
        return Ok(Some(0.0));
    }
    let v = Mat::from_fn(n, support.len(), |i, j| {
        u[(i, support[j])] / vals[support[j]].sqrt()
    });
    let sandwiched = target.compress(v.as_ref());
    Ok(Some(sandwiched.max_eigenvalue()?.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::czero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        Mat::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(random_matrix(rng, n))
    }

    fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityOperator {
        let g = random_matrix(rng, n);
        let p = linalg::mul(g.as_ref(), g.adjoint());
        let t = linalg::trace(p.as_ref()).re;
        DensityOperator::from_matrix(linalg::scale(p.as_ref(), c(1.0 / t))).unwrap()
    }

    fn diag(d: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(d)
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexOperator::identity(2);
        let i4 = tensor_product(&i2, &i2);
        assert!(i4.max_abs_diff(&ComplexOperator::identity(4)) == 0.0);
    }

    #[test]
    fn tensor_of_diagonals() {
        let p = 0.3;
        let out = tensor_product(
            diag(&[1.0, 0.0]).as_operator(),
            diag(&[p, 1.0 - p]).as_operator(),
        );
        assert!(out.max_abs_diff(diag(&[p, 1.0 - p, 0.0, 0.0]).as_operator()) < 1e-15);
    }

    #[test]
    fn mixed_product_against_index_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let [a, b, cc, d] =
            [0; 4].map(|_| ComplexOperator::new(random_matrix(&mut rng, 2)).unwrap());
        let lhs = tensor_product(&a, &b).mul(&tensor_product(&cc, &d));
        // ((A⊗B)(C⊗D))[(i,k),(j,l)] = Σ_{m,n} A[i,m] B[k,n] C[m,j] D[n,l]
        let mut oracle = linalg::zeros(4, 4);
        for i in 0..2 {
            for k in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        let mut acc = czero();
                        for m in 0..2 {
                            for n in 0..2 {
                                acc +=
                                    a.entry(i, m) * b.entry(k, n) * cc.entry(m, j) * d.entry(n, l);
                            }
                        }
                        oracle[(2 * i + k, 2 * j + l)] = acc;
                    }
                }
            }
        }
        assert!(linalg::max_abs_diff(lhs.matrix(), oracle.as_ref()) < 1e-12);
        let rhs = tensor_product(&a.mul(&cc), &b.mul(&d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ra = random_density(&mut rng, 3);
        let rb = random_density(&mut rng, 2);
        let x = tensor_product(
            ra.as_hermitian().as_operator(),
            rb.as_hermitian().as_operator(),
        );
        let left = partial_trace(&x, &[3, 2], &[0]).unwrap();
        assert!(left.max_abs_diff(ra.as_hermitian().as_operator()) < 1e-14);
        let right = partial_trace(&x, &[3, 2], &[1]).unwrap();
        assert!(right.max_abs_diff(rb.as_hermitian().as_operator()) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = 1.0 / 2f64.sqrt();
        let bell = DensityOperator::pure(&[c(s), czero(), czero(), c(s)]).unwrap();
        for keep in [0, 1] {
            let r = partial_trace(bell.as_hermitian().as_operator(), &[2, 2], &[keep]).unwrap();
            assert!(
                r.max_abs_diff(
                    DensityOperator::maximally_mixed(2)
                        .as_hermitian()
                        .as_operator()
                ) < 1e-15
            );
        }
    }

    #[test]
    fn partial_trace_against_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_density(&mut rng, 4);
        let op = x.as_hermitian().as_operator();
        let r = partial_trace(op, &[2, 2], &[1]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let oracle = op.entry(i, j) + op.entry(2 + i, 2 + j);
                assert!((r.entry(i, j) - oracle).norm() < 1e-15);
            }
        }
        assert!((r.trace() - op.trace()).norm() < 1e-12);
        assert!(partial_trace(op, &[3, 2], &[0]).is_err());
    }

    #[test]
    fn shift_embed_cases() {
        let a = diag(&[1.0, -1.0]);
        let same = shift_embed(&a, 0, 1, 2).unwrap();
        assert!(same.as_operator().max_abs_diff(a.as_operator()) == 0.0);
        let g = shift_embed(&a, 1, 2, 2).unwrap();
        let expected = tensor_product(&ComplexOperator::identity(2), a.as_operator());
        assert!(g.as_operator().max_abs_diff(&expected) == 0.0);
        assert!(matches!(
            shift_embed(&a, 2, 2, 2),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn shift_embed_spectrum_multiplicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(&mut rng, 4); // two qubit window
        let e = shift_embed(&a, 1, 4, 2).unwrap();
        let mut expected: Vec<f64> = a
            .eigenvalues()
            .unwrap()
            .iter()
            .flat_map(|&x| [x; 4])
            .collect();
        expected.sort_by(f64::total_cmp);
        let got = e.eigenvalues().unwrap();
        for (g, x) in got.iter().zip(&expected) {
            assert!((g - x).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_calculus_examples() {
        let z = HermitianOperator::zeros(3);
        let e = matrix_function(&z, MatrixFunction::Exp).unwrap();
        assert!(e.as_operator().max_abs_diff(&ComplexOperator::identity(3)) < 1e-15);
        let r = matrix_function(&diag(&[4.0, 0.0]), MatrixFunction::Power(0.5)).unwrap();
        assert!(
            r.as_operator()
                .max_abs_diff(diag(&[2.0, 0.0]).as_operator())
                < 1e-14
        );
        let s = matrix_function(&diag(&[4.0, 0.0]), MatrixFunction::Power(0.0)).unwrap();
        assert!(
            s.as_operator()
                .max_abs_diff(diag(&[1.0, 0.0]).as_operator())
                < 1e-14
        );
        let inv = matrix_function(&diag(&[4.0, 0.0]), MatrixFunction::Power(-1.0)).unwrap();
        assert!(
            inv.as_operator()
                .max_abs_diff(diag(&[0.25, 0.0]).as_operator())
                < 1e-14
        );
        assert!(matrix_function(&diag(&[1.0, -1.0]), MatrixFunction::Log).is_err());
    }

    #[test]
    fn exp_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 2);
        let e = exp_hermitian(&a).unwrap();
        let mut term = linalg::identity(2);
        let mut sum = linalg::identity(2);
        for k in 1..30 {
            term = linalg::scale(
                linalg::mul(term.as_ref(), a.matrix()).as_ref(),
                c(1.0 / k as f64),
            );
            sum = &sum + &term;
        }
        assert!(linalg::max_abs_diff(e.matrix(), sum.as_ref()) < 1e-10);
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(trace_norm(&diag(&[1.0, -1.0])).unwrap(), 2.0);
        assert_eq!(trace_norm(&HermitianOperator::zeros(2)).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_hermitian(&mut rng, 5);
        // singular values from the eigenvalues of A*A
        let aa =
            HermitianOperator::from_matrix_unchecked(linalg::mul(a.matrix().adjoint(), a.matrix()));
        let oracle: f64 = aa
            .eigenvalues()
            .unwrap()
            .iter()
            .map(|x| x.max(0.0).sqrt())
            .sum();
        assert!((trace_norm(&a).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn support_projection_examples() {
        let id = support_projection(&HermitianOperator::identity(3), None).unwrap();
        assert!(id.max_abs_diff(&ComplexOperator::identity(3)) < 1e-14);
        let psi = DensityOperator::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let p = support_projection(psi.as_hermitian(), None).unwrap();
        assert!(p.max_abs_diff(psi.as_hermitian().as_operator()) < 1e-14);
        let d = support_projection(&diag(&[0.3, 0.0, 0.7]), None).unwrap();
        assert!(d.max_abs_diff(diag(&[1.0, 0.0, 1.0]).as_operator()) < 1e-14);
        assert!(support_projection(&diag(&[1.0, -0.5]), None).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rho = random_density(&mut rng, 3);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-12);
        let zero = DensityOperator::from_probabilities(&[1.0, 0.0]).unwrap();
        let one = DensityOperator::from_probabilities(&[0.0, 1.0]).unwrap();
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
        let (p, q) = (0.2f64, 0.65f64);
        let kl = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
        let got = relative_entropy(
            &DensityOperator::from_probabilities(&[p, 1.0 - p]).unwrap(),
            &DensityOperator::from_probabilities(&[q, 1.0 - q]).unwrap(),
        )
        .unwrap();
        assert!((got - kl).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityOperator::new(diag(&[0.5, 0.6])),
            Err(Error::InvalidTrace { .. })
        ));
        assert!(matches!(
            DensityOperator::new(diag(&[1.5, -0.5])),
            Err(Error::NotPositive { .. })
        ));
        let skew = Mat::from_fn(2, 2, |i, j| if i < j { c(1.0) } else { czero() });
        assert!(matches!(
            HermitianOperator::from_matrix(skew),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn dominance_constant_cases() {
        let a = diag(&[0.5, 0.5, 0.0]);
        let b = diag(&[0.25, 0.25, 0.5]);
        assert!((dominance_constant(&a, &b, None).unwrap().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(dominance_constant(&b, &a, None).unwrap(), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn reconstruction_error_is_small(seed in any::<u64>(), n in 1usize..64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_hermitian(&mut rng, n);
                let spec = a.spectral_decomposition().unwrap();
                let err = linalg::max_abs_diff(spec.reconstruct().as_ref(), a.matrix());
                let norm = a.operator_norm().unwrap().max(1e-300);
                prop_assert!(err <= 1e-10 * norm);
                let sum = spec.projectors().iter().fold(ComplexOperator::zeros(n), |acc, p| acc.add(p));
                prop_assert!(sum.max_abs_diff(&ComplexOperator::identity(n)) < 1e-10);
            }

            #[test]
            fn relative_entropy_nonnegative(seed in any::<u64>(), n in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let phi = random_density(&mut rng, n);
                let omega = random_density(&mut rng, n);
                let s = relative_entropy(&phi, &omega).unwrap();
                prop_assert!(s >= 0.0);
                let dist = trace_norm(&phi.as_hermitian().sub(omega.as_hermitian())).unwrap();
                if dist > 1e-8 {
                    prop_assert!(s > 0.0);
                }
            }

            #[test]
            fn partial_trace_preserves_trace(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = random_density(&mut rng, 12);
                let op = x.as_hermitian().as_operator();
                for keep in [vec![0], vec![1], vec![2], vec![0, 2]] {
                    let r = partial_trace(op, &[2, 3, 2], &keep).unwrap();
                    prop_assert!((r.trace() - op.trace()).norm() < 1e-12);
                }
            }
        }
    }
}
