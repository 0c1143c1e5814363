//! Completely positive maps between matrix algebras.
//!
//! A map `M_in -> M_out` is held either as a Kraus list or as its matrix
//! on row-major vectorizations, `vec(Φ(X)) = S vec(X)`, so that
//! `vec(A X B) = (A ⊗ Bᵀ) vec(X)` and the Kraus superoperator is
//! `Σ A_i ⊗ conj(A_i)`. With this convention the Hilbert-Schmidt adjoint of
//! a map is the conjugate transpose of its superoperator.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::operator::{default_tol, dominance_constant, ComplexOperator, HermitianOperator};

/// Relative threshold for a strictly positive eigenvector.
pub const STRICT_POS_TOL: f64 = 1e-8;
/// Relative modulus window for peripheral eigenvalues.
pub const PERIPHERAL_TOL: f64 = 1e-8;
/// Relative window for counting eigenvalues at the spectral radius.
pub const EIG_CLUSTER_TOL: f64 = 1e-7;

/// Anything with a matrix representation on vectorized operators.
pub trait LinearMap {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn to_superoperator(&self) -> Superoperator;
}

/// `X ↦ Σ A_i X A_i*` with `A_i` of shape `out_dim × in_dim`.
#[derive(Clone, Debug)]
pub struct KrausMap {
    in_dim: usize,
    out_dim: usize,
    ops: Vec<CMat>,
}

impl KrausMap {
    pub fn new(in_dim: usize, out_dim: usize, ops: Vec<CMat>) -> Result<Self> {
        for (i, a) in ops.iter().enumerate() {
            if a.nrows() != out_dim || a.ncols() != in_dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {out_dim}x{in_dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        Ok(Self {
            in_dim,
            out_dim,
            ops,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            ops: vec![linalg::identity(dim)],
        }
    }

    /// Classical transition map on the diagonal algebra:
    /// `b ↦ Σ_{x,y} T_xy b_yy |x⟩⟨x|`, Kraus operators `√T_xy |x⟩⟨y|`.
    pub fn from_stochastic(t: &[Vec<f64>]) -> Result<Self> {
        let n = t.len();
        let mut ops = Vec::new();
        for (x, row) in t.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (y, &p) in row.iter().enumerate() {
                if p < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "negative transition weight at ({x},{y})"
                    )));
                }
                if p > 0.0 {
                    let mut k = linalg::zeros(n, n);
                    k[(x, y)] = c(p.sqrt());
                    ops.push(k);
                }
            }
        }
        Self::new(n, n, ops)
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn apply(&self, x: MatRef<'_, C64>) -> Result<CMat> {
        if x.nrows() != self.in_dim || x.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "map input dimension {}, operator {}x{}",
                self.in_dim,
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = linalg::zeros(self.out_dim, self.out_dim);
        let mut tmp = linalg::zeros(self.out_dim, self.in_dim);
        for a in &self.ops {
            matmul(
                tmp.as_mut(),
                Accum::Replace,
                a.as_ref(),
                x,
                c(1.0),
                Par::Seq,
            );
            matmul(
                out.as_mut(),
                Accum::Add,
                tmp.as_ref(),
                a.adjoint(),
                c(1.0),
                Par::Seq,
            );
        }
        Ok(out)
    }

    /// Hilbert-Schmidt adjoint, Kraus operators `A_i*`.
    pub fn adjoint(&self) -> Self {
        Self {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            ops: self.ops.iter().map(|a| a.adjoint().to_owned()).collect(),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &KrausMap) -> Result<Self> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}->{} after {}->{}",
                self.in_dim, self.out_dim, inner.in_dim, inner.out_dim
            )));
        }
        let mut ops = Vec::with_capacity(self.ops.len() * inner.ops.len());
        for a in &self.ops {
            for b in &inner.ops {
                ops.push(linalg::mul(a.as_ref(), b.as_ref()));
            }
        }
        Self::new(inner.in_dim, self.out_dim, ops)
    }

    /// `id_{left} ⊗ self` applied to an operator on `C^left ⊗ C^in`, without
    /// forming the Kronecker products.
    pub fn apply_to_last_factor(&self, left: usize, y: MatRef<'_, C64>) -> Result<CMat> {
        let (din, dout) = (self.in_dim, self.out_dim);
        if y.nrows() != left * din || y.ncols() != left * din {
            return Err(Error::DimensionMismatch(format!(
                "operator of dim {} does not factor as {left}*{din}",
                y.nrows()
            )));
        }
        let mut out = linalg::zeros(left * dout, left * dout);
        let mut w = linalg::zeros(left * din, left * dout);
        for a in &self.ops {
            // w = y (I ⊗ A*)
            for b in 0..left {
                matmul(
                    w.as_mut().submatrix_mut(0, b * dout, left * din, dout),
                    Accum::Replace,
                    y.submatrix(0, b * din, left * din, din),
                    a.adjoint(),
                    c(1.0),
                    Par::Seq,
                );
            }
            // out += (I ⊗ A) w
            for r in 0..left {
                matmul(
                    out.as_mut().submatrix_mut(r * dout, 0, dout, left * dout),
                    Accum::Add,
                    a.as_ref(),
                    w.as_ref().submatrix(r * din, 0, din, left * dout),
                    c(1.0),
                    Par::Seq,
                );
            }
        }
        Ok(out)
    }

    /// `Φ(1)`.
    pub fn image_of_identity(&self) -> CMat {
        let mut out = linalg::zeros(self.out_dim, self.out_dim);
        for a in &self.ops {
            matmul(
                out.as_mut(),
                Accum::Add,
                a.as_ref(),
                a.adjoint(),
                c(1.0),
                Par::Seq,
            );
        }
        out
    }

    /// `max |Φ(1) − 1|`.
    pub fn unitality_residual(&self) -> f64 {
        let id = linalg::identity(self.out_dim);
        linalg::max_abs_diff(self.image_of_identity().as_ref(), id.as_ref())
    }

    /// `max |Σ A_i* A_i − 1|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        self.adjoint().unitality_residual()
    }
}

impl LinearMap for KrausMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn to_superoperator(&self) -> Superoperator {
        let mut mat = linalg::zeros(self.out_dim * self.out_dim, self.in_dim * self.in_dim);
        for a in &self.ops {
            let conj = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj());
            mat = &mat + linalg::kron(a.as_ref(), conj.as_ref());
        }
        Superoperator {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            mat,
        }
    }
}

/// Matrix of a linear map on row-major vectorizations.
#[derive(Clone, Debug)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    mat: CMat,
}

impl Superoperator {
    pub fn new(in_dim: usize, out_dim: usize, mat: CMat) -> Result<Self> {
        if mat.nrows() != out_dim * out_dim || mat.ncols() != in_dim * in_dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator is {}x{}, expected {}x{}",
                mat.nrows(),
                mat.ncols(),
                out_dim * out_dim,
                in_dim * in_dim
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            mat,
        })
    }

    /// Tabulates an arbitrary linear map on matrix units.
    pub fn from_fn(in_dim: usize, out_dim: usize, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        let mut mat = linalg::zeros(out_dim * out_dim, in_dim * in_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let mut e = linalg::zeros(in_dim, in_dim);
                e[(i, j)] = c(1.0);
                let y = f(&e);
                if y.nrows() != out_dim || y.ncols() != out_dim {
                    return Err(Error::DimensionMismatch("map returned wrong shape".into()));
                }
                for a in 0..out_dim {
                    for b in 0..out_dim {
                        mat[(a * out_dim + b, i * in_dim + j)] = y[(a, b)];
                    }
                }
            }
        }
        Ok(Self {
            in_dim,
            out_dim,
            mat,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            mat: linalg::identity(dim * dim),
        }
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn apply(&self, x: MatRef<'_, C64>) -> Result<CMat> {
        if x.nrows() != self.in_dim || x.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "map input dimension {}, operator {}x{}",
                self.in_dim,
                x.nrows(),
                x.ncols()
            )));
        }
        let v = linalg::vectorize(x);
        let col = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        let y = linalg::mul(self.mat.as_ref(), col.as_ref());
        let flat: Vec<C64> = (0..y.nrows()).map(|i| y[(i, 0)]).collect();
        Ok(linalg::unvectorize(&flat, self.out_dim, self.out_dim))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            mat: self.mat.adjoint().to_owned(),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Superoperator) -> Result<Self> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch("incompatible composition".into()));
        }
        Ok(Self {
            in_dim: inner.in_dim,
            out_dim: self.out_dim,
            mat: linalg::mul(self.mat.as_ref(), inner.mat.as_ref()),
        })
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            mat: linalg::scale(self.mat.as_ref(), c(k)),
        }
    }

    pub fn is_square(&self) -> bool {
        self.in_dim == self.out_dim
    }
}

impl LinearMap for Superoperator {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn to_superoperator(&self) -> Superoperator {
        self.clone()
    }
}

/// `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, of dimension `in_dim · out_dim`.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: HermitianOperator,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
}

pub fn choi_matrix(map: &impl LinearMap) -> Result<ChoiMatrix> {
    let s = map.to_superoperator();
    let (din, dout) = (s.in_dim, s.out_dim);
    let m = s.matrix();
    let raw = Mat::from_fn(din * dout, din * dout, |r, col| {
        let (i, a) = (r / dout, r % dout);
        let (j, b) = (col / dout, col % dout);
        m[(a * dout + b, i * din + j)]
    });
    let hermitian_defect = linalg::hermitian_defect(raw.as_ref());
    let matrix = HermitianOperator::from_matrix_unchecked(raw);
    let min_eigenvalue = matrix.min_eigenvalue()?;
    Ok(ChoiMatrix {
        in_dim: din,
        out_dim: dout,
        matrix,
        hermitian_defect,
        min_eigenvalue,
    })
}

/// Choi matrix together with the verdict `min eigenvalue ≥ −psd_tol`.
pub fn choi_and_cp_check(map: &impl LinearMap) -> Result<(ChoiMatrix, bool)> {
    let choi = choi_matrix(map)?;
    let tol = default_tol(choi.matrix.matrix());
    let cp = choi.hermitian_defect <= tol && choi.min_eigenvalue >= -tol;
    Ok((choi, cp))
}

pub fn apply_map(map: &KrausMap, x: &ComplexOperator) -> Result<ComplexOperator> {
    ComplexOperator::new(map.apply(x.matrix())?)
}

pub fn adjoint_map(map: &KrausMap) -> KrausMap {
    map.adjoint()
}

/// Eigenvalues ordered by decreasing modulus.
#[derive(Clone, Debug)]
pub struct SuperoperatorSpectrum {
    pub eigenvalues: Vec<C64>,
    pub spectral_radius: f64,
}

pub fn superoperator_spectrum(map: &impl LinearMap) -> Result<SuperoperatorSpectrum> {
    let s = map.to_superoperator();
    if !s.is_square() {
        return Err(Error::DimensionMismatch(
            "spectrum of a map between different algebras".into(),
        ));
    }
    let mut eigenvalues = linalg::eigvals(s.matrix())?;
    eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let spectral_radius = eigenvalues.first().map_or(0.0, |z| z.norm());
    Ok(SuperoperatorSpectrum {
        eigenvalues,
        spectral_radius,
    })
}

/// Spectral radius of a square map.
pub fn spectral_radius(map: &impl LinearMap) -> Result<f64> {
    Ok(superoperator_spectrum(map)?.spectral_radius)
}

#[derive(Clone, Debug)]
pub struct PerronData {
    pub spectral_radius: f64,
    /// Eigenvector of the map at `r`, normalized by `Tr(ρ̂ z) = 1` when possible.
    pub right_vector: HermitianOperator,
    /// Unit-trace eigenvector of the adjoint at `r`.
    pub left_density: HermitianOperator,
    pub geometric_multiplicity: usize,
    pub adjoint_geometric_multiplicity: usize,
    /// Eigenvalues within `EIG_CLUSTER_TOL · r` of `r`.
    pub cluster_size: usize,
    pub peripheral_eigenvalues: Vec<C64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PositivityStructure {
    pub irreducible: bool,
    pub primitive: bool,
    pub perron: PerronData,
}

/// Singular values and the right singular vectors spanning the numerical
/// null space of `m`.
pub(crate) fn null_space(m: MatRef<'_, C64>, tol: f64) -> Result<(usize, CMat)> {
    let (s, _, v) = linalg::svd(m)?;
    let nullity = s.iter().filter(|&&x| x <= tol).count() + m.ncols().saturating_sub(s.len());
    let k = nullity.max(1);
    let n = v.ncols();
    let basis = Mat::from_fn(v.nrows(), k, |i, j| v[(i, n - k + j)]);
    Ok((nullity, basis))
}

/// Rotates the phase of an eigenvector so its trace is real and positive and
/// returns its Hermitian part.
pub(crate) fn positive_representative(v: &[C64], dim: usize) -> HermitianOperator {
    let m = linalg::unvectorize(v, dim, dim);
    let tr = linalg::trace(m.as_ref());
    let phase = if tr.norm() > 1e-300 {
        tr.conj() / tr.norm()
    } else {
        // fall back on the largest diagonal entry
        let (mut best, mut z) = (0.0, c(1.0));
        for i in 0..dim {
            if m[(i, i)].norm() > best {
                best = m[(i, i)].norm();
                z = m[(i, i)].conj() / best;
            }
        }
        z
    };
    HermitianOperator::from_matrix_unchecked(linalg::scale(m.as_ref(), phase))
}

pub(crate) fn is_strictly_positive(h: &HermitianOperator) -> Result<bool> {
    let ev = h.eigenvalues()?;
    let max = ev.last().copied().unwrap_or(0.0);
    let min = ev.first().copied().unwrap_or(0.0);
    Ok(max > 0.0 && min > STRICT_POS_TOL * max)
}

/// Decides irreducibility and primitivity of a positive map from its
/// spectral data: the spectral radius must be geometrically simple for the
/// map and its adjoint with strictly positive eigenvectors, and primitivity
/// additionally requires a trivial peripheral spectrum.
pub fn classify_positivity_structure(map: &impl LinearMap) -> Result<PositivityStructure> {
    let s = map.to_superoperator();
    if !s.is_square() {
        return Err(Error::DimensionMismatch(
            "classification needs a square map".into(),
        ));
    }
    let d = s.in_dim;
    let spec = superoperator_spectrum(&s)?;
    let r = spec.spectral_radius;
    let scale = linalg::max_abs(s.matrix()).max(1e-300);
    if r <= 1e-12 * scale {
        return Err(Error::ZeroMap);
    }
    let mut warnings = Vec::new();
    if let Some(top) = spec
        .eigenvalues
        .iter()
        .find(|z| (z.norm() - r).abs() <= PERIPHERAL_TOL * r)
    {
        if (top.re < 0.0 || top.im.abs() > EIG_CLUSTER_TOL * r)
            && !spec
                .eigenvalues
                .iter()
                .any(|z| (*z - c(r)).norm() <= EIG_CLUSTER_TOL * r)
        {
            warnings.push("spectral radius is not an eigenvalue; map is not positive".into());
        }
    }
    let cluster_size = spec
        .eigenvalues
        .iter()
        .filter(|z| (**z - c(r)).norm() <= EIG_CLUSTER_TOL * r)
        .count();
    let peripheral_eigenvalues: Vec<C64> = spec
        .eigenvalues
        .iter()
        .copied()
        .filter(|z| (z.norm() - r).abs() <= PERIPHERAL_TOL * r)
        .collect();

    let n2 = d * d;
    let shift = |m: MatRef<'_, C64>| {
        Mat::from_fn(
            n2,
            n2,
            |i, j| if i == j { m[(i, j)] - c(r) } else { m[(i, j)] },
        )
    };
    let null_tol = EIG_CLUSTER_TOL * r;
    let (gm_right, right_basis) = null_space(shift(s.matrix()).as_ref(), null_tol)?;
    let adj = s.adjoint();
    let (gm_left, left_basis) = null_space(shift(adj.matrix()).as_ref(), null_tol)?;
    if gm_right != cluster_size || gm_left != cluster_size {
        warnings.push(format!(
            "geometric multiplicity {gm_right}/{gm_left} differs from eigenvalue cluster size {cluster_size} at r"
        ));
    }

    let col = |b: &CMat| -> Vec<C64> { (0..b.nrows()).map(|i| b[(i, 0)]).collect() };
    let mut right = positive_representative(&col(&right_basis), d);
    let mut left = positive_representative(&col(&left_basis), d);
    let tr = left.trace();
    if tr.abs() > 1e-300 {
        left = left.scaled(1.0 / tr);
    }
    let pairing = left.trace_with(right.as_operator()).re;
    if pairing.abs() > 1e-12 {
        right = right.scaled(1.0 / pairing);
    } else {
        let m = right.as_operator().max_abs_entry();
        if m > 0.0 {
            right = right.scaled(1.0 / m);
        }
    }
    let irreducible = gm_right == 1
        && gm_left == 1
        && is_strictly_positive(&right)?
        && is_strictly_positive(&left)?;
    let primitive = irreducible && peripheral_eigenvalues.len() == 1;
    Ok(PositivityStructure {
        irreducible,
        primitive,
        perron: PerronData {
            spectral_radius: r,
            right_vector: right,
            left_density: left,
            geometric_multiplicity: gm_right,
            adjoint_geometric_multiplicity: gm_left,
            cluster_size,
            peripheral_eigenvalues,
            warnings,
        },
    })
}

/// Minimal `β ≥ 0` with `Φ ≤_CP β Ψ`, i.e. `Choi(βΨ − Φ) ≥ 0`, or `None`
/// when the support of `Choi(Φ)` is not contained in that of `Choi(Ψ)`.
pub fn cp_order_gap(phi: &impl LinearMap, psi: &impl LinearMap) -> Result<Option<f64>> {
    if phi.in_dim() != psi.in_dim() || phi.out_dim() != psi.out_dim() {
        return Err(Error::DimensionMismatch(
            "cp_order_gap needs maps with equal shapes".into(),
        ));
    }
    let (cphi, ok_phi) = choi_and_cp_check(phi)?;
    if !ok_phi {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: cphi.min_eigenvalue,
        });
    }
    let (cpsi, ok_psi) = choi_and_cp_check(psi)?;
    if !ok_psi {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: cpsi.min_eigenvalue,
        });
    }
    dominance_constant(&cphi.matrix, &cpsi.matrix, None)
}

/// Finite-n values `(1/n) log φ(Φⁿ(x))` and the limit `log r(Φ)`.
#[derive(Clone, Debug)]
pub struct RateCurve {
    pub values: Vec<f64>,
    pub limit: f64,
    /// `|values[n_max − 1] − limit|`.
    pub deviation: f64,
}

/// Iterates `Φ` on `x` with renormalization at every step so that large
/// `n` neither overflows nor underflows.
pub fn asymptotic_rate_curve(
    map: &impl LinearMap,
    functional: &HermitianOperator,
    x: &HermitianOperator,
    n_max: usize,
) -> Result<RateCurve> {
    let s = map.to_superoperator();
    if !s.is_square() || functional.dim() != s.in_dim || x.dim() != s.in_dim {
        return Err(Error::DimensionMismatch(
            "rate curve inputs have inconsistent dimensions".into(),
        ));
    }
    if functional.as_operator().max_abs_entry() == 0.0 {
        return Err(Error::InvalidArgument("zero functional".into()));
    }
    let fmin = functional.min_eigenvalue()?;
    if fmin < -default_tol(functional.matrix()) {
        return Err(Error::NotPositive {
            min_eigenvalue: fmin,
            tol: default_tol(functional.matrix()),
        });
    }
    if !is_strictly_positive(x)? {
        return Err(Error::NotStrictlyPositive {
            min_eigenvalue: x.min_eigenvalue()?,
        });
    }
    let r = spectral_radius(&s)?;
    if r == 0.0 {
        return Err(Error::ZeroMap);
    }
    let mut y = x.matrix().to_owned();
    let mut log_scale = 0.0;
    let mut values = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        y = s.apply(y.as_ref())?;
        let m = linalg::max_abs(y.as_ref());
        if m == 0.0 {
            values.push(f64::NEG_INFINITY);
            continue;
        }
        y = linalg::scale(y.as_ref(), c(1.0 / m));
        log_scale += m.ln();
        let pairing = linalg::trace_of_product(functional.matrix(), y.as_ref()).re;
        values.push((log_scale + pairing.ln()) / n as f64);
    }
    let limit = r.ln();
    let deviation = values.last().map_or(f64::NAN, |v| (v - limit).abs());
    Ok(RateCurve {
        values,
        limit,
        deviation,
    })
}
