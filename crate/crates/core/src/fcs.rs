//! Finitely correlated states generated by a triple `(d_A, d_B, E, ρ̂)`.
//!
//! `E: M_{d_A} ⊗ M_{d_B} → M_{d_B}` is unital and completely positive, with
//! the site factor first in every Kronecker product. Densities are obtained
//! in the Schrödinger picture, `φ̂_1 = E*(ρ̂)` and
//! `φ̂_n = (id ⊗ E*)(φ̂_{n−1})` with the auxiliary factor kept last, and
//! `ω̂_n = Tr_B φ̂_n`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};
use crate::maps::{
    choi_and_cp_check, classify_positivity_structure, null_space, positive_representative,
    KrausMap, LinearMap, PerronData, Superoperator,
};
use crate::operator::{
    default_tol, partial_trace, window_length, ComplexOperator, DensityOperator, HermitianOperator,
};
use crate::Cap;

pub const FAITHFUL_TOL: f64 = 1e-10;
const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct GeneratingTriple {
    d_a: usize,
    d_b: usize,
    e: KrausMap,
    e_star: KrausMap,
    rho: DensityOperator,
}

/// Residuals of the defining conditions of a triple.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleValidation {
    pub unitality_residual: f64,
    pub unital: bool,
    pub choi_min_eigenvalue: f64,
    pub completely_positive: bool,
    pub rho_min_eigenvalue: f64,
    pub faithful: bool,
    pub invariance_residual: f64,
    pub invariant: bool,
}

impl TripleValidation {
    pub fn passed(&self) -> bool {
        self.unital && self.completely_positive && self.faithful && self.invariant
    }

    /// First failed check as an error.
    pub fn to_error(&self) -> Option<Error> {
        if !self.unital {
            Some(Error::NotUnital {
                residual: self.unitality_residual,
            })
        } else if !self.completely_positive {
            Some(Error::NotCompletelyPositive {
                min_eigenvalue: self.choi_min_eigenvalue,
            })
        } else if !self.faithful {
            Some(Error::NotFaithful {
                min_eigenvalue: self.rho_min_eigenvalue,
            })
        } else if !self.invariant {
            Some(Error::NotStationary {
                residual: self.invariance_residual,
            })
        } else {
            None
        }
    }
}

impl GeneratingTriple {
    /// Checks shapes only; see [`validate_triple`] for the defining conditions.
    pub fn new(d_a: usize, d_b: usize, e: KrausMap, rho: DensityOperator) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::DimensionMismatch(
                "dimensions must be positive".into(),
            ));
        }
        if e.in_dim() != d_a * d_b || e.out_dim() != d_b {
            return Err(Error::DimensionMismatch(format!(
                "E maps {}x{} to {}x{}, expected {}x{} to {d_b}x{d_b}",
                e.in_dim(),
                e.in_dim(),
                e.out_dim(),
                e.out_dim(),
                d_a * d_b,
                d_a * d_b
            )));
        }
        if rho.dim() != d_b {
            return Err(Error::DimensionMismatch(format!(
                "ρ̂ has dim {}, expected {d_b}",
                rho.dim()
            )));
        }
        let e_star = e.adjoint();
        Ok(Self {
            d_a,
            d_b,
            e,
            e_star,
            rho,
        })
    }

    /// Constructs and validates, failing on the first violated condition.
    pub fn validated(d_a: usize, d_b: usize, e: KrausMap, rho: DensityOperator) -> Result<Self> {
        let t = Self::new(d_a, d_b, e, rho)?;
        match validate_triple(&t)?.to_error() {
            Some(err) => Err(err),
            None => Ok(t),
        }
    }

    /// Uses the stationary density of `E_1` as `ρ̂`, which must be faithful.
    pub fn with_stationary_state(
        d_a: usize,
        d_b: usize,
        e: KrausMap,
    ) -> Result<(Self, StationaryState)> {
        let placeholder = DensityOperator::maximally_mixed(d_b);
        let t = Self::new(d_a, d_b, e, placeholder)?;
        let st = stationary_state(&t.e_one())?;
        let t = Self::validated(d_a, d_b, t.e, st.density.clone())?;
        Ok((t, st))
    }

    /// Product state: `d_B = 1` and `E(a ⊗ 1) = Tr(φ̂₁ a)`.
    pub fn product(phi1: &DensityOperator) -> Result<Self> {
        let spec = phi1.as_hermitian().spectral_decomposition()?;
        let u = spec.eigenvectors();
        let d = phi1.dim();
        let ops = spec
            .eigenvalues()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(k, &l)| Mat::from_fn(1, d, |_, j| u[(j, k)].conj() * l.sqrt()))
            .collect();
        let e = KrausMap::new(d, 1, ops)?;
        Self::new(d, 1, e, DensityOperator::maximally_mixed(1))
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn e(&self) -> &KrausMap {
        &self.e
    }

    pub fn e_star(&self) -> &KrausMap {
        &self.e_star
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    /// `b ↦ E(1 ⊗ b)` as a Kraus map on `M_{d_B}`.
    pub fn e_one(&self) -> KrausMap {
        let mut ops = Vec::with_capacity(self.e.ops().len() * self.d_a);
        for k in self.e.ops() {
            for alpha in 0..self.d_a {
                let cols = k
                    .as_ref()
                    .submatrix(0, alpha * self.d_b, self.d_b, self.d_b);
                ops.push(cols.to_owned());
            }
        }
        KrausMap::new(self.d_b, self.d_b, ops).expect("shapes follow from the triple")
    }

    /// `b ↦ E^{(m)}(X ⊗ b)` for `X` on `m` sites, with `E^{(m)}` applying `E`
    /// site by site from the right.
    pub fn block_transfer_map(&self, x: &HermitianOperator) -> Result<Superoperator> {
        self.block_transfer_map_complex(x.as_operator())
    }

    pub fn block_transfer_map_complex(&self, x: &ComplexOperator) -> Result<Superoperator> {
        let m = window_length(x.dim(), self.d_a)?;
        let db = self.d_b;
        let mut mat = linalg::zeros(db * db, db * db);
        for k in 0..db {
            for l in 0..db {
                let mut e = linalg::zeros(db, db);
                e[(k, l)] = c(1.0);
                let y = self.contract(linalg::kron(x.matrix(), e.as_ref()), m)?;
                for a in 0..db {
                    for b in 0..db {
                        mat[(a * db + b, k * db + l)] = y[(a, b)];
                    }
                }
            }
        }
        Superoperator::new(db, db, mat)
    }

    /// `E^{(m)}(Y)` for `Y` on `A^m ⊗ B`.
    fn contract(&self, mut y: CMat, m: usize) -> Result<CMat> {
        for j in (0..m).rev() {
            y = self
                .e
                .apply_to_last_factor(self.d_a.pow(j as u32), y.as_ref())?;
        }
        Ok(y)
    }

    /// `E_a` for a one-site operator.
    pub fn transfer_map(&self, a: &HermitianOperator) -> Result<Superoperator> {
        if a.dim() != self.d_a {
            return Err(Error::DimensionMismatch(format!(
                "one-site operator of dim {}",
                a.dim()
            )));
        }
        self.block_transfer_map(a)
    }

    /// `ρ(E^{(m)}_X(1)) = Tr(ω̂_m X)`.
    pub fn expectation(&self, x: &HermitianOperator) -> Result<f64> {
        let m = window_length(x.dim(), self.d_a)?;
        let y = self.contract(
            linalg::kron(x.matrix(), linalg::identity(self.d_b).as_ref()),
            m,
        )?;
        Ok(linalg::trace_of_product(self.rho.matrix(), y.as_ref()).re)
    }

    /// `ω̂_n`. The cap bounds both `d_A^n` and the auxiliary intermediate
    /// `d_A^{n−1} d_B`.
    pub fn local_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "chain length must be positive".into(),
            ));
        }
        cap.check_power(self.d_a, n)?;
        cap.check(self.d_a.pow(n as u32 - 1) * self.d_b)?;
        let last = self.trace_out_auxiliary();
        let mut phi = self.rho.matrix().to_owned();
        for j in 0..n - 1 {
            phi = self
                .e_star
                .apply_to_last_factor(self.d_a.pow(j as u32), phi.as_ref())?;
        }
        let omega = last.apply_to_last_factor(self.d_a.pow(n as u32 - 1), phi.as_ref())?;
        Ok(DensityOperator::from_trusted(
            HermitianOperator::from_matrix_unchecked(omega),
        ))
    }

    /// `φ̂_n` on `A^n ⊗ B`.
    pub fn auxiliary_density(&self, n: usize, cap: Cap) -> Result<DensityOperator> {
        cap.check(self.d_a.pow(n as u32) * self.d_b)?;
        let mut phi = self.rho.matrix().to_owned();
        for j in 0..n {
            phi = self
                .e_star
                .apply_to_last_factor(self.d_a.pow(j as u32), phi.as_ref())?;
        }
        Ok(DensityOperator::from_trusted(
            HermitianOperator::from_matrix_unchecked(phi),
        ))
    }

    /// `Tr_B ∘ E*` as a Kraus map `M_{d_B} → M_{d_A}`.
    fn trace_out_auxiliary(&self) -> KrausMap {
        let (da, db) = (self.d_a, self.d_b);
        let mut ops = Vec::with_capacity(self.e_star.ops().len() * db);
        for k in self.e_star.ops() {
            for b in 0..db {
                ops.push(Mat::from_fn(da, db, |alpha, j| k[(alpha * db + b, j)]));
            }
        }
        KrausMap::new(db, da, ops).expect("shapes follow from the triple")
    }
}

pub fn validate_triple(t: &GeneratingTriple) -> Result<TripleValidation> {
    let unitality_residual = t.e.unitality_residual();
    let unital = unitality_residual <= 1e-9 * t.d_b as f64;
    let (choi, completely_positive) = choi_and_cp_check(&t.e)?;
    let rho_min_eigenvalue = t.rho.as_hermitian().min_eigenvalue()?;
    let faithful = rho_min_eigenvalue > FAITHFUL_TOL;
    let phi1 = ComplexOperator::new(t.e_star.apply(t.rho.matrix())?)?;
    let marginal = partial_trace(&phi1, &[t.d_a, t.d_b], &[1])?;
    let invariance_residual = marginal.max_abs_diff(t.rho.as_hermitian().as_operator());
    let invariant = invariance_residual <= default_tol(t.rho.matrix()).max(1e-12);
    Ok(TripleValidation {
        unitality_residual,
        unital,
        choi_min_eigenvalue: choi.min_eigenvalue,
        completely_positive,
        rho_min_eigenvalue,
        faithful,
        invariance_residual,
        invariant,
    })
}

pub fn block_transfer_map(t: &GeneratingTriple, x: &HermitianOperator) -> Result<Superoperator> {
    t.block_transfer_map(x)
}

pub fn local_density(t: &GeneratingTriple, n: usize, cap: Cap) -> Result<DensityOperator> {
    t.local_density(n, cap)
}

/// Hidden Markov data: transition matrix `T`, stationary `r` and site
/// densities `θ_xy` for every allowed transition.
#[derive(Clone, Debug)]
pub struct HiddenMarkovSpec {
    d_a: usize,
    t: Vec<Vec<f64>>,
    r: Vec<f64>,
    theta: Vec<Vec<Option<DensityOperator>>>,
}

impl HiddenMarkovSpec {
    /// `theta[x][y]` must be present whenever `T_xy > 0`. When `r` is `None`
    /// the stationary distribution is computed.
    pub fn new(
        t: Vec<Vec<f64>>,
        r: Option<Vec<f64>>,
        theta: Vec<Vec<Option<DensityOperator>>>,
    ) -> Result<Self> {
        let n = t.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty state space".into()));
        }
        for (x, row) in t.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            if row.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "row {x} has a negative entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { row: x, sum });
            }
        }
        let r = match r {
            Some(r) => r,
            None => stationary_distribution(&t)?,
        };
        if r.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "r has {} entries, T has {n} rows",
                r.len()
            )));
        }
        if let Some(&bad) = r.iter().find(|&&p| p.is_nan() || p <= 0.0) {
            return Err(Error::NotFaithful {
                min_eigenvalue: bad,
            });
        }
        let residual = (0..n)
            .map(|y| ((0..n).map(|x| r[x] * t[x][y]).sum::<f64>() - r[y]).abs())
            .fold((r.iter().sum::<f64>() - 1.0).abs(), f64::max);
        if residual > STOCHASTIC_TOL {
            return Err(Error::NotStationary { residual });
        }
        if theta.len() != n || theta.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(
                "θ must be indexed by pairs of states".into(),
            ));
        }
        let mut d_a = None;
        for x in 0..n {
            for y in 0..n {
                match (&theta[x][y], t[x][y] > 0.0) {
                    (Some(th), _) => {
                        if *d_a.get_or_insert(th.dim()) != th.dim() {
                            return Err(Error::DimensionMismatch(format!(
                                "θ[{x}][{y}] has dim {}",
                                th.dim()
                            )));
                        }
                    }
                    (None, true) => {
                        return Err(Error::InvalidArgument(format!(
                            "θ[{x}][{y}] missing for T > 0"
                        )));
                    }
                    (None, false) => {}
                }
            }
        }
        let d_a = d_a.ok_or_else(|| Error::InvalidArgument("no site densities".into()))?;
        Ok(Self { d_a, t, r, theta })
    }

    /// Same site density on every transition.
    pub fn uniform_theta(
        t: Vec<Vec<f64>>,
        r: Option<Vec<f64>>,
        theta: &DensityOperator,
    ) -> Result<Self> {
        let n = t.len();
        let th = (0..n)
            .map(|_| (0..n).map(|_| Some(theta.clone())).collect())
            .collect();
        Self::new(t, r, th)
    }

    /// Site density depending only on the first index.
    pub fn emitting(
        t: Vec<Vec<f64>>,
        r: Option<Vec<f64>>,
        by_state: &[DensityOperator],
    ) -> Result<Self> {
        let n = t.len();
        if by_state.len() != n {
            return Err(Error::DimensionMismatch(
                "one density per state required".into(),
            ));
        }
        let th = (0..n)
            .map(|x| (0..n).map(|_| Some(by_state[x].clone())).collect())
            .collect();
        Self::new(t, r, th)
    }

    /// Classical embedding `θ_xy = δ̂_x` on `d_A = |X|`.
    pub fn classical(t: Vec<Vec<f64>>, r: Option<Vec<f64>>) -> Result<Self> {
        let n = t.len();
        let deltas: Vec<DensityOperator> = (0..n)
            .map(|x| {
                let mut p = vec![0.0; n];
                p[x] = 1.0;
                DensityOperator::from_probabilities(&p)
            })
            .collect::<Result<_>>()?;
        Self::emitting(t, r, &deltas)
    }

    pub fn state_count(&self) -> usize {
        self.t.len()
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.t
    }

    pub fn stationary(&self) -> &[f64] {
        &self.r
    }

    pub fn theta(&self, x: usize, y: usize) -> Option<&DensityOperator> {
        self.theta[x][y].as_ref()
    }

    /// `Θ_x = Σ_y T_xy θ_xy`.
    pub fn emission(&self, x: usize) -> DensityOperator {
        let mut acc = HermitianOperator::zeros(self.d_a);
        for y in 0..self.state_count() {
            if let Some(th) = &self.theta[x][y] {
                acc = acc.add(&th.as_hermitian().scaled(self.t[x][y]));
            }
        }
        DensityOperator::from_trusted(acc)
    }

    pub fn classical_map(&self) -> KrausMap {
        KrausMap::from_stochastic(&self.t).expect("validated transition matrix")
    }
}

/// Stationary distribution of a row-stochastic matrix.
pub fn stationary_distribution(t: &[Vec<f64>]) -> Result<Vec<f64>> {
    let map = KrausMap::from_stochastic(t)?;
    let st = stationary_state(&map)?;
    Ok((0..t.len())
        .map(|i| st.density.matrix()[(i, i)].re)
        .collect())
}

/// Triple with the auxiliary algebra of functions on the hidden states
/// realized as diagonal `|X| × |X|` matrices. The Kraus operators of `E*` are
/// `√(T_xy λ_k) (v_k ⊗ e_y) e_x†` for eigenpairs `(λ_k, v_k)` of `θ_xy`.
pub fn from_hidden_markov(spec: &HiddenMarkovSpec) -> Result<GeneratingTriple> {
    let (n, da) = (spec.state_count(), spec.d_a);
    let mut star_ops = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let p = spec.t[x][y];
            if p <= 0.0 {
                continue;
            }
            let th = spec.theta[x][y].as_ref().expect("validated spec");
            let sd = th.as_hermitian().spectral_decomposition()?;
            let u = sd.eigenvectors();
            for (k, &lam) in sd.eigenvalues().iter().enumerate() {
                if lam <= 0.0 {
                    continue;
                }
                let w = (p * lam).sqrt();
                star_ops.push(Mat::from_fn(da * n, n, |row, col| {
                    if col == x && row % n == y {
                        u[(row / n, k)] * w
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }));
            }
        }
    }
    let e_star = KrausMap::new(n, da * n, star_ops)?;
    let rho = DensityOperator::from_probabilities(&spec.r)?;
    GeneratingTriple::new(da, n, e_star.adjoint(), rho)
}

#[derive(Clone, Debug)]
pub struct ErgodicityReport {
    pub ergodic: bool,
    pub strongly_mixing: bool,
    pub perron: PerronData,
}

/// Ergodic iff `E_1` is irreducible, strongly mixing iff it is primitive.
pub fn classify_ergodicity(t: &GeneratingTriple) -> Result<ErgodicityReport> {
    let s = classify_positivity_structure(&t.e_one())?;
    Ok(ErgodicityReport {
        ergodic: s.irreducible,
        strongly_mixing: s.primitive,
        perron: s.perron,
    })
}

#[derive(Clone, Debug)]
pub struct StationaryState {
    pub density: DensityOperator,
    /// Dimension of the fixed space of the adjoint.
    pub multiplicity: usize,
    pub warning: Option<String>,
}

/// A fixed density of `Φ*` for a unital positive `Φ`. With a degenerate
/// fixed space the spectral projection of `1/d` onto it is returned.
pub fn stationary_state(map: &impl LinearMap) -> Result<StationaryState> {
    let s = map.to_superoperator();
    if !s.is_square() {
        return Err(Error::DimensionMismatch(
            "stationary state of a non-square map".into(),
        ));
    }
    let d = s.in_dim();
    let n2 = d * d;
    let shifted = |m: faer::MatRef<'_, C64>| {
        Mat::from_fn(n2, n2, |i, j| {
            if i == j {
                m[(i, j)] - c(1.0)
            } else {
                m[(i, j)]
            }
        })
    };
    let adj = s.adjoint();
    let (g, v) = null_space(shifted(adj.matrix()).as_ref(), 1e-7)?;
    if g == 0 {
        return Err(Error::Numerical(
            "adjoint has no fixed point; map is not unital".into(),
        ));
    }
    let raw: Vec<C64> = if g == 1 {
        (0..n2).map(|i| v[(i, 0)]).collect()
    } else {
        let (gw, w) = null_space(shifted(s.matrix()).as_ref(), 1e-7)?;
        if gw != g {
            return Err(Error::Numerical(format!(
                "fixed spaces of dimensions {g} and {gw}"
            )));
        }
        // P x = V (W* V)^{-1} W* x with x = vec(1/d)
        let x = Mat::from_fn(n2, 1, |i, _| {
            if i / d == i % d {
                c(1.0 / d as f64)
            } else {
                c(0.0)
            }
        });
        let wv = linalg::mul(w.adjoint(), v.as_ref());
        let (sv, uu, vv) = linalg::svd(wv.as_ref())?;
        let smax = sv.first().copied().unwrap_or(0.0);
        let pinv = Mat::from_fn(g, g, |i, j| {
            (0..sv.len())
                .filter(|&k| sv[k] > 1e-12 * smax)
                .map(|k| vv[(i, k)] * uu[(j, k)].conj() / sv[k])
                .sum::<C64>()
        });
        let coeff = linalg::mul(pinv.as_ref(), linalg::mul(w.adjoint(), x.as_ref()).as_ref());
        let px = linalg::mul(v.as_ref(), coeff.as_ref());
        (0..n2).map(|i| px[(i, 0)]).collect()
    };
    let h = positive_representative(&raw, d);
    let tr = h.trace();
    if tr.abs() < 1e-300 {
        return Err(Error::Numerical("fixed point has zero trace".into()));
    }
    let h = h.scaled(1.0 / tr);
    let min = h.min_eigenvalue()?;
    if min < -1e-8 {
        return Err(Error::Numerical(format!(
            "fixed point is not positive (min eigenvalue {min:.3e})"
        )));
    }
    let warning =
        (g > 1).then(|| format!("fixed space has dimension {g}; returned the projection of 1/d"));
    Ok(StationaryState {
        density: DensityOperator::from_trusted(h),
        multiplicity: g,
        warning,
    })
}
