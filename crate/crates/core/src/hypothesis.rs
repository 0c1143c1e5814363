//! Binary discrimination of two states on a chain: minimum error
//! probabilities, quasi-traces, Chernoff curves and their envelopes.

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcs::HiddenMarkovSpec;
use crate::ldp::{golden_max, local_hamiltonian, log_sum_exp, Interaction};
use crate::linalg::{self, c};
use crate::operator::{default_tol, ComplexOperator, DensityOperator, HermitianOperator};
use crate::source::StateSource;
use crate::Cap;

/// Orthogonality threshold for `Tr θ_{xw} θ_{x'w'}`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// A logarithm that may be `−∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Exponent {
    Finite(f64),
    MinusInfinity,
}

impl Exponent {
    pub fn from_log(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            Exponent::MinusInfinity
        } else {
            Exponent::Finite(v)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(v) => v,
            Exponent::MinusInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Exponent::Finite(_))
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v:.16e}"),
            Exponent::MinusInfinity => f.write_str("-inf"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub n: Option<usize>,
    pub dim: usize,
    pub kappa: f64,
    /// `κ ω(1 − A) + (1 − κ) σ(A)` at the returned projection.
    pub p_min: f64,
    /// `1/2 − ‖κω̂ − (1 − κ)σ̂‖₁ / 2`.
    pub p_min_trace_norm: f64,
    pub optimal_projection: ComplexOperator,
}

/// Holevo-Helstrom test: accept `σ` on the strictly positive part of
/// `κω̂ − (1 − κ)σ̂`.
pub fn min_error(
    omega: &DensityOperator,
    sigma: &DensityOperator,
    kappa: f64,
) -> Result<ErrorReport> {
    if omega.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            omega.dim(),
            sigma.dim()
        )));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa = {kappa} outside (0, 1)"
        )));
    }
    let d = omega
        .as_hermitian()
        .scaled(kappa)
        .sub(&sigma.as_hermitian().scaled(1.0 - kappa));
    let sd = d.spectral_decomposition()?;
    let norm: f64 = sd.eigenvalues().iter().map(|x| x.abs()).sum();
    let proj = sd.apply(|x| if x > 0.0 { 1.0 } else { 0.0 });
    let om = linalg::trace_of_product(omega.matrix(), proj.as_ref()).re;
    let sg = linalg::trace_of_product(sigma.matrix(), proj.as_ref()).re;
    // reject ω on the complement of A, reject σ on A
    let p_min = kappa * (1.0 - om) + (1.0 - kappa) * sg;
    Ok(ErrorReport {
        n: None,
        dim: omega.dim(),
        kappa,
        p_min,
        p_min_trace_norm: 0.5 - 0.5 * norm,
        optimal_projection: ComplexOperator::new(proj)?,
    })
}

/// [`min_error`] on `n` sites of two sources.
pub fn min_error_at(
    a: &dyn StateSource,
    b: &dyn StateSource,
    n: usize,
    kappa: f64,
    cap: Cap,
) -> Result<ErrorReport> {
    let mut report = min_error(&a.local_density(n, cap)?, &b.local_density(n, cap)?, kappa)?;
    report.n = Some(n);
    Ok(report)
}

/// Eigen data of a pair `(ω̂, σ̂)` so that `Tr ω̂^{1−t} σ̂^t` is cheap for
/// many `t`. Powers live on the supports.
#[derive(Clone, Debug)]
pub struct QuasiTraceKernel {
    log_lambda: Vec<f64>,
    log_mu: Vec<f64>,
    /// `log |⟨u_i|v_j⟩|²`, row-major over the supports.
    log_overlap: Vec<f64>,
}

impl QuasiTraceKernel {
    pub fn new(omega: &HermitianOperator, sigma: &HermitianOperator) -> Result<Self> {
        if omega.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                omega.dim(),
                sigma.dim()
            )));
        }
        let (to, ts) = (default_tol(omega.matrix()), default_tol(sigma.matrix()));
        let so = omega.spectral_decomposition()?;
        let ss = sigma.spectral_decomposition()?;
        let io: Vec<usize> = (0..so.len())
            .filter(|&i| so.eigenvalues()[i] > to)
            .collect();
        let is: Vec<usize> = (0..ss.len())
            .filter(|&j| ss.eigenvalues()[j] > ts)
            .collect();
        let n = omega.dim();
        let u = Mat::from_fn(n, io.len(), |r, k| so.eigenvectors()[(r, io[k])]);
        let v = Mat::from_fn(n, is.len(), |r, k| ss.eigenvectors()[(r, is[k])]);
        let ov = linalg::mul(u.adjoint(), v.as_ref());
        let mut log_overlap = Vec::with_capacity(io.len() * is.len());
        for i in 0..io.len() {
            for j in 0..is.len() {
                log_overlap.push(ov[(i, j)].norm_sqr().ln());
            }
        }
        Ok(Self {
            log_lambda: io.iter().map(|&i| so.eigenvalues()[i].ln()).collect(),
            log_mu: is.iter().map(|&j| ss.eigenvalues()[j].ln()).collect(),
            log_overlap,
        })
    }

    /// `log Tr ω̂^{1−t} σ̂^t`, `−∞` when the value vanishes.
    pub fn log_value(&self, t: f64) -> f64 {
        let m = self.log_mu.len();
        let terms: Vec<f64> = self
            .log_lambda
            .iter()
            .enumerate()
            .flat_map(|(i, &l)| {
                self.log_mu
                    .iter()
                    .enumerate()
                    .map(move |(j, &u)| (1.0 - t) * l + t * u + self.log_overlap[i * m + j])
            })
            .collect();
        log_sum_exp(&terms)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.log_value(t).exp()
    }
}

/// `Tr ω̂^{1−t} σ̂^t` with `0^t = 0`.
pub fn quasi_trace(omega: &DensityOperator, sigma: &DensityOperator, t: f64) -> Result<f64> {
    Ok(QuasiTraceKernel::new(omega.as_hermitian(), sigma.as_hermitian())?.value(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub t_star: f64,
    pub value: Exponent,
}

/// Minimum of `ξ` over the span of `grid`: a scan followed by a
/// golden-section refinement around the best grid point.
pub fn chernoff_exponent(grid: &[f64], xi: impl Fn(f64) -> f64) -> Result<ExponentEstimate> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let vals: Vec<f64> = grid.iter().map(|&t| xi(t)).collect();
    let (k, &best) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    if best == f64::NEG_INFINITY {
        return Ok(ExponentEstimate {
            t_star: grid[k],
            value: Exponent::MinusInfinity,
        });
    }
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let (t, neg) = golden_max(|t| -xi(t), lo.min(hi), lo.max(hi));
    let (t_star, value) = if -neg < best {
        (t, -neg)
    } else {
        (grid[k], best)
    };
    Ok(ExponentEstimate {
        t_star,
        value: Exponent::from_log(value),
    })
}

#[derive(Clone, Debug)]
pub struct ChernoffCurve {
    pub t_grid: Vec<f64>,
    pub n_sweep: Vec<usize>,
    /// `finite_n[i][j] = ξ_{n_sweep[i]}(t_grid[j])`.
    pub finite_n: Vec<Vec<Exponent>>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    /// Block lengths `m` entering the envelopes: the sweep entries dividing
    /// the largest `n`.
    pub envelope_blocks: Vec<usize>,
    pub upper_envelope: Option<Vec<Exponent>>,
    pub lower_envelope: Option<Vec<Exponent>>,
    kernels: Vec<(usize, QuasiTraceKernel)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChernoffSummary {
    /// Minimum over `t` of `ξ_{n_max}`.
    pub finite_n: ExponentEstimate,
    /// Lower end of the sandwich; `−∞` without a lower constant.
    pub lower: Exponent,
    /// Upper end of the sandwich; absent without an upper constant.
    pub upper: Option<Exponent>,
    pub width: Option<f64>,
}

impl ChernoffCurve {
    pub fn n_max(&self) -> usize {
        *self.n_sweep.iter().max().expect("nonempty sweep")
    }

    /// `ξ_n(t)` for a swept `n` at any `t`.
    pub fn xi(&self, n: usize, t: f64) -> Option<f64> {
        self.kernels
            .iter()
            .find(|k| k.0 == n)
            .map(|(n, k)| k.log_value(t) / *n as f64)
    }

    /// `min_m (1/m)(log β + log q_m(t))`.
    pub fn upper_at(&self, t: f64) -> Option<f64> {
        let beta = self.beta?;
        Some(self.envelope(t, beta, f64::min, f64::INFINITY))
    }

    /// `max_m (1/m)(log α + log q_m(t))`.
    pub fn lower_at(&self, t: f64) -> Option<f64> {
        let alpha = self.alpha.filter(|&a| a > 0.0)?;
        Some(self.envelope(t, alpha, f64::max, f64::NEG_INFINITY))
    }

    fn envelope(&self, t: f64, constant: f64, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
        self.envelope_blocks
            .iter()
            .map(|&m| (constant.ln() + self.xi(m, t).unwrap() * m as f64) / m as f64)
            .fold(init, pick)
    }

    pub fn summary(&self) -> Result<ChernoffSummary> {
        let n = self.n_max();
        let finite_n = chernoff_exponent(&self.t_grid, |t| self.xi(n, t).unwrap())?;
        let upper = match self.beta {
            Some(_) => Some(chernoff_exponent(&self.t_grid, |t| self.upper_at(t).unwrap())?.value),
            None => None,
        };
        let lower = match self.lower_at(0.5) {
            Some(_) => chernoff_exponent(&self.t_grid, |t| self.lower_at(t).unwrap())?.value,
            None => Exponent::MinusInfinity,
        };
        let width = match (upper, lower) {
            (Some(Exponent::Finite(u)), Exponent::Finite(l)) => Some(u - l),
            _ => None,
        };
        Ok(ChernoffSummary {
            finite_n,
            lower,
            upper,
            width,
        })
    }
}

/// Finite-n values `ξ_n(t) = (1/n) log Tr ω̂_n^{1−t} σ̂_n^t` with optional
/// upper (`β`) and lower (`α`) factorization envelopes. The constants must
/// hold for both states simultaneously.
pub fn chernoff_curve(
    omega: &dyn StateSource,
    sigma: &dyn StateSource,
    t_grid: &[f64],
    n_sweep: &[usize],
    beta: Option<f64>,
    alpha: Option<f64>,
    cap: Cap,
) -> Result<ChernoffCurve> {
    if t_grid.is_empty() || n_sweep.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if omega.site_dim() != sigma.site_dim() {
        return Err(Error::DimensionMismatch(
            "sources on different site dimensions".into(),
        ));
    }
    if n_sweep.contains(&0) {
        return Err(Error::InvalidArgument(
            "chain length must be positive".into(),
        ));
    }
    let mut sweep = n_sweep.to_vec();
    sweep.sort_unstable();
    sweep.dedup();
    for &n in &sweep {
        cap.check_power(omega.site_dim(), n)?;
    }
    let kernels = sweep
        .par_iter()
        .map(|&n| {
            let a = omega.local_density(n, cap)?;
            let b = sigma.local_density(n, cap)?;
            Ok((
                n,
                QuasiTraceKernel::new(a.as_hermitian(), b.as_hermitian())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_max = *sweep.last().unwrap();
    let finite_n = kernels
        .iter()
        .map(|(n, k)| {
            t_grid
                .iter()
                .map(|&t| Exponent::from_log(k.log_value(t) / *n as f64))
                .collect()
        })
        .collect();
    let envelope_blocks: Vec<usize> = sweep
        .iter()
        .copied()
        .filter(|m| n_max.is_multiple_of(*m))
        .collect();
    let mut curve = ChernoffCurve {
        t_grid: t_grid.to_vec(),
        n_sweep: sweep,
        finite_n,
        beta,
        alpha,
        envelope_blocks,
        upper_envelope: None,
        lower_envelope: None,
        kernels,
    };
    if beta.is_some() {
        curve.upper_envelope = Some(
            t_grid
                .iter()
                .map(|&t| Exponent::from_log(curve.upper_at(t).unwrap()))
                .collect(),
        );
    }
    if curve.lower_at(0.5).is_some() {
        curve.lower_envelope = Some(
            t_grid
                .iter()
                .map(|&t| Exponent::from_log(curve.lower_at(t).unwrap()))
                .collect(),
        );
    }
    Ok(curve)
}

/// Transfer matrix for a pair of hidden Markov specs whose emissions from
/// distinct hidden states have orthogonal supports.
#[derive(Clone, Debug)]
pub struct QMatrixModel {
    pub t: f64,
    pub x_count: usize,
    pub y_count: usize,
    /// Indexed by `x · |Y| + y`.
    pub q: Mat<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `log r(Q(t))`, `−∞` for a nilpotent `Q`.
    pub xi: f64,
    pub warnings: Vec<String>,
}

impl QMatrixModel {
    /// `log ⟨a, Q^{n−1} b⟩`.
    pub fn log_pairing(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::NAN;
        }
        let mut v = self.b.clone();
        let mut log_scale = 0.0;
        for _ in 1..n {
            let next: Vec<f64> = (0..v.len())
                .map(|i| (0..v.len()).map(|j| self.q[(i, j)] * v[j]).sum())
                .collect();
            let m = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if m == 0.0 {
                return f64::NEG_INFINITY;
            }
            v = next.into_iter().map(|x| x / m).collect();
            log_scale += m.ln();
        }
        let dot: f64 = self.a.iter().zip(&v).map(|(a, b)| a * b).sum();
        log_scale + dot.ln()
    }

    pub fn pairing(&self, n: usize) -> f64 {
        self.log_pairing(n).exp()
    }
}

fn check_orthogonal_supports(spec: &HiddenMarkovSpec, label: &str) -> Result<()> {
    let k = spec.state_count();
    for x in 0..k {
        for xp in (x + 1)..k {
            for w in 0..k {
                for wp in 0..k {
                    if let (Some(a), Some(b)) = (spec.theta(x, w), spec.theta(xp, wp)) {
                        let overlap = linalg::trace_of_product(a.matrix(), b.matrix()).re;
                        if overlap > ORTHOGONALITY_TOL {
                            return Err(Error::OrthogonalityViolated(format!(
                                "{label}: emissions ({x},{w}) and ({xp},{wp}) overlap by {overlap:.3e}; use chernoff_curve instead"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn pow0(x: f64, t: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(t)
    }
}

pub fn q_matrix_model(
    spec_omega: &HiddenMarkovSpec,
    spec_sigma: &HiddenMarkovSpec,
    t: f64,
) -> Result<QMatrixModel> {
    if spec_omega.d_a() != spec_sigma.d_a() {
        return Err(Error::DimensionMismatch(
            "specs on different site dimensions".into(),
        ));
    }
    check_orthogonal_supports(spec_omega, "first state")?;
    check_orthogonal_supports(spec_sigma, "second state")?;
    let (nx, ny) = (spec_omega.state_count(), spec_sigma.state_count());
    let (tm, sm) = (spec_omega.transition(), spec_sigma.transition());
    let dim = nx * ny;
    let mut q = Mat::<f64>::zeros(dim, dim);
    let mut warnings = Vec::new();
    let mut q_positive = true;
    for x in 0..nx {
        for y in 0..ny {
            for w in 0..nx {
                for z in 0..ny {
                    let entry = match (spec_omega.theta(x, w), spec_sigma.theta(y, z)) {
                        (Some(th), Some(ph)) => {
                            pow0(tm[x][w], 1.0 - t) * pow0(sm[y][z], t) * quasi_trace(th, ph, t)?
                        }
                        _ => 0.0,
                    };
                    q_positive &= entry > 0.0;
                    q[(x * ny + y, w * ny + z)] = entry;
                }
            }
        }
    }
    if !q_positive {
        warnings.push("Q(t) has vanishing entries; primitivity is not guaranteed".to_string());
    }
    let (r, p) = (spec_omega.stationary(), spec_sigma.stationary());
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for x in 0..nx {
        let big_theta = spec_omega.emission(x);
        for y in 0..ny {
            a[x * ny + y] = pow0(r[x], 1.0 - t) * pow0(p[y], t);
            b[x * ny + y] = quasi_trace(&big_theta, &spec_sigma.emission(y), t)?;
        }
    }
    if a.iter().chain(&b).any(|&v| v <= 0.0) {
        warnings.push("a(t) or b(t) is not strictly positive".to_string());
    }
    let cq = Mat::from_fn(dim, dim, |i, j| c(q[(i, j)]));
    let radius = linalg::eigvals(cq.as_ref())?
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    let xi = if radius > 0.0 {
        radius.ln()
    } else {
        f64::NEG_INFINITY
    };
    Ok(QMatrixModel {
        t,
        x_count: nx,
        y_count: ny,
        q,
        a,
        b,
        xi,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsBoundRow {
    pub n: usize,
    /// `(1/n)[log Tr e^{−(1−t)H_n(Φ)−tH_n(Ψ)} − (1−t) log Tr e^{−H_n(Φ)} − t log Tr e^{−H_n(Ψ)}]`.
    pub value: f64,
    /// `log Tr e^{−(1−t)H_n(Φ)} e^{−tH_n(Ψ)}`.
    pub golden_thompson_product: f64,
    /// `log Tr e^{−(1−t)H_n(Φ)−tH_n(Ψ)}`.
    pub golden_thompson_sum: f64,
    pub golden_thompson_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsBound {
    pub t: f64,
    pub rows: Vec<GibbsBoundRow>,
}

/// `log Tr e^{−H}`.
fn log_partition(h: &HermitianOperator) -> Result<f64> {
    let terms: Vec<f64> = h.eigenvalues()?.iter().map(|e| -e).collect();
    Ok(log_sum_exp(&terms))
}

/// `log Tr e^{−a} e^{−b}` from the two eigendecompositions.
fn log_trace_product_exp(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    let sa = a.spectral_decomposition()?;
    let sb = b.spectral_decomposition()?;
    let ov = linalg::mul(sa.eigenvectors().adjoint(), sb.eigenvectors());
    let mut terms = Vec::with_capacity(sa.len() * sb.len());
    for (i, &ea) in sa.eigenvalues().iter().enumerate() {
        for (j, &eb) in sb.eigenvalues().iter().enumerate() {
            let w = ov[(i, j)].norm_sqr();
            if w > 0.0 {
                terms.push(-ea - eb + w.ln());
            }
        }
    }
    Ok(log_sum_exp(&terms))
}

pub fn gibbs_lower_bound(
    phi: &Interaction,
    psi: &Interaction,
    t: f64,
    n_sweep: &[usize],
    cap: Cap,
) -> Result<GibbsBound> {
    if n_sweep.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if phi.site_dim() != psi.site_dim() {
        return Err(Error::DimensionMismatch(
            "interactions on different site dimensions".into(),
        ));
    }
    let rows = n_sweep
        .par_iter()
        .map(|&n| {
            let hp = local_hamiltonian(phi, n, cap)?;
            let hq = local_hamiltonian(psi, n, cap)?;
            let mixed = local_hamiltonian(&phi.combine(1.0 - t, psi, t)?, n, cap)?;
            let sum = log_partition(&mixed)?;
            let value =
                (sum - (1.0 - t) * log_partition(&hp)? - t * log_partition(&hq)?) / n as f64;
            let product = log_trace_product_exp(&hp.scaled(1.0 - t), &hq.scaled(t))?;
            let slack = 1e-12 * sum.abs().max(1.0);
            Ok(GibbsBoundRow {
                n,
                value,
                golden_thompson_product: product,
                golden_thompson_sum: sum,
                golden_thompson_holds: product >= sum - slack,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GibbsBound { t, rows })
}
