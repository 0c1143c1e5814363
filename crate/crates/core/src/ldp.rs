//! Interactions, local Hamiltonians, distributions of ergodic averages,
//! moment generating functions, rate functions and pressures.

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fcs::{classify_ergodicity, GeneratingTriple};
use crate::linalg::{self, c, CMat};
use crate::maps::{spectral_radius, Superoperator};
use crate::operator::{window_length, DensityOperator, HermitianOperator};
use crate::source::StateSource;
use crate::Cap;

/// Eigenvalues closer than this are merged into a single atom.
pub const ATOM_MERGE_TOL: f64 = 1e-8;

/// Translation-invariant interaction on intervals. `terms[ℓ − 1]` is
/// `Φ([1, ℓ])`, an operator on `ℓ` sites; all other windows are translates.
#[derive(Clone, Debug)]
pub struct Interaction {
    d_a: usize,
    terms: Vec<Option<HermitianOperator>>,
}

impl Interaction {
    pub fn new(d_a: usize, terms: Vec<Option<HermitianOperator>>) -> Result<Self> {
        if d_a == 0 {
            return Err(Error::DimensionMismatch(
                "site dimension must be positive".into(),
            ));
        }
        for (k, term) in terms.iter().enumerate() {
            if let Some(h) = term {
                let expected = d_a.pow(k as u32 + 1);
                if h.dim() != expected {
                    return Err(Error::DimensionMismatch(format!(
                        "term on {} sites has dim {}, expected {expected}",
                        k + 1,
                        h.dim()
                    )));
                }
            }
        }
        let mut terms = terms;
        while matches!(terms.last(), Some(None)) {
            terms.pop();
        }
        Ok(Self { d_a, terms })
    }

    pub fn zero(d_a: usize) -> Self {
        Self {
            d_a,
            terms: Vec::new(),
        }
    }

    pub fn one_site(h: HermitianOperator) -> Self {
        Self {
            d_a: h.dim(),
            terms: vec![Some(h)],
        }
    }

    /// One-site field `h` and two-site coupling `j`.
    pub fn nearest_neighbor(h: Option<HermitianOperator>, j: HermitianOperator) -> Result<Self> {
        let d_a = (j.dim() as f64).sqrt().round() as usize;
        Self::new(d_a, vec![h, Some(j)])
    }

    /// `Σ_k (field · σ_k) + coupling · z_k z_{k+1}` on qubits, with `field`
    /// the coefficients of `(x, y, z)`.
    pub fn ising(coupling: f64, field: [f64; 3]) -> Self {
        let h = HermitianOperator::from_matrix_unchecked(Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(field[2]),
            (1, 1) => c(-field[2]),
            (0, 1) => linalg::C64::new(field[0], -field[1]),
            _ => linalg::C64::new(field[0], field[1]),
        }));
        let zz = HermitianOperator::from_real_diagonal(&[coupling, -coupling, -coupling, coupling]);
        Self {
            d_a: 2,
            terms: vec![Some(h), Some(zz)],
        }
    }

    pub fn site_dim(&self) -> usize {
        self.d_a
    }

    /// Largest diameter of a nonzero window.
    pub fn range(&self) -> usize {
        self.terms
            .iter()
            .rposition(|t| {
                t.as_ref()
                    .is_some_and(|h| h.as_operator().max_abs_entry() > 0.0)
            })
            .unwrap_or(0)
    }

    pub fn terms(&self) -> &[Option<HermitianOperator>] {
        &self.terms
    }

    /// `a Φ + b Ψ`.
    pub fn combine(&self, a: f64, other: &Interaction, b: f64) -> Result<Self> {
        if self.d_a != other.d_a {
            return Err(Error::DimensionMismatch(
                "interactions on different site dimensions".into(),
            ));
        }
        let len = self.terms.len().max(other.terms.len());
        let pick = |v: &Vec<Option<HermitianOperator>>, k: usize, s: f64| {
            v.get(k).cloned().flatten().map(|h| h.scaled(s))
        };
        let terms = (0..len)
            .map(
                |k| match (pick(&self.terms, k, a), pick(&other.terms, k, b)) {
                    (Some(x), Some(y)) => Some(x.add(&y)),
                    (x, y) => x.or(y),
                },
            )
            .collect();
        Self::new(self.d_a, terms)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d_a: self.d_a,
            terms: self
                .terms
                .iter()
                .map(|t| t.as_ref().map(|h| h.scaled(s)))
                .collect(),
        }
    }
}

/// `acc += 1 ⊗ a ⊗ 1` with `a` at sites `[site, site + r)` of `n`.
fn add_embedded(
    acc: &mut CMat,
    a: &HermitianOperator,
    site: usize,
    n: usize,
    d: usize,
    weight: f64,
) {
    let w = a.dim();
    let r = window_length(w, d).expect("window dims checked on construction");
    let left = d.pow(site as u32);
    let right = d.pow((n - site - r) as u32);
    let m = a.matrix();
    for l in 0..left {
        for i in 0..w {
            for j in 0..w {
                let v = m[(i, j)] * weight;
                if v == c(0.0) {
                    continue;
                }
                let (bi, bj) = ((l * w + i) * right, (l * w + j) * right);
                for q in 0..right {
                    acc[(bi + q, bj + q)] += v;
                }
            }
        }
    }
}

/// `H_n = Σ_{X ⊆ [1,n]} Φ(X)` with open boundary.
pub fn local_hamiltonian(phi: &Interaction, n: usize, cap: Cap) -> Result<HermitianOperator> {
    let dim = cap.check_power(phi.d_a, n)?;
    let mut acc = linalg::zeros(dim, dim);
    for (k, term) in phi.terms.iter().enumerate() {
        let len = k + 1;
        if let Some(h) = term {
            for s in 0..(n + 1).saturating_sub(len) {
                add_embedded(&mut acc, h, s, n, phi.d_a, 1.0);
            }
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(acc))
}

/// `A_Φ = Σ_{X ∋ 0} Φ(X)/|X|` on the `2 d(Φ) + 1` sites `[−d(Φ), d(Φ)]`.
pub fn mean_energy_operator(phi: &Interaction) -> HermitianOperator {
    let range = phi.range();
    let n = 2 * range + 1;
    let dim = phi.d_a.pow(n as u32);
    let mut acc = linalg::zeros(dim, dim);
    for (k, term) in phi.terms.iter().enumerate().take(range + 1) {
        let len = k + 1;
        if let Some(h) = term {
            for s in (range + 1 - len)..=range {
                add_embedded(&mut acc, h, s, n, phi.d_a, 1.0 / len as f64);
            }
        }
    }
    HermitianOperator::from_matrix_unchecked(acc)
}

/// `‖A_Φ‖`.
pub fn mean_energy_norm(phi: &Interaction) -> Result<f64> {
    mean_energy_operator(phi).operator_norm()
}

/// `Ā_n = (1/n) Σ_k γ^k(a)`.
pub fn average_observable(a: &HermitianOperator, n: usize, cap: Cap) -> Result<HermitianOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "chain length must be positive".into(),
        ));
    }
    let d = a.dim();
    let dim = cap.check_power(d, n)?;
    let mut acc = linalg::zeros(dim, dim);
    for k in 0..n {
        add_embedded(&mut acc, a, k, n, d, 1.0 / n as f64);
    }
    Ok(HermitianOperator::from_matrix_unchecked(acc))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDistribution {
    /// `(value, mass)` with strictly increasing values.
    pub atoms: Vec<(f64, f64)>,
}

impl SpectralDistribution {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass of `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.0 >= lo && a.0 <= hi)
            .map(|a| a.1)
            .sum()
    }

    /// Mass of `(lo, hi)`.
    pub fn mass_in_open(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.0 > lo && a.0 < hi)
            .map(|a| a.1)
            .sum()
    }

    /// `∫ e^{s x} dμ(x)`.
    pub fn laplace(&self, s: f64) -> f64 {
        self.atoms.iter().map(|&(x, m)| m * (s * x).exp()).sum()
    }
}

/// Atoms `(λ_i, Tr ω̂ P_i)` of the spectral measure of `x` in the state `ω̂`.
pub fn spectral_distribution(
    omega: &DensityOperator,
    x: &HermitianOperator,
) -> Result<SpectralDistribution> {
    let kernel = PartitionKernel::new(omega, x)?;
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut anchor = f64::NAN;
    let mut count = 0usize;
    for (&v, &w) in kernel.energies.iter().zip(&kernel.weights) {
        match atoms.last_mut() {
            Some(last) if (v - anchor).abs() <= ATOM_MERGE_TOL => {
                count += 1;
                last.0 += (v - last.0) / count as f64;
                last.1 += w;
            }
            _ => {
                anchor = v;
                count = 1;
                atoms.push((v, w));
            }
        }
    }
    Ok(SpectralDistribution { atoms })
}

/// Eigenvalues `λ_i` of a Hermitian `H` together with the weights
/// `⟨v_i|ω̂|v_i⟩`, so that `Tr ω̂ f(H) = Σ w_i f(λ_i)`.
#[derive(Clone, Debug)]
pub struct PartitionKernel {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PartitionKernel {
    pub fn new(omega: &DensityOperator, h: &HermitianOperator) -> Result<Self> {
        if omega.dim() != h.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                omega.dim(),
                h.dim()
            )));
        }
        let sd = h.spectral_decomposition()?;
        let u = sd.eigenvectors();
        let wu = linalg::mul(omega.matrix(), u);
        let weights = (0..u.ncols())
            .map(|i| {
                (0..u.nrows())
                    .map(|a| (u[(a, i)].conj() * wu[(a, i)]).re)
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect();
        Ok(Self {
            energies: sd.eigenvalues().to_vec(),
            weights,
        })
    }

    /// Uniform weights `1/dim`, i.e. the normalized trace.
    pub fn tracial(h: &HermitianOperator) -> Result<Self> {
        let energies = h.eigenvalues()?.to_vec();
        let w = 1.0 / energies.len() as f64;
        Ok(Self {
            weights: vec![w; energies.len()],
            energies,
        })
    }

    /// `log Σ w_i e^{s λ_i}`.
    pub fn log_laplace(&self, s: f64) -> f64 {
        let terms: Vec<f64> = self
            .energies
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&e, &w)| s * e + w.ln())
            .collect();
        log_sum_exp(&terms)
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `E_{e^{ta}} = Σ_k e^{t λ_k} E_{P_k}` from the spectral projections of a
/// one-site observable, evaluated with the largest exponential factored out.
#[derive(Clone, Debug)]
pub struct TransferFamily {
    values: Vec<f64>,
    pieces: Vec<Superoperator>,
    rho: CMat,
}

impl TransferFamily {
    pub fn new(triple: &GeneratingTriple, a: &HermitianOperator) -> Result<Self> {
        if a.dim() != triple.d_a() {
            return Err(Error::DimensionMismatch(format!(
                "observable of dim {} on sites of dim {}",
                a.dim(),
                triple.d_a()
            )));
        }
        let sd = a.spectral_decomposition()?;
        let mut values = Vec::new();
        let mut pieces = Vec::new();
        for (v, p) in sd.grouped_projectors(ATOM_MERGE_TOL) {
            values.push(v);
            pieces.push(triple.block_transfer_map_complex(&p)?);
        }
        Ok(Self {
            values,
            pieces,
            rho: triple.rho().matrix().to_owned(),
        })
    }

    pub fn spectrum_bounds(&self) -> (f64, f64) {
        (self.values[0], *self.values.last().unwrap())
    }

    /// `(shift, S)` with `E_{e^{ta}} = e^{shift} S`.
    pub fn scaled_map(&self, t: f64) -> (f64, Superoperator) {
        let shift = if t >= 0.0 {
            t * self.values.last().unwrap()
        } else {
            t * self.values[0]
        };
        let mut mat = linalg::zeros(
            self.pieces[0].matrix().nrows(),
            self.pieces[0].matrix().ncols(),
        );
        for (v, p) in self.values.iter().zip(&self.pieces) {
            mat = &mat + linalg::scale(p.matrix(), c((t * v - shift).exp()));
        }
        let d = self.rho.nrows();
        (
            shift,
            Superoperator::new(d, d, mat).expect("shape preserved"),
        )
    }

    /// `log r(E_{e^{ta}})`.
    pub fn log_spectral_radius(&self, t: f64) -> Result<f64> {
        let (shift, s) = self.scaled_map(t);
        Ok(shift + spectral_radius(&s)?.ln())
    }

    /// `log ρ(E_{e^{ta}}^n(1))` for `n = 1..=n_max`.
    pub fn log_mgf_sequence(&self, t: f64, n_max: usize) -> Result<Vec<f64>> {
        let (shift, s) = self.scaled_map(t);
        let d = self.rho.nrows();
        let mut y = linalg::identity(d);
        let mut log_scale = 0.0;
        let mut out = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            y = s.apply(y.as_ref())?;
            let m = linalg::max_abs(y.as_ref());
            if m == 0.0 {
                return Err(Error::Numerical("transfer iteration vanished".into()));
            }
            y = linalg::scale(y.as_ref(), c(1.0 / m));
            log_scale += m.ln();
            let pairing = linalg::trace_of_product(self.rho.as_ref(), y.as_ref()).re;
            out.push(n as f64 * shift + log_scale + pairing.ln());
        }
        Ok(out)
    }
}

/// `m_n(t) = ρ(E_{e^{ta}}^n(1))`.
pub fn mgf_exact(
    triple: &GeneratingTriple,
    a: &HermitianOperator,
    t: f64,
    n: usize,
) -> Result<f64> {
    Ok(log_mgf_exact(triple, a, t, n)?.exp())
}

/// `log m_n(t)`, stable for large `n`.
pub fn log_mgf_exact(
    triple: &GeneratingTriple,
    a: &HermitianOperator,
    t: f64,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(*TransferFamily::new(triple, a)?
        .log_mgf_sequence(t, n)?
        .last()
        .unwrap())
}

/// `F(t) = log r(E_{e^{ta}})`. Irreducibility of `E_1` is not checked here;
/// see [`RateFunctionModel::from_triple`].
pub fn log_mgf_limit(triple: &GeneratingTriple, a: &HermitianOperator, t: f64) -> Result<f64> {
    TransferFamily::new(triple, a)?.log_spectral_radius(t)
}

#[derive(Clone, Copy, Debug)]
pub struct RateOptions {
    pub t_cap: f64,
    pub fd_step: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            t_cap: 50.0,
            fd_step: 1e-5,
        }
    }
}

type LogMgf = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex log-moment generating function `F` with its Legendre-Fenchel
/// transform `I(x) = sup_t (t x − F(t))`.
pub struct RateFunctionModel {
    f: LogMgf,
    mean: f64,
    bounds: (f64, f64),
    opts: RateOptions,
}

impl std::fmt::Debug for RateFunctionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RateFunctionModel")
            .field("mean", &self.mean)
            .field("bounds", &self.bounds)
            .field("opts", &self.opts)
            .finish()
    }
}

impl RateFunctionModel {
    /// Refuses triples whose `E_1` is not irreducible.
    pub fn from_triple(
        triple: &GeneratingTriple,
        a: &HermitianOperator,
        opts: RateOptions,
    ) -> Result<Self> {
        let report = classify_ergodicity(triple)?;
        if !report.ergodic {
            return Err(Error::NotIrreducible(format!(
                "geometric multiplicity {} at the spectral radius",
                report.perron.geometric_multiplicity
            )));
        }
        let family = TransferFamily::new(triple, a)?;
        let bounds = family.spectrum_bounds();
        let mean = triple.expectation(a)?;
        let f = move |t: f64| family.log_spectral_radius(t).unwrap_or(f64::NAN);
        Ok(Self {
            f: Box::new(f),
            mean,
            bounds,
            opts,
        })
    }

    pub fn from_fn(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
        bounds: (f64, f64),
        opts: RateOptions,
    ) -> Self {
        Self {
            f: Box::new(f),
            mean,
            bounds,
            opts,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn spectrum_bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn log_mgf(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn sample(&self, ts: &[f64]) -> Vec<f64> {
        ts.par_iter().map(|&t| self.log_mgf(t)).collect()
    }

    /// Central difference `F′(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let h = self.opts.fd_step * t.abs().max(1.0);
        (self.log_mgf(t + h) - self.log_mgf(t - h)) / (2.0 * h)
    }

    /// `I(x)`: `+∞` outside `[λ_min, λ_max]`; inside, the supremum over
    /// `|t| ≤ t_cap`, located by bisection on `F′(t) = x`.
    pub fn rate(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds;
        let edge = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if x.is_nan() {
            return f64::NAN;
        }
        if x < lo - edge || x > hi + edge {
            return f64::INFINITY;
        }
        if hi - lo <= edge {
            return 0.0;
        }
        let g = |t: f64| t * x - self.log_mgf(t);
        let cap = self.opts.t_cap;
        let d_lo = self.derivative(-cap) - x;
        let d_hi = self.derivative(cap) - x;
        let value = if !(d_lo.is_finite() && d_hi.is_finite()) {
            None
        } else if d_lo >= 0.0 {
            Some(g(-cap))
        } else if d_hi <= 0.0 {
            Some(g(cap))
        } else {
            let (mut a, mut b) = (-cap, cap);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let dm = self.derivative(mid) - x;
                if !dm.is_finite() {
                    break;
                }
                if dm < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-13 * mid.abs().max(1.0) {
                    break;
                }
            }
            Some(g(0.5 * (a + b)))
        };
        match value {
            Some(v) if v.is_finite() => v.max(0.0),
            _ => golden_max(g, -cap, cap).1.max(0.0),
        }
    }

    pub fn rates(&self, xs: &[f64]) -> Vec<f64> {
        xs.par_iter().map(|&x| self.rate(x)).collect()
    }
}

/// Maximizer and maximum of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (x1, f1), (x2, f2)];
    candidates.into_iter().fold(
        (a, f64::NEG_INFINITY),
        |best, c| if c.1 > best.1 { c } else { best },
    )
}

/// `I(x)` for a one-site observable of a triple.
pub fn rate_function(triple: &GeneratingTriple, a: &HermitianOperator, x: f64) -> Result<f64> {
    Ok(RateFunctionModel::from_triple(triple, a, RateOptions::default())?.rate(x))
}

/// Where finite-n pressure values come from.
#[derive(Clone, Copy)]
pub enum PressureSource<'a> {
    /// Finitely correlated state; transfer values are reported as well.
    Triple(&'a GeneratingTriple),
    Densities(&'a dyn StateSource),
    /// Normalized trace on sites of the given dimension.
    Tracial(usize),
}

#[derive(Clone, Debug)]
pub struct PressureCurve {
    pub t: f64,
    /// `(n, (1/n) log ω(e^{−t H_n}))`.
    pub brute_force: Vec<(usize, f64)>,
    /// `(m, (1/m) log r(E^{(m)}_{e^{−t H_m}}))`, triples only.
    pub transfer: Vec<(usize, f64)>,
    pub mean_energy_norm: f64,
    /// Every reported value satisfies `|p| ≤ |t| ‖A_Φ‖`.
    pub within_bound: bool,
}

/// `(1/n) log ω(e^{−t H_n})` for one `n`.
pub fn pressure_at(
    source: PressureSource<'_>,
    phi: &Interaction,
    t: f64,
    n: usize,
    cap: Cap,
) -> Result<f64> {
    let h = local_hamiltonian(phi, n, cap)?;
    let kernel = match source {
        PressureSource::Triple(tr) => PartitionKernel::new(&tr.local_density(n, cap)?, &h)?,
        PressureSource::Densities(s) => PartitionKernel::new(&s.local_density(n, cap)?, &h)?,
        PressureSource::Tracial(_) => PartitionKernel::tracial(&h)?,
    };
    Ok(kernel.log_laplace(-t) / n as f64)
}

/// `(1/m) log r(E^{(m)}_{e^{−t H_m}})`.
pub fn pressure_transfer(
    triple: &GeneratingTriple,
    phi: &Interaction,
    t: f64,
    m: usize,
    cap: Cap,
) -> Result<f64> {
    let h = local_hamiltonian(phi, m, cap)?;
    let sd = h.spectral_decomposition()?;
    let shift = sd
        .eigenvalues()
        .iter()
        .map(|e| -t * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let x = HermitianOperator::from_matrix_unchecked(sd.apply(|e| (-t * e - shift).exp()));
    let map = triple.block_transfer_map(&x)?;
    Ok((shift + spectral_radius(&map)?.ln()) / m as f64)
}

pub fn pressure_curve(
    source: PressureSource<'_>,
    phi: &Interaction,
    t: f64,
    n_max: usize,
    cap: Cap,
) -> Result<PressureCurve> {
    let d = match source {
        PressureSource::Triple(tr) => tr.d_a(),
        PressureSource::Densities(s) => s.site_dim(),
        PressureSource::Tracial(d) => d,
    };
    if d != phi.d_a {
        return Err(Error::DimensionMismatch(format!(
            "state on sites of dim {d}, interaction on {}",
            phi.d_a
        )));
    }
    cap.check_power(d, n_max)?;
    let brute_force = (1..=n_max)
        .into_par_iter()
        .map(|n| pressure_at(source, phi, t, n, cap).map(|v| (n, v)))
        .collect::<Result<Vec<_>>>()?;
    let transfer = match source {
        PressureSource::Triple(tr) => (1..=n_max)
            .into_par_iter()
            .map(|m| pressure_transfer(tr, phi, t, m, cap).map(|v| (m, v)))
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    let mean_energy_norm = mean_energy_norm(phi)?;
    let bound = t.abs() * mean_energy_norm + 1e-9;
    let within_bound = brute_force
        .iter()
        .chain(&transfer)
        .all(|(_, v)| v.abs() <= bound);
    Ok(PressureCurve {
        t,
        brute_force,
        transfer,
        mean_energy_norm,
        within_bound,
    })
}

/// `e^{−H_n}/Tr e^{−H_n}`.
pub fn gibbs_local_state(phi: &Interaction, n: usize, cap: Cap) -> Result<DensityOperator> {
    let h = local_hamiltonian(phi, n, cap)?;
    let sd = h.spectral_decomposition()?;
    let emin = sd.eigenvalues().first().copied().unwrap_or(0.0);
    let z: f64 = sd.eigenvalues().iter().map(|e| (-(e - emin)).exp()).sum();
    let g = sd.apply(|e| (-(e - emin)).exp() / z);
    Ok(DensityOperator::from_trusted(
        HermitianOperator::from_matrix_unchecked(g),
    ))
}
