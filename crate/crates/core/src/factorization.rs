//! Upper and lower factorization constants of chain states, certificates for
//! finitely correlated states and lower-factorization criteria for hidden
//! Markov models.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcs::{GeneratingTriple, HiddenMarkovSpec};
use crate::ldp::Interaction;
use crate::linalg::{self, c};
use crate::maps::{choi_matrix, cp_order_gap, KrausMap, LinearMap};
use crate::operator::{
    dominance_constant, partial_trace, relative_entropy, support_projection, DensityOperator,
};
use crate::source::{LocalGibbs, StateSource};
use crate::Cap;

/// Threshold for `T_xy > 0`.
pub const ENTRY_TOL: f64 = 1e-12;
/// Admissible negativity of a PSD witness.
pub const PSD_TOL: f64 = 1e-9;
/// Agreement of support projections in the hidden Markov criteria.
pub const SUPPORT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub m: usize,
    pub k: usize,
    pub l: Option<usize>,
    /// Minimal `c` with `ω̂_{km} ≤ c ω̂_m^{⊗k}`, `+∞` on a support leak.
    pub beta_star: f64,
    /// `beta_star^{1/(k−1)}`.
    pub beta_root: f64,
    /// Maximal `c` with `ω̂_{km} ≥ c ω̂_m^{⊗k}`, `0` on a support leak.
    pub alpha_star: f64,
    /// `alpha_star^{1/(k−1)}`.
    pub alpha_root: f64,
    pub support_ok_upper: bool,
    pub support_ok_lower: bool,
    /// `λ_min(beta_star ω̂_m^{⊗k} − ω̂_{km})`.
    pub upper_witness: Option<f64>,
    /// `λ_min(ω̂_{km} − alpha_star ω̂_m^{⊗k})`.
    pub lower_witness: Option<f64>,
}

fn root(x: f64, k: usize) -> f64 {
    x.powf(1.0 / (k as f64 - 1.0))
}

fn compare(
    joint: &DensityOperator,
    block: &DensityOperator,
    m: usize,
    k: usize,
    l: Option<usize>,
) -> Result<FactorizationReport> {
    let power = block.tensor_power(k);
    let (j, p) = (joint.as_hermitian(), power.as_hermitian());
    let upper = dominance_constant(j, p, None)?;
    let lower = dominance_constant(p, j, None)?;
    let beta_star = upper.unwrap_or(f64::INFINITY);
    let alpha_star = match lower {
        Some(v) if v > 0.0 => 1.0 / v,
        _ => 0.0,
    };
    let upper_witness = match upper {
        Some(b) => Some(p.scaled(b).sub(j).min_eigenvalue()?),
        None => None,
    };
    let lower_witness = if alpha_star > 0.0 {
        Some(j.sub(&p.scaled(alpha_star)).min_eigenvalue()?)
    } else {
        None
    };
    Ok(FactorizationReport {
        m,
        k,
        l,
        beta_star,
        beta_root: root(beta_star, k),
        alpha_star,
        alpha_root: root(alpha_star, k),
        support_ok_upper: upper.is_some(),
        support_ok_lower: lower.is_some(),
        upper_witness,
        lower_witness,
    })
}

fn check_blocks(m: usize, k: usize) -> Result<()> {
    if m == 0 || k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need m ≥ 1 and k ≥ 2, got m = {m}, k = {k}"
        )));
    }
    Ok(())
}

/// Optimal constants comparing `ω̂_{km}` with `ω̂_m^{⊗k}`.
pub fn minimal_constants(
    source: &dyn StateSource,
    m: usize,
    k: usize,
    cap: Cap,
) -> Result<FactorizationReport> {
    check_blocks(m, k)?;
    cap.check_power(source.site_dim(), k * m)?;
    compare(
        &source.local_density(k * m, cap)?,
        &source.local_density(m, cap)?,
        m,
        k,
        None,
    )
}

/// `σ ↦ Tr(σ) ρ̂`, with Kraus operators `√ρ̂ |i⟩⟨j|`.
pub fn erasure_map(rho: &DensityOperator) -> KrausMap {
    let d = rho.dim();
    let sd = rho
        .as_hermitian()
        .spectral_decomposition()
        .expect("cached decomposition");
    let sqrt = sd.apply(|x| x.max(0.0).sqrt());
    let mut ops = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            ops.push(faer::Mat::from_fn(d, d, |r, col| {
                if col == j {
                    sqrt[(r, i)]
                } else {
                    c(0.0)
                }
            }));
        }
    }
    KrausMap::new(d, d, ops).expect("square operators")
}

/// `dim K / λ_min(ρ̂)`, for which `id ≤_CP β R_ρ̂`.
pub fn upper_constant(rho: &DensityOperator) -> Result<f64> {
    let min = rho.as_hermitian().min_eigenvalue()?;
    if min <= 0.0 {
        return Err(Error::NotFaithful {
            min_eigenvalue: min,
        });
    }
    Ok(rho.dim() as f64 / min)
}

/// Minimal eigenvalue of `Choi(β Ψ − Φ)`.
pub fn cp_witness(phi: &impl LinearMap, psi: &impl LinearMap, beta: f64) -> Result<f64> {
    let (a, b) = (choi_matrix(phi)?, choi_matrix(psi)?);
    b.matrix.scaled(beta).sub(&a.matrix).min_eigenvalue()
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperCertificate {
    pub m: usize,
    pub k: usize,
    /// `d_B / λ_min(ρ̂)`.
    pub beta: f64,
    /// `λ_min(β^{k−1} ω̂_m^{⊗k} − ω̂_{km})`.
    pub witness: f64,
    pub passed: bool,
    pub minimal: FactorizationReport,
    /// `beta ≥ minimal.beta_root`.
    pub dominates: bool,
    /// Tightest `c` with `id ≤_CP c R_ρ̂`.
    pub cp_beta: Option<f64>,
}

pub fn fcs_upper_certificate(
    triple: &GeneratingTriple,
    m: usize,
    k: usize,
    cap: Cap,
) -> Result<UpperCertificate> {
    check_blocks(m, k)?;
    let beta = upper_constant(triple.rho())?;
    let minimal = minimal_constants(triple, m, k, cap)?;
    let joint = triple.local_density(k * m, cap)?;
    let power = triple.local_density(m, cap)?.tensor_power(k);
    let witness = power
        .as_hermitian()
        .scaled(beta.powi(k as i32 - 1))
        .sub(joint.as_hermitian())
        .min_eigenvalue()?;
    let cp_beta = cp_order_gap(
        &KrausMap::identity(triple.d_b()),
        &erasure_map(triple.rho()),
    )?;
    Ok(UpperCertificate {
        m,
        k,
        beta,
        witness,
        passed: witness >= -PSD_TOL,
        dominates: beta >= minimal.beta_root * (1.0 - PSD_TOL),
        minimal,
        cp_beta,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerCertificate {
    /// Minimal `c` with `E* ∘ R_ρ̂ ≤_CP c E*`.
    pub gap_before: Option<f64>,
    /// Minimal `c` with `(id_A ⊗ R_ρ̂) ∘ E* ≤_CP c E*`.
    pub gap_after: Option<f64>,
    /// `1 / min(gap_before, gap_after)`: then `ω̂_{km} ≥ α^{k−1} ω̂_m^{⊗k}`
    /// for all `m, k`.
    pub alpha: Option<f64>,
}

/// Lower factorization constant of a finitely correlated state obtained by
/// comparing the erased and the plain one-step maps in CP order.
pub fn fcs_lower_certificate(triple: &GeneratingTriple) -> Result<LowerCertificate> {
    let e_star = triple.e_star();
    let erase = erasure_map(triple.rho());
    let before = e_star.compose(&erase)?;
    let id_a = linalg::identity(triple.d_a());
    let lifted = KrausMap::new(
        triple.d_a() * triple.d_b(),
        triple.d_a() * triple.d_b(),
        erase
            .ops()
            .iter()
            .map(|r| linalg::kron(id_a.as_ref(), r.as_ref()))
            .collect(),
    )?;
    let after = lifted.compose(e_star)?;
    let gap_before = cp_order_gap(&before, e_star)?;
    let gap_after = cp_order_gap(&after, e_star)?;
    let best = [gap_before, gap_after]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    let alpha = (best.is_finite() && best > 0.0).then(|| 1.0 / best);
    Ok(LowerCertificate {
        gap_before,
        gap_after,
        alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LowerCriteria {
    /// Every transition probability is positive.
    pub markov_tp: bool,
    /// The support of each emission depends only on the target state.
    pub support_by_target: bool,
    /// The support of each emission depends only on the source state.
    pub support_by_source: bool,
}

pub fn hmm_lower_criteria(spec: &HiddenMarkovSpec) -> Result<LowerCriteria> {
    let n = spec.state_count();
    let markov_tp = spec.transition().iter().flatten().all(|&v| v > ENTRY_TOL);
    if !markov_tp {
        return Ok(LowerCriteria {
            markov_tp,
            support_by_target: false,
            support_by_source: false,
        });
    }
    let mut proj = Vec::with_capacity(n);
    for x in 0..n {
        let mut row = Vec::with_capacity(n);
        for y in 0..n {
            let th = spec
                .theta(x, y)
                .ok_or_else(|| Error::InvalidArgument(format!("missing emission ({x},{y})")))?;
            row.push(support_projection(th.as_hermitian(), None)?);
        }
        proj.push(row);
    }
    let same =
        |a: &crate::ComplexOperator, b: &crate::ComplexOperator| a.max_abs_diff(b) <= SUPPORT_TOL;
    let support_by_target = (0..n).all(|y| (1..n).all(|x| same(&proj[x][y], &proj[0][y])));
    let support_by_source = (0..n).all(|x| (1..n).all(|y| same(&proj[x][y], &proj[x][0])));
    Ok(LowerCriteria {
        markov_tp,
        support_by_target,
        support_by_source,
    })
}

/// Constants for `k` blocks of length `m` separated by gaps of length `l`,
/// the gap sites traced out.
pub fn weak_upper_check(
    source: &dyn StateSource,
    m: usize,
    l: usize,
    k: usize,
    cap: Cap,
) -> Result<FactorizationReport> {
    check_blocks(m, k)?;
    let span = k * m + (k - 1) * l;
    let d = source.site_dim();
    cap.check_power(d, span)?;
    let full = source.local_density(span, cap)?;
    let joint = if l == 0 {
        full
    } else {
        let keep: Vec<usize> = (0..span).filter(|s| s % (m + l) < m).collect();
        let reduced = partial_trace(full.as_hermitian().as_operator(), &vec![d; span], &keep)?;
        DensityOperator::from_matrix(reduced.into_matrix())?
    };
    compare(&joint, &source.local_density(m, cap)?, m, k, Some(l))
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsFactorizationEstimate {
    pub report: FactorizationReport,
    /// `beta_star^{1/k}`.
    pub per_block: f64,
}

/// Constants for local Gibbs states `e^{−H_n}/Tr e^{−H_n}`.
pub fn gibbs_factorization_estimate(
    phi: &Interaction,
    m: usize,
    k: usize,
    cap: Cap,
) -> Result<GibbsFactorizationEstimate> {
    let report = minimal_constants(&LocalGibbs(phi.clone()), m, k, cap)?;
    let per_block = report.beta_star.powf(1.0 / k as f64);
    Ok(GibbsFactorizationEstimate { report, per_block })
}

/// `S(φ̂_n ‖ ω̂_n) / n`.
pub fn mean_relative_entropy(
    phi: &dyn StateSource,
    omega: &dyn StateSource,
    n: usize,
    cap: Cap,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "chain length must be positive".into(),
        ));
    }
    Ok(relative_entropy(&phi.local_density(n, cap)?, &omega.local_density(n, cap)?)? / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcs::from_hidden_markov;
    use crate::maps::choi_and_cp_check;
    use crate::source::{ExplicitDensities, ProductState};
    use crate::testutil::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(p: &[f64]) -> DensityOperator {
        DensityOperator::from_probabilities(p).unwrap()
    }

    fn random_hmm(rng: &mut ChaCha8Rng, states: usize, zero_prob: f64) -> HiddenMarkovSpec {
        let t = random_stochastic(rng, states, zero_prob);
        let th = (0..states)
            .map(|_| (0..states).map(|_| Some(random_density(rng, 2))).collect())
            .collect();
        HiddenMarkovSpec::new(t, None, th).unwrap()
    }

    /// Irreducible chain; when `zeros`, some off-cycle entries vanish.
    fn irreducible_chain(rng: &mut ChaCha8Rng, n: usize, zeros: bool) -> Vec<Vec<f64>> {
        let mut t: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0.05..1.0)).collect())
            .collect();
        if zeros {
            let off_cycle: Vec<(usize, usize)> = (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|&(x, y)| y != (x + 1) % n)
                .collect();
            let forced = off_cycle[rng.gen_range(0..off_cycle.len())];
            for (x, y) in off_cycle {
                if (x, y) == forced || rng.gen_bool(0.3) {
                    t[x][y] = 0.0;
                }
            }
        }
        for row in &mut t {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        t
    }

    #[test]
    fn product_state_constants_are_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let src = ProductState(random_density(&mut rng, 2));
        let r = minimal_constants(&src, 1, 3, Cap::DEFAULT).unwrap();
        assert!((r.beta_star - 1.0).abs() < 1e-9 && (r.alpha_star - 1.0).abs() < 1e-9);
        let w = weak_upper_check(&src, 1, 2, 2, Cap::DEFAULT).unwrap();
        assert!((w.beta_star - 1.0).abs() < 1e-9);
    }

    #[test]
    fn correlated_pair_has_beta_two() {
        let two = DensityOperator::from_probabilities(&[0.5, 0.0, 0.0, 0.5]).unwrap();
        let src = ExplicitDensities::new(2, vec![diag(&[0.5, 0.5]), two]).unwrap();
        let r = minimal_constants(&src, 1, 2, Cap::DEFAULT).unwrap();
        assert!((r.beta_star - 2.0).abs() < 1e-12);
        assert_eq!(r.alpha_star, 0.0);
        assert!(!r.support_ok_lower && r.support_ok_upper);
    }

    #[test]
    fn witnesses_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..5 {
            let t = from_hidden_markov(&random_hmm(&mut rng, 2, 0.0)).unwrap();
            let r = minimal_constants(&t, 2, 2, Cap::DEFAULT).unwrap();
            assert!(r.upper_witness.unwrap() >= -PSD_TOL);
            assert!(r.lower_witness.unwrap() >= -PSD_TOL);
            assert!(r.alpha_star <= 1.0 + 1e-9 && r.beta_star >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn markov_chain_with_zero_entry_has_no_lower_constant() {
        let spec = HiddenMarkovSpec::classical(vec![vec![0.5, 0.5], vec![1.0, 0.0]], None).unwrap();
        let r = minimal_constants(&from_hidden_markov(&spec).unwrap(), 2, 2, Cap::DEFAULT).unwrap();
        assert_eq!(r.alpha_star, 0.0);
        let c = hmm_lower_criteria(&spec).unwrap();
        assert!(!c.markov_tp && !c.support_by_target && !c.support_by_source);
    }

    #[test]
    fn markov_criterion_battery() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for trial in 0..20 {
            let n = rng.gen_range(2..4);
            let t = irreducible_chain(&mut rng, n, trial % 2 == 0);
            let positive = t.iter().flatten().all(|&v| v > ENTRY_TOL);
            let spec = HiddenMarkovSpec::classical(t, None).unwrap();
            let r =
                minimal_constants(&from_hidden_markov(&spec).unwrap(), 2, 2, Cap::DEFAULT).unwrap();
            assert_eq!(r.alpha_star > 0.0, positive, "trial {trial}");
            assert_eq!(hmm_lower_criteria(&spec).unwrap().markov_tp, positive);
        }
    }

    #[test]
    fn upper_certificate_cases() {
        let prod = GeneratingTriple::product(&diag(&[0.3, 0.7])).unwrap();
        let cert = fcs_upper_certificate(&prod, 2, 2, Cap::DEFAULT).unwrap();
        assert_eq!(cert.beta, 1.0);
        assert!(cert.witness.abs() < 1e-12 && cert.passed && cert.dominates);

        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let th = (0..2)
            .map(|_| (0..2).map(|_| Some(random_density(&mut rng, 2))).collect())
            .collect();
        let spec = HiddenMarkovSpec::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], None, th).unwrap();
        let cert =
            fcs_upper_certificate(&from_hidden_markov(&spec).unwrap(), 2, 2, Cap::DEFAULT).unwrap();
        assert!((cert.beta - 4.0).abs() < 1e-12);
        assert!(cert.passed && cert.dominates);

        for _ in 0..4 {
            let chain = irreducible_chain(&mut rng, 3, true);
            let th = (0..3)
                .map(|_| (0..3).map(|_| Some(random_density(&mut rng, 2))).collect())
                .collect();
            let t = from_hidden_markov(&HiddenMarkovSpec::new(chain, None, th).unwrap()).unwrap();
            for (m, k) in [(2, 2), (3, 2), (2, 3)] {
                let cert = fcs_upper_certificate(&t, m, k, Cap::DEFAULT).unwrap();
                assert!(cert.passed && cert.dominates, "(m, k) = ({m}, {k})");
                assert!(cert.cp_beta.unwrap() <= cert.beta * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn upper_constant_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for d in 2..=4 {
            let rho = random_density(&mut rng, d);
            let beta = upper_constant(&rho).unwrap();
            let erase = erasure_map(&rho);
            let (_, cp) = choi_and_cp_check(&erase).unwrap();
            assert!(cp);
            let gap = cp_order_gap(&KrausMap::identity(d), &erase)
                .unwrap()
                .unwrap();
            assert!(gap <= beta * (1.0 + 1e-12));
            assert!(cp_witness(&KrausMap::identity(d), &erase, beta).unwrap() >= -PSD_TOL);
            assert!(cp_witness(&KrausMap::identity(d), &erase, gap).unwrap() >= -PSD_TOL);
        }
        assert!(upper_constant(&diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn lower_certificate_bounds_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        for _ in 0..4 {
            let t = from_hidden_markov(&random_hmm(&mut rng, 2, 0.0)).unwrap();
            let cert = fcs_lower_certificate(&t).unwrap();
            let alpha = cert.alpha.unwrap();
            assert!(alpha > 0.0 && alpha <= 1.0 + 1e-12);
            for (m, k) in [(1, 2), (2, 2), (1, 3), (2, 3)] {
                let r = minimal_constants(&t, m, k, Cap::DEFAULT).unwrap();
                assert!(alpha <= r.alpha_root * (1.0 + 1e-9));
                let joint = t.local_density(k * m, Cap::DEFAULT).unwrap();
                let power = t.local_density(m, Cap::DEFAULT).unwrap().tensor_power(k);
                let w = joint
                    .as_hermitian()
                    .sub(&power.as_hermitian().scaled(alpha.powi(k as i32 - 1)));
                assert!(w.min_eigenvalue().unwrap() >= -PSD_TOL);
            }
        }
        let prod = GeneratingTriple::product(&diag(&[0.3, 0.7])).unwrap();
        assert!((fcs_lower_certificate(&prod).unwrap().alpha.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn criteria_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let th = random_density(&mut rng, 2);
        let spec = HiddenMarkovSpec::uniform_theta(vec![vec![0.6, 0.4], vec![0.3, 0.7]], None, &th)
            .unwrap();
        assert_eq!(
            hmm_lower_criteria(&spec).unwrap(),
            LowerCriteria {
                markov_tp: true,
                support_by_target: true,
                support_by_source: true
            }
        );
        // supports follow the emitting state only: still lower factorizing
        let spec = HiddenMarkovSpec::emitting(
            vec![vec![0.6, 0.4], vec![0.3, 0.7]],
            None,
            &[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])],
        )
        .unwrap();
        let crit = hmm_lower_criteria(&spec).unwrap();
        assert!(crit.markov_tp && !crit.support_by_target && crit.support_by_source);
        let r = minimal_constants(&from_hidden_markov(&spec).unwrap(), 2, 2, Cap::DEFAULT).unwrap();
        assert!(r.alpha_star > 0.0);
        // letter 1 forces the next hidden state to 1, letter 0 needs it to be 0
        let e = |k: usize| {
            let mut p = [0.0; 3];
            p[k] = 1.0;
            Some(diag(&p))
        };
        let theta = vec![vec![e(0), e(1)], vec![e(2), e(2)]];
        let spec =
            HiddenMarkovSpec::new(vec![vec![0.6, 0.4], vec![0.3, 0.7]], None, theta).unwrap();
        let crit = hmm_lower_criteria(&spec).unwrap();
        assert!(crit.markov_tp && !crit.support_by_target && !crit.support_by_source);
        let r = minimal_constants(&from_hidden_markov(&spec).unwrap(), 2, 2, Cap::DEFAULT).unwrap();
        assert_eq!(r.alpha_star, 0.0);
        assert!(!r.support_ok_lower);
    }

    #[test]
    fn weak_check_reduces_to_minimal_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let t = from_hidden_markov(&random_hmm(&mut rng, 2, 0.0)).unwrap();
        let a = minimal_constants(&t, 2, 2, Cap::DEFAULT).unwrap();
        let b = weak_upper_check(&t, 2, 0, 2, Cap::DEFAULT).unwrap();
        assert!((a.beta_star - b.beta_star).abs() < 1e-12 * a.beta_star);
        assert!((a.alpha_star - b.alpha_star).abs() < 1e-12);
        let gap = weak_upper_check(&t, 2, 1, 2, Cap::DEFAULT).unwrap();
        assert!(gap.beta_star.is_finite() && gap.upper_witness.unwrap() >= -PSD_TOL);
    }

    #[test]
    fn gibbs_estimates() {
        let r = gibbs_factorization_estimate(&Interaction::zero(2), 1, 2, Cap::DEFAULT).unwrap();
        assert!((r.report.beta_star - 1.0).abs() < 1e-12);
        let h =
            crate::operator::HermitianOperator::from_real_rows(&[vec![0.3, 0.2], vec![0.2, -0.4]])
                .unwrap();
        let r =
            gibbs_factorization_estimate(&Interaction::one_site(h), 2, 2, Cap::DEFAULT).unwrap();
        assert!(
            (r.report.beta_star - 1.0).abs() < 1e-9 && (r.report.alpha_star - 1.0).abs() < 1e-9
        );
        let ising = Interaction::ising(0.8, [0.5, 0.0, 0.1]);
        for m in 2..=4 {
            let r = gibbs_factorization_estimate(&ising, m, 2, Cap::DEFAULT).unwrap();
            assert!(r.report.beta_star.is_finite() && r.report.beta_star > 1.0);
        }
    }

    #[test]
    fn mean_relative_entropy_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let (a, b) = (random_density(&mut rng, 2), random_density(&mut rng, 2));
        let one = relative_entropy(&a, &b).unwrap();
        let v = mean_relative_entropy(&ProductState(a), &ProductState(b), 3, Cap::DEFAULT).unwrap();
        assert!((v - one).abs() < 1e-10);
    }
}
