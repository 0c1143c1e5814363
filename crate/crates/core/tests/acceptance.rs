//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero when any criterion fails.

use std::time::Instant;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinchain::factorization::{
    cp_witness, erasure_map, fcs_lower_certificate, fcs_upper_certificate, minimal_constants,
    upper_constant, ENTRY_TOL,
};
use spinchain::fcs::{from_hidden_markov, GeneratingTriple, HiddenMarkovSpec};
use spinchain::hypothesis::{
    chernoff_curve, gibbs_lower_bound, min_error, q_matrix_model, quasi_trace,
};
use spinchain::ldp::{
    local_hamiltonian, mean_energy_norm, mgf_exact, pressure_at, pressure_transfer, Interaction,
    PartitionKernel, PressureSource, RateFunctionModel, RateOptions, TransferFamily,
};
use spinchain::linalg::{self, c, CMat, C64};
use spinchain::maps::{classify_positivity_structure, cp_order_gap, spectral_radius, KrausMap};
use spinchain::{
    exp_hermitian, matrix_function, Cap, DensityOperator, HermitianOperator, MatrixFunction,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
    Mat::from_fn(r, cols, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityOperator {
    let g = random_matrix(rng, n, n);
    let p = linalg::mul(g.as_ref(), g.adjoint());
    let t = linalg::trace(p.as_ref()).re;
    DensityOperator::from_matrix(linalg::scale(p.as_ref(), c(1.0 / t))).unwrap()
}

fn positive_stochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Five hidden Markov fixtures on qubits with one to three hidden states.
fn hmm_specs() -> Vec<HiddenMarkovSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    [1usize, 2, 2, 3, 3]
        .iter()
        .map(|&states| {
            let t = positive_stochastic(&mut rng, states);
            let th = (0..states)
                .map(|_| {
                    (0..states)
                        .map(|_| Some(random_density(&mut rng, 2)))
                        .collect()
                })
                .collect();
            HiddenMarkovSpec::new(t, None, th).unwrap()
        })
        .collect()
}

fn hmm_fixtures() -> Vec<GeneratingTriple> {
    hmm_specs()
        .iter()
        .map(|s| from_hidden_markov(s).unwrap())
        .collect()
}

/// Random unital `E: M_2 ⊗ M_2 → M_2` with its stationary auxiliary state.
fn quantum_fixture() -> GeneratingTriple {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let raw: Vec<CMat> = (0..3).map(|_| random_matrix(&mut rng, 2, 4)).collect();
    let mut s = linalg::zeros(2, 2);
    for k in &raw {
        s = &s + linalg::mul(k.as_ref(), k.adjoint());
    }
    let inv = matrix_function(
        &HermitianOperator::from_matrix(s).unwrap(),
        MatrixFunction::Power(-0.5),
    )
    .unwrap();
    let ops = raw
        .iter()
        .map(|k| linalg::mul(inv.matrix(), k.as_ref()))
        .collect();
    let e = KrausMap::new(4, 2, ops).unwrap();
    GeneratingTriple::with_stationary_state(2, 2, e).unwrap().0
}

fn observable() -> HermitianOperator {
    HermitianOperator::from_real_rows(&[vec![0.6, 0.25], vec![0.25, -0.4]]).unwrap()
}

fn kron_power(a: &HermitianOperator, n: usize) -> HermitianOperator {
    let mut acc = a.clone();
    for _ in 1..n {
        acc = acc.tensor(a);
    }
    acc
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = observable();
    let mut worst = 0.0f64;
    for triple in hmm_fixtures() {
        for n in 1..=8 {
            let omega = triple.local_density(n, Cap::DEFAULT).unwrap();
            for t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let brute =
                    omega.expectation(&kron_power(&exp_hermitian(&a.scaled(t)).unwrap(), n));
                let got = mgf_exact(&triple, &a, t, n).unwrap();
                worst = worst.max((got / brute - 1.0).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs <= 10.0,
        format!("max relative error {worst:.2e}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let a = observable();
    let mut worst = 0.0f64;
    for triple in hmm_fixtures() {
        let family = TransferFamily::new(&triple, &a).unwrap();
        for k in 0..25 {
            let t = -3.0 + 6.0 * k as f64 / 24.0;
            let seq = family.log_mgf_sequence(t, 400).unwrap();
            worst = worst.max((seq[399] / 400.0 - family.log_spectral_radius(t).unwrap()).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-3 && secs <= 5.0,
        format!("max deviation {worst:.2e} at n = 400, {secs:.2} s"),
    )
}

fn criterion_3() -> Outcome {
    let p = 0.3f64;
    let triple =
        GeneratingTriple::product(&DensityOperator::from_probabilities(&[1.0 - p, p]).unwrap())
            .unwrap();
    let model = RateFunctionModel::from_triple(
        &triple,
        &HermitianOperator::from_real_diagonal(&[0.0, 1.0]),
        RateOptions::default(),
    )
    .unwrap();
    let xs: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let rates = model.rates(&xs);
    let kl = |x: f64| {
        let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
        term(x, p) + term(1.0 - x, 1.0 - p)
    };
    let err = xs
        .iter()
        .zip(&rates)
        .map(|(&x, &r)| (r - kl(x)).abs())
        .fold(0.0, f64::max);
    let at_mean = model.rate(model.mean());
    let min_second = rates
        .windows(3)
        .map(|w| w[0] + w[2] - 2.0 * w[1])
        .fold(f64::INFINITY, f64::min);
    outcome(
        err <= 1e-7 && at_mean <= 1e-8 && min_second >= -1e-9,
        format!(
            "max error {err:.2e}, I(mean) = {at_mean:.2e}, min second difference {min_second:.2e}"
        ),
    )
}

/// Strong connectivity and aperiodicity of the support digraph.
fn digraph_oracle(t: &[Vec<f64>]) -> (bool, bool) {
    let n = t.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let edge = if forward {
                    t[u][v] > 0.0
                } else {
                    t[v][u] > 0.0
                };
                if edge && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|b| b)
    };
    if !(reach(true) && reach(false)) {
        return (false, false);
    }
    let mut level = vec![i64::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if t[u][v] > 0.0 && level[v] == i64::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut period = 0;
    for u in 0..n {
        for v in 0..n {
            if t[u][v] > 0.0 {
                period = gcd(period, level[u] + 1 - level[v]);
            }
        }
    }
    (true, period == 1)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut disagreements = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let zero_prob = rng.gen_range(0.3..0.8);
        let t: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut row: Vec<f64> = (0..n)
                    .map(|_| {
                        if rng.gen_bool(zero_prob) {
                            0.0
                        } else {
                            rng.gen_range(0.05..1.0)
                        }
                    })
                    .collect();
                if row.iter().all(|&x| x == 0.0) {
                    row[rng.gen_range(0..n)] = 1.0;
                }
                let s: f64 = row.iter().sum();
                row.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let s = classify_positivity_structure(&KrausMap::from_stochastic(&t).unwrap()).unwrap();
        if (s.irreducible, s.primitive) != digraph_oracle(&t) {
            disagreements += 1;
        }
    }
    let mut worst = 0.0f64;
    for d in 2..=4 {
        for _ in 0..5 {
            let raw: Vec<CMat> = (0..3).map(|_| random_matrix(&mut rng, d, d)).collect();
            let mut s = linalg::zeros(d, d);
            for k in &raw {
                s = &s + linalg::mul(k.as_ref(), k.adjoint());
            }
            let inv = matrix_function(
                &HermitianOperator::from_matrix(s).unwrap(),
                MatrixFunction::Power(-0.5),
            )
            .unwrap();
            let map = KrausMap::new(
                d,
                d,
                raw.iter()
                    .map(|k| linalg::mul(inv.matrix(), k.as_ref()))
                    .collect(),
            )
            .unwrap();
            worst = worst.max((spectral_radius(&map).unwrap() - 1.0).abs());
        }
    }
    outcome(
        disagreements == 0 && worst <= 1e-10,
        format!("{disagreements} disagreements in 200 chains, unital radius deviation {worst:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut ok = true;
    let mut worst_witness = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    for k in 0..50 {
        let d = 2 + k % 3;
        let rho = random_density(&mut rng, d);
        let beta = upper_constant(&rho).unwrap();
        let erase = erasure_map(&rho);
        let id = KrausMap::identity(d);
        match cp_order_gap(&id, &erase).unwrap() {
            Some(gap) => {
                worst_ratio = worst_ratio.max(gap / beta);
                ok &= gap <= beta * (1.0 + 1e-12);
                let w = cp_witness(&id, &erase, beta)
                    .unwrap()
                    .min(cp_witness(&id, &erase, gap).unwrap());
                worst_witness = worst_witness.min(w);
            }
            None => ok = false,
        }
    }
    outcome(
        ok && worst_witness >= -1e-9,
        format!(
            "max gap / (d/min r) = {worst_ratio:.6}, min witness eigenvalue {worst_witness:.2e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut fixtures = hmm_fixtures();
    fixtures.push(quantum_fixture());
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for t in &fixtures {
        for (m, k) in [(2, 2), (3, 2), (2, 3)] {
            let cert = fcs_upper_certificate(t, m, k, Cap::DEFAULT).unwrap();
            ok &= cert.passed && cert.dominates;
            worst = worst.min(cert.witness);
            cases += 1;
        }
    }
    outcome(
        ok,
        format!("{cases} cases, min witness eigenvalue {worst:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut mismatches = 0;
    let mut with_zeros = 0;
    for trial in 0..50 {
        let n = rng.gen_range(2..=4);
        let mut t: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0.05..1.0)).collect())
            .collect();
        if trial % 2 == 0 {
            // keep the cycle x → x+1 so that the chain stays irreducible
            let off: Vec<(usize, usize)> = (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|&(x, y)| y != (x + 1) % n)
                .collect();
            let forced = off[rng.gen_range(0..off.len())];
            for (x, y) in off {
                if (x, y) == forced || rng.gen_bool(0.3) {
                    t[x][y] = 0.0;
                }
            }
        }
        for row in &mut t {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        let positive = t.iter().flatten().all(|&v| v > ENTRY_TOL);
        with_zeros += usize::from(!positive);
        let triple = from_hidden_markov(&HiddenMarkovSpec::classical(t, None).unwrap()).unwrap();
        let r = minimal_constants(&triple, 2, 2, Cap::DEFAULT).unwrap();
        if (r.alpha_star > 0.0) != positive {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches, {with_zeros} of 50 chains with zero entries"),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let triple = &hmm_fixtures()[2];
    let phi = Interaction::ising(0.2, [0.5, 0.0, 0.1]);
    let norm = mean_energy_norm(&phi).unwrap();
    let grid: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
    let n = 8;
    let h = local_hamiltonian(&phi, n, Cap::DEFAULT).unwrap();
    let kernel = PartitionKernel::new(&triple.local_density(n, Cap::DEFAULT).unwrap(), &h).unwrap();
    let vals: Vec<f64> = grid
        .iter()
        .map(|&t| kernel.log_laplace(t) / n as f64)
        .collect();
    let min_second = vals
        .windows(3)
        .map(|w| w[0] + w[2] - 2.0 * w[1])
        .fold(f64::INFINITY, f64::min);
    let bound_ok = grid
        .iter()
        .zip(&vals)
        .all(|(&t, &v)| v.abs() <= t.abs() * norm + 1e-9);
    let mut gap = 0.0f64;
    for size in 8..=10 {
        for &t in &[-1.0, -0.5, 0.5, 1.0] {
            let brute =
                pressure_at(PressureSource::Triple(triple), &phi, t, size, Cap::DEFAULT).unwrap();
            let transfer = pressure_transfer(triple, &phi, t, size, Cap::DEFAULT).unwrap();
            gap = gap.max((brute - transfer).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        min_second >= -1e-9 && bound_ok && gap <= 2e-2 && secs <= 60.0,
        format!("min second difference {min_second:.2e}, bound {bound_ok}, max brute/transfer gap {gap:.2e}, {secs:.2} s"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut route_gap = 0.0f64;
    let mut audenaert = f64::NEG_INFINITY;
    for _ in 0..100 {
        let d = rng.gen_range(2..=32);
        let (a, b) = (random_density(&mut rng, d), random_density(&mut rng, d));
        let r = min_error(&a, &b, 0.5).unwrap();
        let proj = HermitianOperator::new(r.optimal_projection.clone()).unwrap();
        let direct = 0.5 * (1.0 - a.expectation(&proj)) + 0.5 * b.expectation(&proj);
        route_gap = route_gap
            .max((direct - r.p_min_trace_norm).abs())
            .max((r.p_min - r.p_min_trace_norm).abs());
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            audenaert = audenaert.max(r.p_min - 0.5 * quasi_trace(&a, &b, t).unwrap());
        }
    }
    outcome(
        route_gap <= 1e-11 && audenaert <= 1e-10,
        format!("max route gap {route_gap:.2e}, max p_min − q/2 = {audenaert:.2e}"),
    )
}

fn rotated_spec(t: Vec<Vec<f64>>, angle: f64) -> HiddenMarkovSpec {
    let (cs, sn) = (angle.cos(), angle.sin());
    let e0 = DensityOperator::pure(&[c(cs), C64::new(0.0, sn)]).unwrap();
    let e1 = DensityOperator::pure(&[C64::new(0.0, sn), c(cs)]).unwrap();
    HiddenMarkovSpec::emitting(t, None, &[e0, e1]).unwrap()
}

fn criterion_10() -> Outcome {
    let a = rotated_spec(vec![vec![0.8, 0.2], vec![0.35, 0.65]], 0.0);
    let b = rotated_spec(vec![vec![0.3, 0.7], vec![0.6, 0.4]], 0.4);
    let (ta, tb) = (
        from_hidden_markov(&a).unwrap(),
        from_hidden_markov(&b).unwrap(),
    );
    let mut rel = 0.0f64;
    let mut slope = 0.0f64;
    for k in 1..=9 {
        let t = k as f64 / 10.0;
        let model = q_matrix_model(&a, &b, t).unwrap();
        for n in 1..=4 {
            let brute = quasi_trace(
                &ta.local_density(n, Cap::DEFAULT).unwrap(),
                &tb.local_density(n, Cap::DEFAULT).unwrap(),
                t,
            )
            .unwrap();
            rel = rel.max((model.pairing(n) / brute - 1.0).abs());
        }
        slope = slope.max((model.log_pairing(61) - model.log_pairing(60) - model.xi).abs());
    }
    outcome(
        rel <= 1e-8 && slope <= 1e-6,
        format!("max relative error {rel:.2e}, max slope deviation {slope:.2e}"),
    )
}

fn criterion_11() -> Outcome {
    let specs = hmm_specs();
    let (a, b) = (
        from_hidden_markov(&specs[1]).unwrap(),
        from_hidden_markov(&specs[2]).unwrap(),
    );
    let beta = upper_constant(a.rho())
        .unwrap()
        .max(upper_constant(b.rho()).unwrap());
    let alpha = match (
        fcs_lower_certificate(&a).unwrap().alpha,
        fcs_lower_certificate(&b).unwrap().alpha,
    ) {
        (Some(x), Some(y)) => x.min(y),
        _ => return outcome(false, "no lower certificate"),
    };
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let sweep: Vec<usize> = (1..=8).collect();
    let curve =
        chernoff_curve(&a, &b, &grid, &sweep, Some(beta), Some(alpha), Cap::DEFAULT).unwrap();
    let (up, lo) = (
        curve.upper_envelope.as_ref().unwrap(),
        curve.lower_envelope.as_ref().unwrap(),
    );
    let row = curve.finite_n.last().unwrap();
    let mut slack = f64::INFINITY;
    for j in 0..grid.len() {
        let x = row[j].value();
        slack = slack.min(up[j].value() - x).min(x - lo[j].value());
    }
    outcome(
        slack >= -1e-9,
        format!("β = {beta:.4}, α = {alpha:.4}, min envelope slack {slack:.2e}"),
    )
}

fn criterion_12() -> Outcome {
    let pairs = [
        (
            Interaction::ising(0.6, [0.4, 0.0, 0.2]),
            Interaction::ising(-0.3, [0.1, 0.5, 0.0]),
        ),
        (
            Interaction::ising(1.0, [1.0, 0.0, 0.0]),
            Interaction::ising(0.0, [0.0, 0.0, 1.0]),
        ),
    ];
    let sweep: Vec<usize> = (1..=8).collect();
    let mut holds = true;
    for (phi, psi) in &pairs {
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            holds &= gibbs_lower_bound(phi, psi, t, &sweep, Cap::DEFAULT)
                .unwrap()
                .rows
                .iter()
                .all(|r| r.golden_thompson_holds);
        }
    }
    let f1 = Interaction::one_site(HermitianOperator::from_real_diagonal(&[0.3, -0.8]));
    let f2 = Interaction::one_site(HermitianOperator::from_real_diagonal(&[1.1, 0.2]));
    let zz = Interaction::ising(0.7, [0.0, 0.0, 0.3]);
    let mut equality = 0.0f64;
    for (phi, psi) in [(&f1, &f2), (&f1, &zz)] {
        for t in [0.2, 0.5, 0.8] {
            for r in gibbs_lower_bound(phi, psi, t, &sweep, Cap::DEFAULT)
                .unwrap()
                .rows
            {
                equality = equality.max((r.golden_thompson_product - r.golden_thompson_sum).abs());
            }
        }
    }
    outcome(
        holds && equality <= 1e-11,
        format!("inequality holds {holds}, commuting defect {equality:.2e}"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("transfer and brute-force MGF agree", criterion_1),
        ("log-MGF converges to log spectral radius", criterion_2),
        ("Cramér rate function for Bernoulli", criterion_3),
        ("Perron-Frobenius classifier", criterion_4),
        ("CP-order certificate", criterion_5),
        ("FCS upper factorization certificate", criterion_6),
        ("Markov lower-factorization criterion", criterion_7),
        (
            "pressure convexity, bound and transfer agreement",
            criterion_8,
        ),
        ("minimum error routes and Audenaert inequality", criterion_9),
        ("Q(t) transfer model", criterion_10),
        ("Chernoff sandwich envelopes", criterion_11),
        ("Golden-Thompson finite-n inequality", criterion_12),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name} ({})", k + 1, result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
