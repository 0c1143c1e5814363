use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use spinchain::factorization::{
    fcs_lower_certificate, fcs_upper_certificate, gibbs_factorization_estimate, hmm_lower_criteria,
    minimal_constants, upper_constant, weak_upper_check, FactorizationReport,
};
use spinchain::fcs::classify_ergodicity;
use spinchain::hypothesis::{
    chernoff_curve, gibbs_lower_bound, min_error_at, q_matrix_model, Exponent,
};
use spinchain::ldp::{
    average_observable, mean_energy_norm, pressure_curve, spectral_distribution, Interaction,
    PressureSource, RateFunctionModel, RateOptions, TransferFamily,
};
use spinchain::{Cap, HermitianOperator};

use crate::error::CliError;
use crate::model::{load_model, load_observable, Body, Model, Tolerances};
use crate::output::{num, opt_num, Cell, Output, Table};
use crate::{Command, Grid};

pub fn run(cmd: &Command, tol: Tolerances, out: &Output) -> Result<(), CliError> {
    let cap = Cap::from_env();
    let name = cmd.name();
    let (table, summary) = match cmd {
        Command::Validate { model } => (None, validate(&load_model(model, tol)?)?),
        Command::Ergodicity { model } => ergodicity(&load_model(model, tol)?)?,
        Command::Density { model, n_max } => density(&load_model(model, tol)?, *n_max, cap)?,
        Command::Mgf {
            model,
            observable,
            grid,
            n_max,
        } => {
            let m = load_model(model, tol)?;
            let a = observable_for(&m, observable.as_deref(), tol)?;
            mgf(&m, &a, &t_grid(grid, (-2.0, 2.0), 41)?, *n_max)?
        }
        Command::RateFunction {
            model,
            observable,
            grid,
            x_steps,
        } => {
            let m = load_model(model, tol)?;
            let a = observable_for(&m, observable.as_deref(), tol)?;
            rate_function(&m, &a, &t_grid(grid, (-3.0, 3.0), 121)?, *x_steps)?
        }
        Command::Distribution {
            model,
            observable,
            n_max,
        } => {
            let m = load_model(model, tol)?;
            let a = observable_for(&m, observable.as_deref(), tol)?;
            distribution(&m, &a, *n_max, cap)?
        }
        Command::Pressure {
            model,
            interaction,
            grid,
            n_max,
        } => {
            let m = load_model(model, tol)?;
            let extra = interaction
                .as_deref()
                .map(|p| load_model(p, tol))
                .transpose()?;
            let phi = match &extra {
                Some(i) => i.interaction(),
                None => m.interaction(),
            }
            .ok_or_else(|| {
                CliError::Usage(
                    "pressure needs an interaction or gibbs model (--interaction)".into(),
                )
            })?;
            pressure(&m, phi, &t_grid(grid, (-1.0, 1.0), 21)?, *n_max, cap)?
        }
        Command::Factorization { model, m, k, l } => {
            factorization(&load_model(model, tol)?, *m, *k, *l, cap)?
        }
        Command::Chernoff {
            model_a,
            model_b,
            grid,
            n_max,
        } => {
            let (a, b) = (load_model(model_a, tol)?, load_model(model_b, tol)?);
            chernoff(&a, &b, &t_grid(grid, (0.0, 1.0), 21)?, *n_max, cap)?
        }
        Command::Pmin {
            model_a,
            model_b,
            n_max,
            kappa,
        } => {
            let (a, b) = (load_model(model_a, tol)?, load_model(model_b, tol)?);
            pmin(&a, &b, *n_max, *kappa, cap)?
        }
        Command::GibbsBound {
            model_a,
            model_b,
            grid,
            n_max,
        } => {
            let (a, b) = (load_model(model_a, tol)?, load_model(model_b, tol)?);
            gibbs_bound(&a, &b, &t_grid(grid, (0.0, 1.0), 11)?, *n_max, cap)?
        }
    };
    if let Some(t) = table {
        println!("{}", out.write_table(name, &t)?.display());
    }
    println!("{}", out.write_summary(name, &summary)?.display());
    Ok(())
}

type Report = (Option<Table>, Value);

fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

fn t_grid(g: &Grid, default: (f64, f64), default_steps: usize) -> Result<Vec<f64>, CliError> {
    let (lo, hi) = match g.t_range.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        Some(_) => return Err(CliError::Usage("--t-range takes two values".into())),
        None => default,
    };
    let steps = g.t_steps.unwrap_or(default_steps);
    if steps == 0 || lo > hi || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Usage(format!(
            "empty or invalid t-grid [{lo}, {hi}] with {steps} steps"
        )));
    }
    Ok(linspace(lo, hi, steps))
}

fn positive(n: usize, what: &str) -> Result<usize, CliError> {
    if n == 0 {
        Err(CliError::Usage(format!("{what} must be positive")))
    } else {
        Ok(n)
    }
}

fn observable_for(
    m: &Model,
    path: Option<&Path>,
    tol: Tolerances,
) -> Result<HermitianOperator, CliError> {
    match path {
        Some(p) => load_observable(p, m.site_dim(), tol),
        None => m.observable.clone().ok_or_else(|| {
            CliError::Usage("no observable: pass --observable or add payload.observable".into())
        }),
    }
}

fn triple_of<'a>(
    m: &'a Model,
    what: &str,
) -> Result<&'a spinchain::fcs::GeneratingTriple, CliError> {
    m.triple().ok_or_else(|| {
        CliError::Usage(format!(
            "{what} needs a finitely correlated model (triple, hidden_markov or product)"
        ))
    })
}

fn validate(m: &Model) -> Result<Value, CliError> {
    let mut s = json!({"valid": true, "model": m.summary()});
    if let Some(v) = &m.validation {
        s["residuals"] = json!({
            "unitality": num(v.unitality_residual),
            "choi_min_eigenvalue": num(v.choi_min_eigenvalue),
            "rho_min_eigenvalue": num(v.rho_min_eigenvalue),
            "invariance": num(v.invariance_residual),
        });
        s["checks"] = json!({
            "unital": v.unital,
            "completely_positive": v.completely_positive,
            "faithful": v.faithful,
            "invariant": v.invariant,
        });
    }
    if let Some(spec) = m.hidden_markov() {
        let c = hmm_lower_criteria(spec)?;
        s["hidden_markov"] = json!({
            "states": spec.state_count(),
            "stationary": spec.stationary().iter().map(|&p| num(p)).collect::<Vec<_>>(),
            "lower_criteria": {"markov_tp": c.markov_tp, "support_by_target": c.support_by_target, "support_by_source": c.support_by_source},
        });
    }
    if let Some(phi) = m.interaction() {
        s["mean_energy_norm"] = num(mean_energy_norm(phi)?);
    }
    Ok(s)
}

fn ergodicity(m: &Model) -> Result<Report, CliError> {
    let r = classify_ergodicity(triple_of(m, "ergodicity")?)?;
    let p = &r.perron;
    let mut table = Table::new(["re", "im", "modulus"]);
    for z in &p.peripheral_eigenvalues {
        table.push(vec![z.re.into(), z.im.into(), z.norm().into()]);
    }
    let summary = json!({
        "model": m.summary(),
        "ergodic": r.ergodic,
        "strongly_mixing": r.strongly_mixing,
        "spectral_radius": num(p.spectral_radius),
        "geometric_multiplicity": p.geometric_multiplicity,
        "adjoint_geometric_multiplicity": p.adjoint_geometric_multiplicity,
        "cluster_size": p.cluster_size,
        "peripheral_count": p.peripheral_eigenvalues.len(),
        "warnings": p.warnings,
    });
    Ok((Some(table), summary))
}

fn density(m: &Model, n_max: usize, cap: Cap) -> Result<Report, CliError> {
    positive(n_max, "--n-max")?;
    cap.check_power(m.site_dim(), n_max)?;
    let rows = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let rho = m.source().local_density(n, cap)?;
            let ev = rho.as_hermitian().eigenvalues()?.to_vec();
            let entropy: f64 = ev.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
            let rank = ev
                .iter()
                .filter(|&&x| x > spinchain::fcs::FAITHFUL_TOL)
                .count();
            Ok(vec![
                n.into(),
                rho.dim().into(),
                rho.as_hermitian().trace().into(),
                ev[0].into(),
                ev[ev.len() - 1].into(),
                rank.into(),
                (entropy / n as f64).into(),
            ])
        })
        .collect::<Result<Vec<_>, spinchain::Error>>()?;
    let table = Table {
        columns: cols([
            "n",
            "dim",
            "trace",
            "min_eigenvalue",
            "max_eigenvalue",
            "rank",
            "entropy_per_site",
        ]),
        rows,
    };
    Ok((Some(table), json!({"model": m.summary(), "n_max": n_max})))
}

fn cols<const N: usize>(c: [&str; N]) -> Vec<String> {
    c.iter().map(|s| s.to_string()).collect()
}

fn mgf(m: &Model, a: &HermitianOperator, grid: &[f64], n_max: usize) -> Result<Report, CliError> {
    positive(n_max, "--n-max")?;
    let family = TransferFamily::new(triple_of(m, "mgf")?, a)?;
    let blocks = grid
        .par_iter()
        .map(|&t| {
            let seq = family.log_mgf_sequence(t, n_max)?;
            let limit = family.log_spectral_radius(t)?;
            Ok((1..=n_max)
                .map(|n| {
                    let l = seq[n - 1];
                    vec![
                        t.into(),
                        n.into(),
                        l.exp().into(),
                        l.into(),
                        (l / n as f64).into(),
                        limit.into(),
                    ]
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, spinchain::Error>>()?;
    let table = Table {
        columns: cols([
            "t",
            "n",
            "mgf",
            "log_mgf",
            "log_mgf_per_site",
            "log_spectral_radius",
        ]),
        rows: blocks.into_iter().flatten().collect(),
    };
    let (lo, hi) = family.spectrum_bounds();
    let summary = json!({
        "model": m.summary(),
        "n_max": n_max,
        "spectrum_bounds": [num(lo), num(hi)],
    });
    Ok((Some(table), summary))
}

fn rate_function(
    m: &Model,
    a: &HermitianOperator,
    grid: &[f64],
    x_steps: usize,
) -> Result<Report, CliError> {
    positive(x_steps, "--x-steps")?;
    let model =
        RateFunctionModel::from_triple(triple_of(m, "rate-function")?, a, RateOptions::default())?;
    let f = model.sample(grid);
    let (lo, hi) = model.spectrum_bounds();
    let xs = linspace(lo, hi, x_steps);
    let rates = model.rates(&xs);
    let mut table = Table::new(["t", "F", "x", "I"]);
    for i in 0..grid.len().max(xs.len()) {
        table.push(vec![
            grid.get(i).copied().into(),
            f.get(i).copied().into(),
            xs.get(i).copied().into(),
            rates.get(i).copied().into(),
        ]);
    }
    let second = |v: &[f64]| {
        v.windows(3)
            .filter(|w| w.iter().all(|x| x.is_finite()))
            .map(|w| w[0] + w[2] - 2.0 * w[1])
            .fold(f64::INFINITY, f64::min)
    };
    let mean = model.mean();
    let summary = json!({
        "model": m.summary(),
        "mean": num(mean),
        "rate_at_mean": num(model.rate(mean)),
        "spectrum_bounds": [num(lo), num(hi)],
        "min_second_difference_F": num(second(&f)),
        "min_second_difference_I": num(second(&rates)),
    });
    Ok((Some(table), summary))
}

fn distribution(m: &Model, a: &HermitianOperator, n: usize, cap: Cap) -> Result<Report, CliError> {
    positive(n, "--n-max")?;
    cap.check_power(m.site_dim(), n)?;
    let rho = m.source().local_density(n, cap)?;
    let dist = spectral_distribution(&rho, &average_observable(a, n, cap)?)?;
    let mut table = Table::new(["value", "mass"]);
    for &(v, w) in &dist.atoms {
        table.push(vec![v.into(), w.into()]);
    }
    let mean: f64 = dist.atoms.iter().map(|(v, w)| v * w).sum();
    let summary = json!({
        "model": m.summary(),
        "n": n,
        "atoms": dist.atoms.len(),
        "total_mass": num(dist.total_mass()),
        "mean": num(mean),
    });
    Ok((Some(table), summary))
}

fn pressure(
    m: &Model,
    phi: &Interaction,
    grid: &[f64],
    n_max: usize,
    cap: Cap,
) -> Result<Report, CliError> {
    positive(n_max, "--n-max")?;
    let source = match &m.body {
        Body::Triple(t) | Body::HiddenMarkov(_, t) | Body::Product(_, t) => {
            PressureSource::Triple(t)
        }
        Body::Interaction(_, tr) => PressureSource::Tracial(tr.0),
        Body::Gibbs(g) => PressureSource::Densities(g),
    };
    let curves = grid
        .iter()
        .map(|&t| pressure_curve(source, phi, t, n_max, cap))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(["t", "n", "value", "transfer"]);
    for c in &curves {
        for (i, &(n, v)) in c.brute_force.iter().enumerate() {
            table.push(vec![
                c.t.into(),
                n.into(),
                v.into(),
                c.transfer.get(i).map(|x| x.1).into(),
            ]);
        }
    }
    let at_max: Vec<f64> = curves.iter().map(|c| c.brute_force[n_max - 1].1).collect();
    let convexity = at_max
        .windows(3)
        .map(|w| w[0] + w[2] - 2.0 * w[1])
        .fold(f64::INFINITY, f64::min);
    let summary = json!({
        "model": m.summary(),
        "n_max": n_max,
        "mean_energy_norm": num(curves[0].mean_energy_norm),
        "within_bound": curves.iter().all(|c| c.within_bound),
        "min_second_difference": if at_max.len() >= 3 { num(convexity) } else { Value::Null },
    });
    Ok((Some(table), summary))
}

fn report_json(r: &FactorizationReport) -> Value {
    json!({
        "m": r.m,
        "k": r.k,
        "l": r.l,
        "beta_star": num(r.beta_star),
        "beta_root": num(r.beta_root),
        "alpha_star": num(r.alpha_star),
        "alpha_root": num(r.alpha_root),
        "upper_witness": opt_num(r.upper_witness),
        "lower_witness": opt_num(r.lower_witness),
    })
}

fn factorization(
    md: &Model,
    m: usize,
    k: usize,
    l: Option<usize>,
    cap: Cap,
) -> Result<Report, CliError> {
    positive(m, "--m")?;
    let report = match l {
        Some(l) => weak_upper_check(md.source(), m, l, k, cap)?,
        None => minimal_constants(md.source(), m, k, cap)?,
    };
    let mut s = report_json(&report);
    let mut verdicts = json!({
        "upper_support": report.support_ok_upper,
        "lower_support": report.support_ok_lower,
        "lower_positive": report.alpha_star > 0.0,
    });
    let mut certified_beta = None;
    let mut certified_alpha = None;
    if let Some(t) = md.triple() {
        if l.is_none() {
            let up = fcs_upper_certificate(t, m, k, cap)?;
            certified_beta = Some(up.beta);
            verdicts["upper_certificate_passed"] = json!(up.passed);
            verdicts["certified_beta_dominates"] = json!(up.dominates);
            s["upper_certificate_witness"] = num(up.witness);
            s["cp_beta"] = opt_num(up.cp_beta);
        } else {
            certified_beta = Some(upper_constant(t.rho())?);
        }
        let low = fcs_lower_certificate(t)?;
        certified_alpha = low.alpha;
        s["lower_certificate"] = json!({
            "gap_before": opt_num(low.gap_before),
            "gap_after": opt_num(low.gap_after),
        });
    }
    if let Some(spec) = md.hidden_markov() {
        let c = hmm_lower_criteria(spec)?;
        verdicts["markov_tp"] = json!(c.markov_tp);
        verdicts["support_by_target"] = json!(c.support_by_target);
        verdicts["support_by_source"] = json!(c.support_by_source);
    }
    if let (Body::Gibbs(g), None) = (&md.body, l) {
        let est = gibbs_factorization_estimate(&g.0, m, k, cap)?;
        s["per_block"] = num(est.per_block);
    }
    s["certified_beta"] = opt_num(certified_beta);
    s["certified_alpha"] = opt_num(certified_alpha);
    s["verdicts"] = verdicts;
    s["model"] = md.summary();
    let mut table = Table::new([
        "m",
        "k",
        "l",
        "beta_star",
        "alpha_star",
        "beta_root",
        "alpha_root",
        "certified_beta",
        "certified_alpha",
    ]);
    table.push(vec![
        m.into(),
        k.into(),
        l.map_or(Cell::Empty, Cell::Int),
        report.beta_star.into(),
        report.alpha_star.into(),
        report.beta_root.into(),
        report.alpha_root.into(),
        certified_beta.into(),
        certified_alpha.into(),
    ]);
    Ok((Some(table), s))
}

fn exponent_json(e: Exponent) -> Value {
    num(e.value())
}

fn chernoff(
    a: &Model,
    b: &Model,
    grid: &[f64],
    n_max: usize,
    cap: Cap,
) -> Result<Report, CliError> {
    positive(n_max, "--n-max")?;
    cap.check_power(a.site_dim(), n_max)?;
    if let Some(&t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::Usage(format!("t = {t} outside [0, 1]")));
    }
    // constants valid for both states
    let (beta, alpha) = match (a.triple(), b.triple()) {
        (Some(ta), Some(tb)) => {
            let beta = upper_constant(ta.rho())?.max(upper_constant(tb.rho())?);
            let alpha = match (
                fcs_lower_certificate(ta)?.alpha,
                fcs_lower_certificate(tb)?.alpha,
            ) {
                (Some(x), Some(y)) => Some(x.min(y)),
                _ => None,
            };
            (Some(beta), alpha)
        }
        _ => (None, None),
    };
    let sweep: Vec<usize> = (1..=n_max).collect();
    let curve = chernoff_curve(a.source(), b.source(), grid, &sweep, beta, alpha, cap)?;
    let q_models = match (a.hidden_markov(), b.hidden_markov()) {
        (Some(sa), Some(sb)) => grid
            .iter()
            .map(|&t| q_matrix_model(sa, sb, t).ok())
            .collect::<Option<Vec<_>>>(),
        _ => None,
    };
    let mut columns: Vec<String> = vec!["t".into()];
    columns.extend(sweep.iter().map(|n| format!("xi_{n}")));
    columns.extend(["upper_env".to_string(), "lower_env".to_string()]);
    if q_models.is_some() {
        columns.push("q_model_xi".into());
    }
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    let mut sandwich = true;
    let last = curve.finite_n.len() - 1;
    for (j, &t) in grid.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(curve.finite_n.iter().map(|r| Cell::Num(r[j].value())));
        let up = curve.upper_envelope.as_ref().map(|e| e[j].value());
        let lo = curve.lower_envelope.as_ref().map(|e| e[j].value());
        let x = curve.finite_n[last][j].value();
        sandwich &= up.is_none_or(|u| x <= u + 1e-9) && lo.is_none_or(|l| l <= x + 1e-9);
        row.push(up.into());
        row.push(lo.into());
        if let Some(q) = &q_models {
            row.push(q[j].xi.into());
        }
        table.push(row);
    }
    let s = curve.summary()?;
    let summary = json!({
        "model_a": a.summary(),
        "model_b": b.summary(),
        "n_max": n_max,
        "beta": opt_num(beta),
        "alpha": opt_num(alpha),
        "envelope_blocks": curve.envelope_blocks,
        "finite_n": {"t_star": num(s.finite_n.t_star), "value": exponent_json(s.finite_n.value)},
        "lower": exponent_json(s.lower),
        "upper": s.upper.map_or(Value::Null, exponent_json),
        "width": opt_num(s.width),
        "sandwich_holds": sandwich,
    });
    Ok((Some(table), summary))
}

fn pmin(a: &Model, b: &Model, n_max: usize, kappa: f64, cap: Cap) -> Result<Report, CliError> {
    positive(n_max, "--n-max")?;
    cap.check_power(a.site_dim(), n_max)?;
    let rows = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let r = min_error_at(a.source(), b.source(), n, kappa, cap)?;
            let rate = -r.p_min.ln() / n as f64;
            Ok(vec![
                n.into(),
                r.p_min.into(),
                r.p_min_trace_norm.into(),
                rate.into(),
            ])
        })
        .collect::<Result<Vec<_>, spinchain::Error>>()?;
    let table = Table {
        columns: cols(["n", "p_min", "p_min_trace_norm", "error_exponent"]),
        rows,
    };
    let summary = json!({"model_a": a.summary(), "model_b": b.summary(), "kappa": num(kappa), "n_max": n_max});
    Ok((Some(table), summary))
}

fn gibbs_bound(
    a: &Model,
    b: &Model,
    grid: &[f64],
    n_max: usize,
    cap: Cap,
) -> Result<Report, CliError> {
    positive(n_max, "--n-max")?;
    let need = || CliError::Usage("gibbs-bound needs two interaction or gibbs models".into());
    let (phi, psi) = (
        a.interaction().ok_or_else(need)?,
        b.interaction().ok_or_else(need)?,
    );
    let sweep: Vec<usize> = (1..=n_max).collect();
    let mut table = Table::new([
        "t",
        "n",
        "value",
        "golden_thompson_product",
        "golden_thompson_sum",
        "golden_thompson_holds",
    ]);
    let mut holds = true;
    for &t in grid {
        for r in gibbs_lower_bound(phi, psi, t, &sweep, cap)?.rows {
            holds &= r.golden_thompson_holds;
            table.push(vec![
                t.into(),
                r.n.into(),
                r.value.into(),
                r.golden_thompson_product.into(),
                r.golden_thompson_sum.into(),
                r.golden_thompson_holds.into(),
            ]);
        }
    }
    let summary = json!({"model_a": a.summary(), "model_b": b.summary(), "n_max": n_max, "golden_thompson_holds": holds});
    Ok((Some(table), summary))
}
