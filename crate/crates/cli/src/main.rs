mod commands;
mod error;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::model::Tolerances;
use crate::output::{Format, Output};

/// Correlated states on quantum spin chains: validation, large deviations,
/// pressures, factorization constants and hypothesis testing.
#[derive(Parser, Debug)]
#[command(name = "spinchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory receiving the table and the JSON summary.
    #[arg(long, global = true, default_value = ".")]
    output: PathBuf,

    /// Format of the table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Tolerance override `name=value` with name in stochastic, psd, trace, hermitian.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct Grid {
    /// Endpoints of the t-grid.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub t_range: Option<Vec<f64>>,

    /// Number of t-grid points.
    #[arg(long)]
    pub t_steps: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a model file and report the residuals of its defining conditions.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Irreducibility and primitivity of the transfer map `E_1`.
    Ergodicity {
        #[arg(long)]
        model: PathBuf,
    },
    /// Spectral data of the local densities for `n = 1..n_max`.
    Density {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
    },
    /// Moment generating functions of a one-site observable.
    Mgf {
        #[arg(long)]
        model: PathBuf,
        /// JSON file with the one-site observable; defaults to the model's.
        #[arg(long)]
        observable: Option<PathBuf>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Asymptotic log-MGF `F` and its Legendre transform `I`.
    RateFunction {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observable: Option<PathBuf>,
        #[command(flatten)]
        grid: Grid,
        /// Number of points in the x-grid spanning the spectrum of the observable.
        #[arg(long, default_value_t = 201)]
        x_steps: usize,
    },
    /// Distribution of the site average of an observable on `n_max` sites.
    Distribution {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observable: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Finite-volume pressures of an interaction.
    Pressure {
        #[arg(long)]
        model: PathBuf,
        /// Interaction model file; defaults to the model itself.
        #[arg(long)]
        interaction: Option<PathBuf>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Upper and lower factorization constants.
    Factorization {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Gap between the blocks.
        #[arg(long)]
        l: Option<usize>,
    },
    /// Finite-n Chernoff exponents with factorization envelopes.
    Chernoff {
        #[arg(long)]
        model_a: PathBuf,
        #[arg(long)]
        model_b: PathBuf,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Minimum Bayesian error probabilities for `n = 1..n_max`.
    Pmin {
        #[arg(long)]
        model_a: PathBuf,
        #[arg(long)]
        model_b: PathBuf,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Prior probability of the first model.
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
    },
    /// Gibbs-pair lower bound and the Golden-Thompson check.
    GibbsBound {
        #[arg(long)]
        model_a: PathBuf,
        #[arg(long)]
        model_b: PathBuf,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Ergodicity { .. } => "ergodicity",
            Command::Density { .. } => "density",
            Command::Mgf { .. } => "mgf",
            Command::RateFunction { .. } => "rate_function",
            Command::Distribution { .. } => "distribution",
            Command::Pressure { .. } => "pressure",
            Command::Factorization { .. } => "factorization",
            Command::Chernoff { .. } => "chernoff",
            Command::Pmin { .. } => "pmin",
            Command::GibbsBound { .. } => "gibbs_bound",
        }
    }
}

fn tolerances(overrides: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    for o in overrides {
        let (name, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("tolerance `{o}` is not NAME=VALUE")))?;
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| CliError::Usage(format!("invalid tolerance value in `{o}`")))?;
        match name {
            "stochastic" => tol.stochastic = value,
            "psd" => tol.psd = value,
            "trace" => tol.trace = value,
            "hermitian" => tol.hermitian = value,
            _ => return Err(CliError::Usage(format!("unknown tolerance `{name}`"))),
        }
    }
    Ok(tol)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let tol = tolerances(&cli.tol)?;
    let out = Output {
        dir: cli.output,
        format: cli.format,
    };
    let name = cli.command.name();
    match commands::run(&cli.command, tol, &out) {
        Err(CliError::Invalid(v)) if name == "validate" => {
            let summary = serde_json::json!({"valid": false, "violations": v});
            out.write_summary(name, &summary)?;
            Err(CliError::Invalid(v))
        }
        r => r,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Invalid(v) = &e {
                for x in v {
                    let at = match (x.line, x.column) {
                        (Some(l), Some(c)) => format!(" (line {l}, column {c})"),
                        _ => String::new(),
                    };
                    eprintln!(
                        "  {} at {}{at}: {}",
                        x.code,
                        if x.path.is_empty() { "/" } else { &x.path },
                        x.message
                    );
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
