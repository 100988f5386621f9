use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_cp_cli::config::{Column, Engine, ModelSpec, PriorSpec, RunConfig};
use adaptive_cp_cli::{execute, CliError, Result};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    PoissonGamma,
    GaussianMean,
    GaussianPrecision,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorKind {
    Geometric,
    NegativeBinomial,
}

/// Bayesian multiple-changepoint analysis of a univariate series.
///
/// Flags override the values of `--config`, which may be a configuration
/// file or the manifest of an earlier run.
#[derive(Debug, Parser)]
#[command(name = "adaptive-cp", version)]
struct Args {
    /// Delimited text file holding the series.
    input: Option<PathBuf>,

    /// JSON configuration or run manifest to start from.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Column to read: a zero-based index or a header name.
    #[arg(long)]
    column: Option<String>,
    /// The first row is a header (implied by a named column).
    #[arg(long)]
    header: bool,
    #[arg(long)]
    delimiter: Option<char>,

    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Also run this engine and report the count-histogram divergence.
    #[arg(long, value_enum)]
    compare: Option<Engine>,

    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Poisson-gamma prior shape.
    #[arg(long)]
    alpha: Option<f64>,
    /// Poisson-gamma prior rate.
    #[arg(long)]
    beta: Option<f64>,
    /// Gaussian-mean prior centre.
    #[arg(long)]
    mean: Option<f64>,
    /// Gaussian-mean observation variance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Gaussian-mean prior variance, in units of sigma2.
    #[arg(long)]
    tau2: Option<f64>,
    /// Gaussian-precision known mean.
    #[arg(long)]
    mu: Option<f64>,
    /// Gaussian-precision prior shape.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Gaussian-precision prior rate.
    #[arg(long)]
    beta0: Option<f64>,

    #[arg(long, value_enum)]
    prior: Option<PriorKind>,
    /// Success probability of the gap prior.
    #[arg(long)]
    p: Option<f64>,
    /// Negative-binomial order of the gap prior.
    #[arg(long)]
    k: Option<u32>,

    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long)]
    thin: Option<u64>,
    /// Stop sampling after this many seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long)]
    p_add: Option<f64>,
    #[arg(long)]
    alpha_target: Option<f64>,
    /// Adaptation step scale; keep h * n of order one.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    no_adjust: bool,
    #[arg(long)]
    no_thresholding: bool,
    #[arg(long)]
    dual_adaptation: bool,
    #[arg(long)]
    dual_weight: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    log_weight_floor: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    log_weight_ceil: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    log_cutoff: Option<f64>,
    /// Initial changepoints, comma separated.
    #[arg(long, value_delimiter = ',')]
    init: Option<Vec<usize>>,
    /// Independent chains run in parallel, seeded seed, seed+1, ...
    #[arg(long)]
    chains: Option<usize>,

    /// Relative truncation threshold of the recursions (0 for exact).
    #[arg(long)]
    truncation: Option<f64>,
    /// Posterior draws taken by the recursions engine.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    max_recursion_n: Option<usize>,
    /// Let the recursions engine run above the length limit.
    #[arg(long)]
    allow_large: bool,

    /// Divergence smoothing constant.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $ADAPTIVE_CP_OUT or ./adaptive-cp-out).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn need(v: Option<f64>, name: &str, model: &str) -> Result<f64> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required for the {model} model")))
}

fn build_model(a: &Args, current: &ModelSpec) -> Result<ModelSpec> {
    let model = match a.model {
        Some(ModelKind::PoissonGamma) => ModelSpec::PoissonGamma {
            alpha: need(a.alpha, "alpha", "poisson-gamma")?,
            beta: need(a.beta, "beta", "poisson-gamma")?,
        },
        Some(ModelKind::GaussianMean) => ModelSpec::GaussianMean {
            mean: a.mean.unwrap_or(0.0),
            sigma2: need(a.sigma2, "sigma2", "gaussian-mean")?,
            tau2: need(a.tau2, "tau2", "gaussian-mean")?,
        },
        Some(ModelKind::GaussianPrecision) => ModelSpec::GaussianPrecision {
            mu: a.mu.unwrap_or(0.0),
            alpha0: need(a.alpha0, "alpha0", "gaussian-precision")?,
            beta0: need(a.beta0, "beta0", "gaussian-precision")?,
        },
        None => {
            let mut m = current.clone();
            let stray = |given: &[(&str, Option<f64>)]| {
                given.iter().find(|(_, v)| v.is_some()).map(|(n, _)| {
                    CliError::Config(format!("--{n} does not apply to the configured model"))
                })
            };
            match &mut m {
                ModelSpec::PoissonGamma { alpha, beta } => {
                    if let Some(e) = stray(&[
                        ("mean", a.mean),
                        ("sigma2", a.sigma2),
                        ("tau2", a.tau2),
                        ("mu", a.mu),
                        ("alpha0", a.alpha0),
                        ("beta0", a.beta0),
                    ]) {
                        return Err(e);
                    }
                    *alpha = a.alpha.unwrap_or(*alpha);
                    *beta = a.beta.unwrap_or(*beta);
                }
                ModelSpec::GaussianMean { mean, sigma2, tau2 } => {
                    if let Some(e) = stray(&[
                        ("alpha", a.alpha),
                        ("beta", a.beta),
                        ("mu", a.mu),
                        ("alpha0", a.alpha0),
                        ("beta0", a.beta0),
                    ]) {
                        return Err(e);
                    }
                    *mean = a.mean.unwrap_or(*mean);
                    *sigma2 = a.sigma2.unwrap_or(*sigma2);
                    *tau2 = a.tau2.unwrap_or(*tau2);
                }
                ModelSpec::GaussianPrecision { mu, alpha0, beta0 } => {
                    if let Some(e) = stray(&[
                        ("alpha", a.alpha),
                        ("beta", a.beta),
                        ("mean", a.mean),
                        ("sigma2", a.sigma2),
                        ("tau2", a.tau2),
                    ]) {
                        return Err(e);
                    }
                    *mu = a.mu.unwrap_or(*mu);
                    *alpha0 = a.alpha0.unwrap_or(*alpha0);
                    *beta0 = a.beta0.unwrap_or(*beta0);
                }
            }
            m
        }
    };
    Ok(model)
}

fn build_prior(a: &Args, current: &PriorSpec) -> Result<PriorSpec> {
    let (cur_p, cur_k) = match *current {
        PriorSpec::Geometric { p } => (p, None),
        PriorSpec::NegativeBinomial { k, p } => (p, Some(k)),
    };
    let p = a.p.unwrap_or(cur_p);
    let prior = match a.prior {
        Some(PriorKind::Geometric) => PriorSpec::Geometric { p },
        Some(PriorKind::NegativeBinomial) => PriorSpec::NegativeBinomial {
            k: a.k.or(cur_k).ok_or_else(|| {
                CliError::Config("--k is required for the negative-binomial prior".into())
            })?,
            p,
        },
        None => match cur_k {
            None if a.k.is_some() => {
                return Err(CliError::Config(
                    "--k needs --prior negative-binomial".into(),
                ));
            }
            None => PriorSpec::Geometric { p },
            Some(k) => PriorSpec::NegativeBinomial {
                k: a.k.unwrap_or(k),
                p,
            },
        },
    };
    Ok(prior)
}

fn build_config(a: Args) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    c.model = build_model(&a, &c.model)?;
    c.prior = build_prior(&a, &c.prior)?;
    if let Some(v) = a.input {
        c.input = v;
    }
    if let Some(v) = &a.column {
        c.column = Column::parse(v);
    }
    c.header |= a.header;
    if let Some(v) = a.delimiter {
        c.delimiter = v;
    }
    if let Some(v) = a.engine {
        c.engine = v;
    }
    if a.compare.is_some() {
        c.compare = a.compare;
    }
    let s = &mut c.sampler;
    if let Some(v) = a.iterations {
        s.iterations = v;
    }
    if a.burn_in.is_some() {
        s.burn_in = a.burn_in;
    }
    if a.thin.is_some() {
        s.thin = a.thin;
    }
    if a.time_budget.is_some() {
        s.time_budget_seconds = a.time_budget;
    }
    if let Some(v) = a.p_add {
        s.p_add = v;
    }
    if let Some(v) = a.alpha_target {
        s.alpha_target = v;
    }
    if let Some(v) = a.h {
        s.h = v;
    }
    s.adjust &= !a.no_adjust;
    s.thresholding &= !a.no_thresholding;
    s.dual_adaptation |= a.dual_adaptation;
    if let Some(v) = a.dual_weight {
        s.dual_weight = v;
    }
    if let Some(v) = a.log_weight_floor {
        s.log_weight_floor = v;
    }
    if let Some(v) = a.log_weight_ceil {
        s.log_weight_ceil = v;
    }
    if let Some(v) = a.log_cutoff {
        s.log_cutoff = v;
    }
    if let Some(v) = a.init {
        s.init = v;
    }
    if let Some(v) = a.chains {
        c.chains = v;
    }
    if let Some(v) = a.truncation {
        c.truncation = v;
    }
    if let Some(v) = a.draws {
        c.recursion_draws = v;
    }
    if let Some(v) = a.max_recursion_n {
        c.max_recursion_n = v;
    }
    c.allow_large |= a.allow_large;
    if let Some(v) = a.delta {
        c.delta = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.out {
        c.output_dir = v;
    }
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = build_config(Args::parse()).and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(r) => {
            println!(
                "n = {}, engine {}: modal changepoint count {}, MAP log posterior {:.4} with {} changepoints",
                r.n,
                r.main.engine.name(),
                r.main.summary.modal_count(),
                r.main.summary.map_log_post(),
                r.main.summary.map_positions().len(),
            );
            if let Some((d_pq, d_qp)) = r.divergence {
                println!("divergence: D(P|Q) = {d_pq:.3e}, D(Q|P) = {d_qp:.3e}");
            }
            println!("results written to {}", r.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("adaptive-cp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
