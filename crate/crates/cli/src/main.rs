//! Command-line front end: point estimation, lower-bound prior inspection,
//! Monte Carlo risk experiments, and the theoretical rate table.
//!
//! Every subcommand is deterministic given its flags: repeated invocations
//! produce byte-identical output.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ngamma::estimators;
use ngamma::model::{regime, ProblemConfig, ThetaVector};
use ngamma::priors::{
    chi_square_bound, matching_measures, out_of_class_mass, prior_config, MeasureSide,
};
use ngamma::rates::{minimax_rate, MinimaxRate};
use ngamma::risk::{
    emit, rate_check, run_risk_experiment, EmitFormat, EstimatorChoice, ExperimentSpec, Target,
};

#[derive(Parser)]
#[command(
    name = "ngamma",
    about = "Estimation of sum |theta_i|^gamma and the l_gamma norm of sparse normal means",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator on a data vector and print the result as JSON.
    Estimate(EstimateArgs),
    /// Construct the lower-bound prior pair and its certificates.
    Priors(PriorsArgs),
    /// Run a Monte Carlo risk experiment over a configuration grid.
    Simulate(SimulateArgs),
    /// Print the theoretical minimax rate table for a parameter grid.
    Rates(RatesArgs),
    /// Compute a certified best even-polynomial approximation of |x|^gamma.
    Approx(ApproxArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Observation file: one decimal float per line.
    #[arg(long)]
    data: PathBuf,
    /// Problem configuration file (flat key=value lines or JSON with keys
    /// d, s, eps, gamma, c); alternative to the individual flags.
    #[arg(long, conflicts_with_all = ["d", "s", "eps", "gamma"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    d: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    s: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    eps: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    gamma: Option<f64>,
    /// Dense-zone tuning constant.
    #[arg(long, default_value_t = ngamma::model::DEFAULT_C)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// auto | dense | even | sparse
    #[arg(long, default_value = "auto")]
    estimator: String,
    /// Also report |value|^{1/gamma}.
    #[arg(long)]
    norm: bool,
}

#[derive(Args)]
struct PriorsArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    gamma: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment spec as a JSON file; overrides the inline grid flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Dimensions; paired with --s entry-wise (or broadcast when one side
    /// has a single value).
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    s: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Exponents; crossed with the (d, s) pairs.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    gamma: Vec<f64>,
    #[arg(long, default_value_t = ngamma::model::DEFAULT_C)]
    c: f64,
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    estimators: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "zero,spikes-at-threshold,spikes-large")]
    profiles: Vec<String>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// functional | norm
    #[arg(long, default_value = "norm")]
    target: String,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Run the rate boundedness check; exit code 2 on failure.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    s: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    gamma: Vec<f64>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    gamma: f64,
    /// Half-degree K (the polynomial has degree 2K).
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Priors(args) => cmd_priors(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Rates(args) => cmd_rates(args),
        Command::Approx(args) => cmd_approx(args),
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode> {
    let cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ProblemConfig::parse(&text)?
        }
        None => ProblemConfig::new(
            args.d.expect("required by clap"),
            args.s.expect("required by clap"),
            args.eps.expect("required by clap"),
            args.gamma.expect("required by clap"),
            args.c,
        )?,
    };
    let theta = ThetaVector::read_from(&args.data)?;
    let y = theta.values();
    let result = match args.estimator.as_str() {
        "auto" => {
            if args.norm {
                estimators::estimate_norm(y, &cfg, args.seed)?
            } else {
                estimators::estimate_auto(y, &cfg, args.seed)?
            }
        }
        "dense" => estimators::estimate_dense(y, &cfg, args.seed)?,
        "even" => estimators::estimate_even(y, &cfg, args.seed)?,
        "sparse" => estimators::estimate_sparse(y, &cfg)?,
        other => bail!("unknown estimator {other:?} (use auto|dense|even|sparse)"),
    };
    let norm_value = if args.norm && cfg.gamma >= 1.0 {
        Some(result.value.abs().powf(1.0 / cfg.gamma))
    } else {
        None
    };
    let payload = serde_json::json!({
        "estimator_id": result.estimator_id.to_string(),
        "value": result.value,
        "norm_value": norm_value,
        "seed": result.seed,
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_priors(args: PriorsArgs) -> Result<ExitCode> {
    let pc = prior_config(args.d, args.s, args.eps)?;
    let prior = matching_measures(args.gamma, pc.k, pc.m)?;
    let chi = chi_square_bound(args.d, args.s, &pc);
    let (exact, bound) = out_of_class_mass(args.d, args.s)?;
    let (s0, w0) = prior.side(MeasureSide::Null);
    let (s1, w1) = prior.side(MeasureSide::Separated);
    let payload = serde_json::json!({
        "Lambda": pc.lambda,
        "M": pc.m,
        "K": pc.k,
        "measures": {
            "null": { "support": s0, "weights": w0 },
            "separated": { "support": s1, "weights": w1 },
        },
        "gap": prior.gap,
        "chi2_bound": chi.bound,
        "chi2_ingredient": chi.ingredient,
        "out_of_class": { "exact": exact, "bound": bound },
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(ExitCode::SUCCESS)
}

fn parse_target(name: &str) -> Result<Target> {
    match name {
        "functional" => Ok(Target::Functional),
        "norm" => Ok(Target::Norm),
        other => bail!("unknown target {other:?} (use functional|norm)"),
    }
}

fn pair_grid(d: &[usize], s: &[usize]) -> Result<Vec<(usize, usize)>> {
    if d.is_empty() || s.is_empty() {
        bail!("--d and --s are required without --spec");
    }
    let pairs = if d.len() == s.len() {
        d.iter().copied().zip(s.iter().copied()).collect()
    } else if s.len() == 1 {
        d.iter().map(|&dv| (dv, s[0])).collect()
    } else if d.len() == 1 {
        s.iter().map(|&sv| (d[0], sv)).collect()
    } else {
        bail!(
            "--d and --s must have equal lengths (pairs) or one must be a single value \
             (got {} and {})",
            d.len(),
            s.len()
        );
    };
    Ok(pairs)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let spec = if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str::<ExperimentSpec>(&text)
            .with_context(|| format!("parsing {}", path.display()))?
    } else {
        let mut grid = Vec::new();
        for (d, s) in pair_grid(&args.d, &args.s)? {
            for &gamma in &args.gamma {
                grid.push(ProblemConfig::new(d, s, args.eps, gamma, args.c)?);
            }
        }
        let estimators = args
            .estimators
            .iter()
            .map(|e| e.parse::<EstimatorChoice>())
            .collect::<ngamma::Result<Vec<_>>>()?;
        ExperimentSpec {
            grid,
            estimators,
            theta_profiles: args.profiles.clone(),
            replicates: args.replicates,
            seed: args.seed,
            target: parse_target(&args.target)?,
        }
    };
    let report = run_risk_experiment(&spec)?;
    for line in &report.skipped {
        eprintln!("skipped: {line}");
    }
    if let Some(out) = &args.out {
        let format = match args.format.as_str() {
            "csv" => EmitFormat::Csv,
            "json" => EmitFormat::Json,
            other => bail!("unknown format {other:?} (use csv|json)"),
        };
        emit(&report, out, format)?;
    } else {
        print!("{}", ngamma::risk::to_csv(&report));
    }
    if args.check {
        let summary = rate_check(&report)?;
        for family in &summary.families {
            println!(
                "rate-check {} {} gamma={}: cells={} ratio=[{:.3}, {:.3}] spread={:.2} {}",
                family.estimator,
                family.regime,
                family.gamma,
                family.cells,
                family.min_ratio,
                family.max_ratio,
                family.spread,
                if family.pass { "PASS" } else { "FAIL" }
            );
        }
        if !summary.pass {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_rates(args: RatesArgs) -> Result<ExitCode> {
    println!("d,s,eps,gamma,regime,rate,rate_lower,rate_upper,label");
    for (d, s) in pair_grid(&args.d, &args.s)? {
        for &gamma in &args.gamma {
            let cfg = ProblemConfig::with_default_c(d, s, args.eps, gamma)?;
            let rate = minimax_rate(&cfg);
            let (value, lower, upper) = match rate {
                MinimaxRate::Exact { value, .. } => (value, value, value),
                MinimaxRate::Bracket { lower, upper, .. } => (upper, lower, upper),
            };
            println!(
                "{},{},{},{},{},{},{},{},{}",
                d,
                s,
                args.eps,
                gamma,
                regime(&cfg),
                value,
                lower,
                upper,
                rate.label()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_approx(args: ApproxArgs) -> Result<ExitCode> {
    let poly = ngamma::approx::best_poly_approx(args.gamma, args.k, args.tol)?;
    println!("{}", serde_json::to_string_pretty(&poly)?);
    Ok(ExitCode::SUCCESS)
}
