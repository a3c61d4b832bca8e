//! Operator-facing command line: configuration parsing, experiment
//! orchestration, reproducible seeding and CSV/JSON emission.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 model/parameter
//! validation failure, 3 runtime infeasibility (e.g. unjustifiable
//! truncation).

// `!(x > 0.0)` guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use sarmanov_risk::counterexample::{self, CounterexampleParams};
use sarmanov_risk::dist::Law;
use sarmanov_risk::error::Error as CoreError;
use sarmanov_risk::mc;
use sarmanov_risk::mellin;
use sarmanov_risk::ruin::{self, Horizon};
use sarmanov_risk::sarmanov::SarmanovModel;
use sarmanov_risk::tail_stats;

use config::*;
use output::{fmt_f64, Document, OutputWriter, Versions};

/// Environment variable overriding the worker count.
const WORKERS_ENV: &str = "SARMANOV_RISK_WORKERS";

#[derive(Parser)]
#[command(
    name = "sarmanov-risk",
    about = "Simulation and numerical verification for Sarmanov-dependent risk models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config file's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread count (default: all cores). The SARMANOV_RISK_WORKERS
    /// environment variable takes precedence and is recorded on stderr.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory for CSV/JSON results.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a Sarmanov model specification.
    Validate,
    /// Estimate finite- or infinite-horizon ruin probabilities.
    Ruin,
    /// Estimate or evaluate the one-period product tail probability.
    ProductTail,
    /// Scan the twisted Mellin transform for zeros.
    MellinScan,
    /// Hill tail-index estimation on samples from a law.
    Hill,
    /// Regular-variation and dominated-variation tail diagnostics.
    TailRatio,
    /// Build the vanishing-Mellin counterexample and demonstrate it.
    Counterexample,
}

enum CliError {
    Usage(String),
    Validation(String),
    Infeasible(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation(_) => 2,
            Self::Infeasible(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Validation(m) | Self::Infeasible(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::TruncationUnjustified(_) => Self::Infeasible(e.to_string()),
            CoreError::InvalidParameter(_) | CoreError::Construction(_) => {
                Self::Validation(e.to_string())
            }
            CoreError::Domain(_) => Self::Usage(e.to_string()),
            other => Self::Infeasible(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let started = Instant::now();
    match run(&cli) {
        Ok(()) => {
            eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
            ExitCode::from(e.code())
        }
    }
}

fn configure_workers(cli: &Cli) {
    let mut workers = cli.workers;
    if let Ok(env_value) = std::env::var(WORKERS_ENV) {
        match env_value.parse::<usize>() {
            Ok(n) if n > 0 => {
                eprintln!("workers: {n} (from {WORKERS_ENV})");
                workers = Some(n);
            }
            _ => eprintln!("workers: ignoring invalid {WORKERS_ENV}={env_value}"),
        }
    } else if let Some(n) = workers {
        eprintln!("workers: {n} (from --workers)");
    }
    if let Some(n) = workers {
        // Chunked merging keeps results identical for any worker count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_config<T: serde::de::DeserializeOwned>(cli: &Cli) -> Result<T, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "config parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

fn build_model(spec: &sarmanov_risk::sarmanov::ModelSpec) -> Result<SarmanovModel, CliError> {
    let model = spec.build()?;
    if !model.is_valid() {
        let report = serde_json::to_string_pretty(model.validate()).unwrap();
        println!("{report}");
        return Err(CliError::Validation(
            "model failed validation; report printed above".into(),
        ));
    }
    Ok(model)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_workers(cli);
    match cli.command {
        Command::Validate => cmd_validate(cli),
        Command::Ruin => cmd_ruin(cli),
        Command::ProductTail => cmd_product_tail(cli),
        Command::MellinScan => cmd_mellin_scan(cli),
        Command::Hill => cmd_hill(cli),
        Command::TailRatio => cmd_tail_ratio(cli),
        Command::Counterexample => cmd_counterexample(cli),
    }
}

fn cmd_validate(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: ValidateConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let model = cfg.model.build()?;
    let report = model.validate();
    println!("{}", serde_json::to_string_pretty(report).unwrap());
    let writer = OutputWriter::new(&cli.out, "validate")?;
    writer.write_json(&Document {
        command: "validate".into(),
        config: &cfg,
        versions: Versions::current(),
        results: report,
    })?;
    if report.model_valid {
        Ok(())
    } else {
        Err(CliError::Validation("model failed validation".into()))
    }
}

#[derive(Serialize)]
struct RuinResults {
    estimates: Vec<ruin::RuinEstimate>,
    constant: f64,
}

fn cmd_ruin(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: RuinConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let grid = cfg.x_grid.resolve().map_err(CliError::Usage)?;
    let model = build_model(&cfg.model)?;

    // Estimates run first so a truncation diagnostic wins over a missing
    // asymptotic constant; a constant that does not exist (E[Y^alpha] >= 1
    // or a singular ratio) is a runtime infeasibility, not a usage error.
    let constant_err = |e: CoreError| CliError::Infeasible(e.to_string());
    let (estimates, constant) = match cfg.horizon {
        HorizonSpec::Finite(n) => {
            let ests = ruin::estimate_finite_ruin_grid(&model, &grid, n, cfg.samples, cfg.seed)?;
            let c = ruin::asymptotic_constant_finite(&model, cfg.alpha, n).map_err(constant_err)?;
            (ests, c)
        }
        HorizonSpec::Infinite => {
            let mut ests = Vec::with_capacity(grid.len());
            for &x in &grid {
                ests.push(ruin::estimate_infinite_ruin(
                    &model,
                    x,
                    cfg.samples,
                    cfg.eps_trunc,
                    cfg.seed,
                )?);
            }
            let c = ruin::asymptotic_constant_infinite(&model, cfg.alpha).map_err(constant_err)?;
            (ests, c)
        }
    };

    let writer = OutputWriter::new(&cli.out, "ruin")?;
    let header = [
        "x", "horizon", "p_hat", "std_error", "ci99_lo", "ci99_hi", "samples", "constant",
        "ratio",
    ];
    let rows: Vec<Vec<String>> = estimates
        .iter()
        .map(|e| {
            let horizon = match e.horizon {
                Horizon::Finite(n) => n.to_string(),
                Horizon::Infinite => "inf".into(),
            };
            let ratio = e.p_hat * e.threshold.powf(cfg.alpha) / constant;
            vec![
                fmt_f64(e.threshold),
                horizon,
                fmt_f64(e.p_hat),
                fmt_f64(e.std_error),
                fmt_f64(e.ci99.0),
                fmt_f64(e.ci99.1),
                e.samples.to_string(),
                fmt_f64(constant),
                fmt_f64(ratio),
            ]
        })
        .collect();
    let csv = writer.write_csv(&header, &rows)?;
    let json = writer.write_json(&Document {
        command: "ruin".into(),
        config: &cfg,
        versions: Versions::current(),
        results: RuinResults {
            estimates,
            constant,
        },
    })?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

#[derive(Serialize)]
struct ProductTailRow {
    x: f64,
    p_mc: Option<f64>,
    std_error: Option<f64>,
    p_exact: Option<f64>,
    constant: f64,
    ratio_mc: Option<f64>,
    ratio_exact: Option<f64>,
}

fn cmd_product_tail(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: ProductTailConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let grid = cfg.x_grid.resolve().map_err(CliError::Usage)?;
    let model = build_model(&cfg.model)?;
    let constant = ruin::asymptotic_constant_product(&model, cfg.alpha)?;

    let mc_estimates = if cfg.method != TailMethod::Exact {
        Some(ruin::estimate_finite_ruin_grid(
            &model,
            &grid,
            1,
            cfg.samples,
            cfg.seed,
        )?)
    } else {
        None
    };
    let mut rows_data = Vec::with_capacity(grid.len());
    for (j, &x) in grid.iter().enumerate() {
        let (p_mc, se) = match &mc_estimates {
            Some(ests) => (Some(ests[j].p_hat), Some(ests[j].std_error)),
            None => (None, None),
        };
        let p_exact = if cfg.method != TailMethod::Mc {
            Some(model.product_tail_exact(x)?)
        } else {
            None
        };
        let xa = x.powf(cfg.alpha);
        rows_data.push(ProductTailRow {
            x,
            p_mc,
            std_error: se,
            p_exact,
            constant,
            ratio_mc: p_mc.map(|p| p * xa / constant),
            ratio_exact: p_exact.map(|p| p * xa / constant),
        });
    }

    let writer = OutputWriter::new(&cli.out, "product-tail")?;
    let header = [
        "x", "p_mc", "std_error", "p_exact", "constant", "ratio_mc", "ratio_exact",
    ];
    let fmt_opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let rows: Vec<Vec<String>> = rows_data
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.x),
                fmt_opt(r.p_mc),
                fmt_opt(r.std_error),
                fmt_opt(r.p_exact),
                fmt_f64(r.constant),
                fmt_opt(r.ratio_mc),
                fmt_opt(r.ratio_exact),
            ]
        })
        .collect();
    let csv = writer.write_csv(&header, &rows)?;
    let json = writer.write_json(&Document {
        command: "product-tail".into(),
        config: &cfg,
        versions: Versions::current(),
        results: rows_data,
    })?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary {
    alpha: f64,
    beta_max: f64,
    min_modulus: f64,
    argmin_beta: f64,
    zeros: Vec<mellin::ZeroCandidate>,
    note: String,
}

fn cmd_mellin_scan(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: MellinScanConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let beta_max = cfg.beta_max.unwrap_or(100.0 / cfg.alpha);
    if !(beta_max > 0.0) {
        return Err(CliError::Usage(format!(
            "beta_max must be > 0, got {beta_max}"
        )));
    }
    let model = build_model(&cfg.model)?;
    let scan = mellin::scan_twisted_mellin(&model, cfg.alpha, beta_max, cfg.resolution)?;

    let writer = OutputWriter::new(&cli.out, "mellin-scan")?;
    let header = ["beta", "re", "im", "modulus"];
    let rows: Vec<Vec<String>> = (0..scan.betas.len())
        .map(|i| {
            vec![
                fmt_f64(scan.betas[i]),
                fmt_f64(scan.re[i]),
                fmt_f64(scan.im[i]),
                fmt_f64(scan.moduli[i]),
            ]
        })
        .collect();
    let csv = writer.write_csv(&header, &rows)?;
    let note = if scan.zeros.is_empty() {
        "zeros: none (grid-relative; the transform of an absolutely \
         continuous law decays as |beta| grows)"
            .to_string()
    } else {
        format!("zeros: {} flagged below 1e-10", scan.zeros.len())
    };
    let json = writer.write_json(&Document {
        command: "mellin-scan".into(),
        config: &cfg,
        versions: Versions::current(),
        results: ScanSummary {
            alpha: scan.alpha,
            beta_max,
            min_modulus: scan.min_modulus,
            argmin_beta: scan.argmin_beta,
            zeros: scan.zeros.clone(),
            note,
        },
    })?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn cmd_hill(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: HillConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.law.validate()?;
    let base = mc::base_rng(cfg.seed);
    let mut rng = mc::sample_rng(&base, 0);
    let samples = cfg.law.sample_n(&mut rng, cfg.samples);
    let ks: Vec<usize> = match &cfg.k_sweep {
        Some(sweep) => sweep.clone(),
        None => vec![cfg.k],
    };
    let estimates = tail_stats::hill_plot(&samples, &ks)?;

    let writer = OutputWriter::new(&cli.out, "hill")?;
    let header = ["k", "alpha_hat", "std_error", "sample_size"];
    let rows: Vec<Vec<String>> = estimates
        .iter()
        .map(|e| {
            vec![
                e.k.to_string(),
                fmt_f64(e.alpha_hat),
                fmt_f64(e.std_error),
                e.sample_size.to_string(),
            ]
        })
        .collect();
    let csv = writer.write_csv(&header, &rows)?;
    let json = writer.write_json(&Document {
        command: "hill".into(),
        config: &cfg,
        versions: Versions::current(),
        results: estimates,
    })?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

#[derive(Serialize)]
struct TailRatioResults {
    rv: tail_stats::RatioCurve,
    dv: tail_stats::DominatedVariationReport,
}

fn cmd_tail_ratio(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: TailRatioConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.law.validate()?;
    let grid = cfg.x_grid.resolve().map_err(CliError::Usage)?;

    let (rv, dv) = match cfg.source {
        TailSource::Analytic => {
            let law = cfg.law.clone();
            let tail = move |x: f64| law.tail(x).unwrap_or(0.0);
            let rv = tail_stats::tail_ratio_diagnostic(&tail, cfg.scale, &grid, cfg.tolerance)?;
            let dv = tail_stats::dominated_variation_check(&tail, cfg.dv_scale, &grid)?;
            (rv, dv)
        }
        TailSource::Empirical { samples } => {
            let base = mc::base_rng(cfg.seed);
            let mut rng = mc::sample_rng(&base, 0);
            let draws = cfg.law.sample_n(&mut rng, samples);
            let rv =
                tail_stats::tail_ratio_from_samples(&draws, cfg.scale, &grid, cfg.tolerance)?;
            let tail = tail_stats::empirical_tail(&draws);
            let dv = tail_stats::dominated_variation_check(&tail, cfg.dv_scale, &grid)?;
            (rv, dv)
        }
    };

    let writer = OutputWriter::new(&cli.out, "tail-ratio")?;
    let header = ["x", "ratio"];
    let rows: Vec<Vec<String>> = rv
        .xs
        .iter()
        .zip(&rv.ratios)
        .map(|(x, r)| vec![fmt_f64(*x), fmt_f64(*r)])
        .collect();
    let csv = writer.write_csv(&header, &rows)?;
    let json = writer.write_json(&Document {
        command: "tail-ratio".into(),
        config: &cfg,
        versions: Versions::current(),
        results: TailRatioResults { rv, dv },
    })?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn cmd_counterexample(cli: &Cli) -> Result<(), CliError> {
    let mut cfg: CounterexampleConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let params = CounterexampleParams {
        alpha: cfg.alpha,
        beta0: cfg.beta0,
        a: cfg.a,
        b: cfg.b,
        theta: cfg.theta,
        c: cfg.c,
        kernel1: cfg.kernel1.clone(),
    };
    let bundle = counterexample::build_bundle(params)?;
    let grid = match &cfg.x_grid {
        Some(g) => g.resolve().map_err(CliError::Usage)?,
        None => sarmanov_risk::numeric::log_grid(100.0, 10_000.0, 121),
    };
    let report = counterexample::demonstrate(&bundle, &grid)?;

    let writer = OutputWriter::new(&cli.out, "counterexample")?;
    let header = [
        "x",
        "conv_tail",
        "f_tail",
        "conv_ratio2",
        "f_ratio2",
        "x_alpha_conv",
    ];
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.x),
                fmt_f64(r.conv_tail),
                fmt_f64(r.f_tail),
                fmt_f64(r.conv_ratio2),
                fmt_f64(r.f_ratio2),
                fmt_f64(r.x_alpha_conv),
            ]
        })
        .collect();
    let csv = writer.write_csv(&header, &rows)?;

    #[derive(Serialize)]
    struct CounterexampleResults<'a> {
        bundle: &'a counterexample::CounterexampleBundle,
        product_ratio_at_top: f64,
        f_ratio_amplitude: f64,
        limit_constant_at_top: f64,
        target_constant: f64,
    }
    let json = writer.write_json(&Document {
        command: "counterexample".into(),
        config: &cfg,
        versions: Versions::current(),
        results: CounterexampleResults {
            bundle: &bundle,
            product_ratio_at_top: report.product_ratio_at_top,
            f_ratio_amplitude: report.f_ratio_amplitude,
            limit_constant_at_top: report.limit_constant_at_top,
            target_constant: report.target_constant,
        },
    })?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
