use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use warpcurv::ambient::{ambient_selftest, AmbientSelfTest, WarpedAmbient};
use warpcurv::config::{load_config, CheckSpec, OutputFormat, RunConfig};
use warpcurv::run::{
    convergence_tables, resolve_threads, run_config, with_threads, write_convergence_csv,
    RunOptions,
};
use warpcurv::symmetric::{kernel_selftest, KernelSelfTest};
use warpcurv::verify::ConvergenceCheck;
use warpcurv::{Error, Result};

const SCHEMA: &str = include_str!("../../../docs/config-schema.toml");

#[derive(Parser)]
#[command(
    name = "warpcurv",
    version,
    about = "Curvature checks for hypersurfaces in warped products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a configuration file and write a report.
    Verify(VerifyArgs),
    /// Check the ambient geometry and the linear-algebra kernels.
    Selftest(SelftestArgs),
    /// Tabulate residuals against resolution.
    Convergence(ConvergenceArgs),
    /// Print the annotated configuration schema.
    Schema,
}

#[derive(Args)]
struct Common {
    /// Report file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to WARPCURV_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Overrides the configured quadrature resolution.
    #[arg(long)]
    resolution: Option<usize>,
    /// Overrides every residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Omit the timestamp so that reports compare byte for byte.
    #[arg(long)]
    no_timestamp: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SelftestArgs {
    /// Fiber dimension of the hyperbolic ambient.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    config: PathBuf,
    /// `hk` or `minkowski:k`; repeatable. Defaults to the convergence checks
    /// of the configuration, or to `minkowski:0` and `minkowski:1`.
    #[arg(long = "check")]
    checks: Vec<String>,
    /// Comma-separated resolutions, e.g. `8,16,32,64`.
    #[arg(long, value_delimiter = ',')]
    resolutions: Vec<usize>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize)]
struct SelftestReport {
    ambient: AmbientSelfTest,
    kernel: KernelSelfTest,
    passed: bool,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) => File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|source| Error::Io {
                path: p.display().to_string(),
                source,
            }),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io {
            path: path.map_or("standard output".into(), |p| p.display().to_string()),
            source,
        })
}

fn verify(args: VerifyArgs) -> Result<i32> {
    let mut cfg: RunConfig = load_config(&args.config)?;
    if let Some(r) = args.resolution {
        cfg.resolution = r;
    }
    if let Some(t) = args.tol {
        cfg.tolerances = cfg.tolerances.with_residual_tolerance(t);
    }
    cfg.validate()?;
    let threads = resolve_threads(args.common.threads)?;
    let opts = RunOptions {
        no_timestamp: args.no_timestamp,
    };
    let report = with_threads(threads, || run_config(&cfg, opts))??;
    let path = args
        .common
        .out
        .clone()
        .or_else(|| cfg.output.path.clone().map(PathBuf::from));
    match args.format.unwrap_or(cfg.output.format) {
        OutputFormat::Json => write_text(path.as_deref(), &report.to_json())?,
        OutputFormat::Csv => report.write_csv(open_output(path.as_deref())?)?,
    }
    Ok(report.exit_code())
}

fn selftest(args: SelftestArgs) -> Result<i32> {
    let amb = WarpedAmbient::hyperbolic(args.n)?;
    let threads = resolve_threads(args.common.threads)?;
    let report = with_threads(threads, || -> Result<SelftestReport> {
        let ambient = ambient_selftest(&amb, args.samples, args.seed);
        let kernel = kernel_selftest(args.samples, args.seed)?;
        let passed = ambient.passed && kernel.passed;
        Ok(SelftestReport {
            ambient,
            kernel,
            passed,
        })
    })??;
    let value = serde_json::to_value(&report).expect("report serializes");
    let text = serde_json::to_string_pretty(&value).expect("JSON value prints") + "\n";
    write_text(args.common.out.as_deref(), &text)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn convergence(args: ConvergenceArgs) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if !args.resolutions.is_empty() {
        cfg.convergence_resolutions = args.resolutions.clone();
    }
    let mut checks = Vec::new();
    for s in &args.checks {
        let spec: CheckSpec = format!("convergence:{s}")
            .parse()
            .map_err(Error::InvalidArgument)?;
        if let CheckSpec::Convergence(c) = spec {
            checks.push(c);
        }
    }
    if checks.is_empty() {
        checks = cfg
            .checks
            .iter()
            .filter_map(|c| match c {
                CheckSpec::Convergence(c) => Some(*c),
                _ => None,
            })
            .collect();
    }
    if checks.is_empty() {
        checks = vec![
            ConvergenceCheck::Minkowski(0),
            ConvergenceCheck::Minkowski(1),
        ];
    }
    cfg.checks = checks.iter().map(|c| CheckSpec::Convergence(*c)).collect();
    cfg.validate()?;
    let threads = resolve_threads(args.common.threads)?;
    let tables = with_threads(threads, || convergence_tables(&cfg, &checks))??;
    let path = args.common.out.as_deref();
    match args.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => write_convergence_csv(&tables, open_output(path)?)?,
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = tables
                .iter()
                .map(|(family, t)| match t {
                    Ok(t) => serde_json::json!({ "family": family, "table": t }),
                    Err(e) => serde_json::json!({ "family": family, "error": e.to_string() }),
                })
                .collect();
            let text = serde_json::to_string_pretty(&rows).expect("JSON value prints") + "\n";
            write_text(path, &text)?;
        }
    }
    for (family, t) in &tables {
        if let Err(e) = t {
            eprintln!("warpcurv: {family}: {e}");
        }
    }
    Ok(if tables.iter().any(|(_, t)| t.is_err()) {
        2
    } else if tables
        .iter()
        .all(|(_, t)| t.as_ref().is_ok_and(|t| t.verdict.passed()))
    {
        0
    } else {
        1
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Selftest(a) => selftest(a),
        Command::Convergence(a) => convergence(a),
        Command::Schema => write_text(None, SCHEMA).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("warpcurv: {e}");
            ExitCode::from(2)
        }
    }
}
