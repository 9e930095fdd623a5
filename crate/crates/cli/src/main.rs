use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steinlab::constructions::multimatrix_decompose;
use steinlab::derivations::{derivation_space, Envelope};
use steinlab::linalg::format_rational;
use steinlab::report::{self, AlgebraJson, Format, RunOptions, SpecFile, VerificationReport};
use steinlab::vndim::{phi_x, vn_dimension};
use steinlab::Error;

/// Derivation spaces, crossed products and von Neumann dimensions of
/// finite-dimensional tracial *-algebras.
#[derive(Parser, Debug)]
#[command(name = "steinlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiments described in a JSON spec file.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in battery.
    Corpus {
        #[command(flatten)]
        common: Common,
        /// Print the corpus specs as JSON instead of running them.
        #[arg(long)]
        list: bool,
    },
    /// Print the dimension of the derivation space of an algebra.
    Dim {
        algebra: PathBuf,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Pass/fail tolerance; overrides spec files and STEINLAB_TOL.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, default_value = "md", value_parser = parse_format)]
    format: Format,
    /// Seed for randomized checks; overrides spec files.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include per-check wall-clock times (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn env_tolerance() -> Result<f64, Error> {
    match std::env::var("STEINLAB_TOL") {
        Err(_) => Ok(report::DEFAULT_TOLERANCE),
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .ok_or_else(|| Error::spec("STEINLAB_TOL", format!("not a positive number: {s:?}"))),
    }
}

fn options(common: &Common) -> Result<RunOptions, Error> {
    Ok(RunOptions {
        tolerance: common.tolerance,
        fallback_tolerance: env_tolerance()?,
        seed: common.seed,
        timings: common.timings,
    })
}

fn emit(report: &VerificationReport, common: &Common) -> Result<ExitCode, Error> {
    let text = report.render(common.format)?;
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    let s = report.summary;
    eprintln!(
        "{} passed, {} failed, {} skipped",
        s.passed, s.failed, s.skipped
    );
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(std::fs::read_to_string(path)?)
}

fn dim(path: &Path, json: bool) -> Result<ExitCode, Error> {
    let text = read(path)?;
    let spec: AlgebraJson = serde_json::from_str(&text).map_err(|e| {
        Error::spec(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let built = spec.build("$")?;
    let report = built.algebra.validate(1e-9);
    if !report.pass {
        return Err(Error::spec(
            "$",
            format!("algebra fails validation: {}", report.failures().join(", ")),
        ));
    }
    let space = derivation_space(&Envelope::new(built.algebra.clone()))?;
    let d = vn_dimension(&phi_x(&space, space.generators())?)?;
    let bound = multimatrix_decompose(&built.algebra)
        .map(|bs| bs.iter().map(|b| (b.size * b.size) as u64).product::<u64>())
        .unwrap_or(1)
        .max(100);
    let rational = d.rational_with(bound).map(|(p, q)| format_rational(p, q));
    if json {
        let v = serde_json::json!({
            "algebra": built.algebra.label(),
            "dim": built.algebra.dim(),
            "linear_dim_der": space.len(),
            "vn_dim_der": d.value,
            "rational": rational,
            "closure_residual": d.closure_residual,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        let q = rational.map(|q| format!(" ({q})")).unwrap_or_default();
        println!("{}: dim Der = {:.12}{q}", built.algebra.label(), d.value);
        println!(
            "linear dimension {}, closure residual {:.1e}",
            space.len(),
            d.closure_residual
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { spec, common } => read(spec)
            .and_then(|t| SpecFile::parse(&t))
            .and_then(|specs| report::run(&specs, &options(common)?))
            .and_then(|r| emit(&r, common)),
        Command::Corpus { common, list: true } => serde_json::to_string_pretty(&report::corpus())
            .map_err(Error::from)
            .map(|s| {
                println!("{s}");
                let _ = common;
                ExitCode::SUCCESS
            }),
        Command::Corpus {
            common,
            list: false,
        } => options(common)
            .and_then(|o| report::run(&report::corpus_specs(), &o))
            .and_then(|r| emit(&r, common)),
        Command::Dim { algebra, json } => dim(algebra, *json),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
