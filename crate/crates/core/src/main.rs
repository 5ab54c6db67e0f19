use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mixedls::harness::{
    format_table, run_all, run_experiment, run_suite, sweep_cells, write_report, write_report_to, ExperimentReport,
    GeneratorSpec, Method, ProblemKind, ReportFormat, Scale, Suite,
};
use mixedls::refine::RefinementConfig;

#[derive(Parser)]
#[command(name = "mixedls", version, about = "Mixed-precision LSE/GLS solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one generated problem and report accuracy and timings.
    Bench(BenchArgs),
    /// Run a table of condition numbers and methods.
    Sweep(SweepArgs),
    /// Run a built-in property suite and print pass/fail lines.
    Validate {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Lse,
    Gls,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Ir,
    GmresLeft,
    GmresBd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Spectrum,
    Precond,
    Factor,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepSuite {
    PaperLse,
    PaperGls,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(value_enum)]
    kind: KindArg,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1e3)]
    cond: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "ir")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 40)]
    maxit: usize,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    suite: SweepSuite,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Report file; CSV when the extension is `.csv`, JSON otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn format_of(a: FormatArg) -> ReportFormat {
    match a {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }
}

fn emit(reports: &[ExperimentReport], format: ReportFormat, out: Option<&Path>) -> Result<(), String> {
    let r = match out {
        Some(path) => write_report(reports, format, path),
        None => write_report_to(reports, format, std::io::stdout().lock()),
    };
    r.map_err(|e| e.to_string())
}

fn bench(a: BenchArgs) -> ExitCode {
    let spec = match a.kind {
        KindArg::Lse => GeneratorSpec::lse(a.m, a.n, a.p, a.cond, a.seed),
        KindArg::Gls => GeneratorSpec::gls(a.m, a.n, a.p, a.cond, a.seed),
    };
    let config = RefinementConfig { tol: a.tol, maxit: a.maxit, ..RefinementConfig::default() };
    if let Err(e) = spec.validate().and_then(|_| config.validate()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let method = match a.method {
        MethodArg::Direct => Method::Direct,
        MethodArg::Ir => Method::ClassicalIr,
        MethodArg::GmresLeft => Method::GmresLeft,
        MethodArg::GmresBd => Method::GmresBd,
    };
    let report = run_experiment(&spec, method, &config);
    if let Err(e) = emit(std::slice::from_ref(&report), format_of(a.format), a.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    eprintln!(
        "{} status={} iterations={} inner={} err1={:.3e} err2={:.3e}",
        method.label(),
        report.status,
        report.iterations,
        report.inner_iterations,
        report.metrics.err1,
        report.metrics.err2
    );
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    if report.succeeded() { ExitCode::SUCCESS } else { ExitCode::from(1) }
}

fn sweep(a: SweepArgs) -> ExitCode {
    let kind = match a.suite {
        SweepSuite::PaperLse => ProblemKind::Lse,
        SweepSuite::PaperGls => ProblemKind::Gls,
    };
    let scale = match a.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Full => Scale::Full,
    };
    let cells = sweep_cells(kind, scale, a.seed);
    let reports = run_all(&cells, &RefinementConfig::default());
    print!("{}", format_table(&reports));
    if let Some(path) = a.out.as_deref() {
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        };
        if let Err(e) = emit(&reports, format, Some(path)) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if reports.iter().any(|r| r.status == "failed") { ExitCode::from(1) } else { ExitCode::SUCCESS }
}

fn validate(suite: SuiteArg) -> ExitCode {
    let suite = match suite {
        SuiteArg::Spectrum => Suite::Spectrum,
        SuiteArg::Precond => Suite::Precond,
        SuiteArg::Factor => Suite::Factor,
    };
    let checks = run_suite(suite);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate { suite } => validate(suite),
    }
}
