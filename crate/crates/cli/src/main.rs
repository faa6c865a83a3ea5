//! `binbell`: scans, threshold tables and certification runs for binned
//! Bell inequalities.

mod certify;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use binbell::bw::{bw_scan, BwArrangement, BwSearch};
use binbell::cv::{
    closed_form_expectation, cv_bell_expectation, squeezing_threshold, violation_boundary,
    CvScenario,
};
use binbell::phase_search::{PhaseSearch, PhaseWindow};
use binbell::{
    build_coefficients, tightness_certificate, BinningPreset, BinningSpec, EnumerationLimit,
    PresetKind,
};
use clap::{Args, Parser, Subcommand};

use crate::output::{emit, Format, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or out-of-range inputs; exit status 2.
    Usage(String),
    /// A checked property did not hold; exit status 1.
    Failed(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

fn usage(e: binbell::Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "binbell",
    version,
    about = "Binned Bell inequalities: scans, thresholds and certification"
)]
pub struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; tightness defaults to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Raises the dimension guard of the chosen subcommand.
    #[arg(long = "guard-d", global = true)]
    guard_d: Option<usize>,
    /// File of key=value defaults; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Common {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase-optimized Bell value of a preset binning for each d.
    ScanQudit(ScanQuditArgs),
    /// Maximizer count and exact ranks for one binning.
    Tightness(TightnessArgs),
    /// Phase-parity Bell value of the truncated squeezed state against r.
    ScanCv(ScanCvArgs),
    /// Minimal squeezing for a violation within delta of the quantum bound.
    Threshold(ThresholdArgs),
    /// Displaced-parity Bell value of the squeezed vacuum against r.
    ScanBw(ScanBwArgs),
    /// Randomized property suites.
    Certify(certify::CertifyArgs),
}

fn parse_window(s: &str) -> Result<PhaseWindow, String> {
    if s == "full" {
        return Ok(PhaseWindow::FullPeriod);
    }
    match s.parse::<f64>() {
        Ok(w) if w.is_finite() && w > 0.0 => Ok(PhaseWindow::Fixed(w)),
        _ => Err(format!("expected a positive width or 'full', got '{s}'")),
    }
}

#[derive(Debug, Args)]
struct ScanQuditArgs {
    /// t1, t2 or t3.
    #[arg(long, default_value = "t1")]
    binning: PresetKind,
    #[arg(long, default_value_t = 2)]
    dmin: usize,
    #[arg(long, default_value_t = 16)]
    dmax: usize,
    /// Phase window per axis: a width, or 'full' for one period.
    #[arg(long, default_value = "2", value_parser = parse_window)]
    window: PhaseWindow,
    /// Grid points per phase axis.
    #[arg(long, default_value_t = 17)]
    grid: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Also write every simplex iteration to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

/// Comma-separated outcome indices; an empty string is the empty subset.
#[derive(Debug, Clone, PartialEq, Eq)]
struct IndexList(Vec<usize>);

fn parse_index_list(s: &str) -> Result<IndexList, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(IndexList(Vec::new()));
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid outcome index '{}'", tok.trim()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(IndexList)
}

#[derive(Debug, Args)]
struct TightnessArgs {
    #[arg(long)]
    d: Option<usize>,
    /// Use a preset binning (t1, t2, t3) for all four subsets.
    #[arg(long)]
    preset: Option<PresetKind>,
    #[arg(long, value_parser = parse_index_list)]
    r1: Option<IndexList>,
    #[arg(long, value_parser = parse_index_list)]
    r2: Option<IndexList>,
    #[arg(long, value_parser = parse_index_list)]
    s1: Option<IndexList>,
    #[arg(long, value_parser = parse_index_list)]
    s2: Option<IndexList>,
}

#[derive(Debug, Args)]
struct ScanCvArgs {
    /// Odd photon-number cutoff.
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value_t = 0.1)]
    rmin: f64,
    #[arg(long, default_value_t = 5.0)]
    rmax: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 1)]
    smin: usize,
    #[arg(long, default_value_t = 99)]
    smax: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001,0.0001")]
    delta: Vec<f64>,
}

#[derive(Debug, Args)]
struct ScanBwArgs {
    #[arg(long, default_value_t = 0.25)]
    rmin: f64,
    #[arg(long, default_value_t = 2.0)]
    rmax: f64,
    #[arg(long, default_value_t = 8)]
    steps: usize,
    /// Optimize complex rather than real displacements.
    #[arg(long)]
    complex: bool,
    /// Fix the first setting of each party at zero displacement.
    #[arg(long)]
    anchored: bool,
    #[arg(long, default_value_t = 13)]
    grid: usize,
    #[arg(long, default_value_t = 2)]
    restarts: usize,
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn check_range(lo: f64, hi: f64, steps: usize, what: &str) -> Result<(), CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!(
            "{what}: need 0 < min <= max, got {lo}..{hi}"
        )));
    }
    if steps == 0 {
        return Err(CliError::Usage(format!("{what}: steps must be positive")));
    }
    Ok(())
}

fn scan_qudit(args: &ScanQuditArgs, common: &Common) -> Result<(), CliError> {
    let guard = common
        .guard_d
        .unwrap_or(PhaseSearch::default().dimension_limit);
    if args.dmin < 2 || args.dmin > args.dmax {
        return Err(CliError::Usage(format!(
            "need 2 <= dmin <= dmax, got {}..{}",
            args.dmin, args.dmax
        )));
    }
    if args.dmax > guard {
        return Err(CliError::Usage(format!(
            "dmax {} exceeds the guard {guard}; raise it with --guard-d",
            args.dmax
        )));
    }
    if args.grid == 0 {
        return Err(CliError::Usage("grid must be positive".into()));
    }
    let search = PhaseSearch {
        grid_points: args.grid,
        window: args.window,
        restarts: args.restarts,
        seed: common.seed,
        dimension_limit: guard,
        ..PhaseSearch::default()
    };

    let mut table = Table::new(&[
        "d",
        "binning",
        "value",
        "alpha1",
        "alpha2",
        "beta1",
        "beta2",
        "grid_value",
    ]);
    let mut trace = Table::new(&[
        "d",
        "start",
        "iteration",
        "alpha1",
        "alpha2",
        "beta1",
        "beta2",
        "value",
    ]);
    for d in args.dmin..=args.dmax {
        let coeffs =
            build_coefficients(&BinningPreset::new(args.binning, d).spec().map_err(usage)?);
        let opt = if args.trace.is_some() {
            search.run_traced(&coeffs, |rec| {
                let p = rec.phases;
                trace.push(vec![
                    d.into(),
                    rec.start.into(),
                    rec.iteration.into(),
                    p.alpha1.into(),
                    p.alpha2.into(),
                    p.beta1.into(),
                    p.beta2.into(),
                    rec.value.into(),
                ]);
            })
        } else {
            search.run(&coeffs)
        }
        .map_err(usage)?;
        let p = opt.phases;
        table.push(vec![
            d.into(),
            args.binning.name().into(),
            opt.value.into(),
            p.alpha1.into(),
            p.alpha2.into(),
            p.beta1.into(),
            p.beta2.into(),
            opt.grid_value.into(),
        ]);
    }
    let format = common.format_or(Format::Csv);
    emit(&table, common.out.as_deref(), format, false)?;
    if let Some(path) = &args.trace {
        emit(&trace, Some(path), format, false)?;
    }
    Ok(())
}

fn tightness_spec(args: &TightnessArgs) -> Result<BinningSpec, CliError> {
    let d = args
        .d
        .ok_or_else(|| CliError::Usage("tightness needs --d".into()))?;
    let lists = [&args.r1, &args.r2, &args.s1, &args.s2];
    match args.preset {
        Some(kind) => {
            if lists.iter().any(|l| l.is_some()) {
                return Err(CliError::Usage(
                    "give either --preset or explicit subsets, not both".into(),
                ));
            }
            BinningSpec::preset(kind, d).map_err(usage)
        }
        None => {
            let [r1, r2, s1, s2] = lists.map(|l| l.as_ref().map(|l| l.0.as_slice()));
            match (r1, r2, s1, s2) {
                (Some(r1), Some(r2), Some(s1), Some(s2)) => {
                    BinningSpec::new(d, r1, r2, s1, s2).map_err(usage)
                }
                _ => Err(CliError::Usage(
                    "give --preset or all of --r1 --r2 --s1 --s2".into(),
                )),
            }
        }
    }
}

fn tightness(args: &TightnessArgs, common: &Common) -> Result<(), CliError> {
    let spec = tightness_spec(args)?;
    let limit = common.guard_d.map(EnumerationLimit).unwrap_or_default();
    let report = tightness_certificate(&spec, limit).map_err(usage)?;
    let mut table = Table::new(&[
        "lr_max",
        "m_counted",
        "m_formula",
        "threshold",
        "linear_rank",
        "affine_rank",
        "is_tight_by_count",
    ]);
    table.push(vec![
        report.lr_max.into(),
        report.m_counted.into(),
        report.m_formula.into(),
        report.threshold.into(),
        report.linear_rank.into(),
        report.affine_rank.into(),
        report.is_tight_by_count.into(),
    ]);
    emit(
        &table,
        common.out.as_deref(),
        common.format_or(Format::Json),
        true,
    )?;
    Ok(())
}

/// Largest tolerated gap between the contraction and the closed form.
const CV_AGREEMENT: f64 = 1e-10;

fn scan_cv(args: &ScanCvArgs, common: &Common) -> Result<(), CliError> {
    check_range(args.rmin, args.rmax, args.steps, "r range")?;
    let first = CvScenario::standard(args.s, args.rmin).map_err(usage)?;
    for diag in first.diagnostics() {
        eprintln!("warning: {diag}");
    }
    let mut table = Table::new(&["s", "r", "closed_form", "contraction"]);
    let mut worst: f64 = 0.0;
    for r in linspace(args.rmin, args.rmax, args.steps) {
        let closed = closed_form_expectation(args.s, r);
        let contracted =
            cv_bell_expectation(&CvScenario::standard(args.s, r).map_err(usage)?).map_err(usage)?;
        worst = worst.max((closed - contracted).abs());
        table.push(vec![
            args.s.into(),
            r.into(),
            closed.into(),
            contracted.into(),
        ]);
    }
    emit(
        &table,
        common.out.as_deref(),
        common.format_or(Format::Csv),
        false,
    )?;
    if worst > CV_AGREEMENT {
        return Err(CliError::Failed(format!(
            "contraction and closed form differ by {worst:e} (> {CV_AGREEMENT:e})"
        )));
    }
    Ok(())
}

const ROUND_TRIP_TOLERANCE: f64 = 1e-9;

fn threshold(args: &ThresholdArgs, common: &Common) -> Result<(), CliError> {
    if args.smin > args.smax {
        return Err(CliError::Usage(format!(
            "need smin <= smax, got {}..{}",
            args.smin, args.smax
        )));
    }
    if args.delta.is_empty() {
        return Err(CliError::Usage("at least one --delta is required".into()));
    }
    // validate every delta before producing output
    for &delta in &args.delta {
        squeezing_threshold(1, delta).map_err(usage)?;
    }
    let mut table = Table::new(&[
        "s",
        "delta",
        "f_value",
        "r_min",
        "achieved",
        "round_trip_error",
        "boundary_r",
    ]);
    let mut failures = Vec::new();
    let first_odd = args.smin | 1;
    for s in (first_odd..=args.smax).step_by(2) {
        let boundary = violation_boundary(s).map_err(usage)?;
        for &delta in &args.delta {
            let t = squeezing_threshold(s, delta).map_err(usage)?;
            let achieved = t.achieved_value();
            let error = (achieved - (binbell::TSIRELSON - delta)).abs();
            if error > ROUND_TRIP_TOLERANCE {
                failures.push(format!("s={s} delta={delta}: {error:e}"));
            }
            table.push(vec![
                s.into(),
                delta.into(),
                t.f_value.into(),
                t.r_min.into(),
                achieved.into(),
                error.into(),
                boundary.into(),
            ]);
        }
    }
    emit(
        &table,
        common.out.as_deref(),
        common.format_or(Format::Csv),
        false,
    )?;
    if !failures.is_empty() {
        return Err(CliError::Failed(format!(
            "round trip failed: {}",
            failures.join("; ")
        )));
    }
    Ok(())
}

fn scan_bw(args: &ScanBwArgs, common: &Common) -> Result<(), CliError> {
    check_range(args.rmin, args.rmax, args.steps, "r range")?;
    let search = BwSearch {
        arrangement: if args.anchored {
            BwArrangement::AnchoredAtOrigin
        } else {
            BwArrangement::General
        },
        complex_displacements: args.complex,
        grid_points: args.grid,
        restarts: args.restarts,
        seed: common.seed,
        ..BwSearch::default()
    };
    let optima = bw_scan(&search, &linspace(args.rmin, args.rmax, args.steps)).map_err(usage)?;
    let mut table = Table::new(&[
        "r",
        "cutoff",
        "value",
        "max_sampled",
        "alpha1_re",
        "alpha1_im",
        "alpha2_re",
        "alpha2_im",
        "beta1_re",
        "beta1_im",
        "beta2_re",
        "beta2_im",
    ]);
    for o in &optima {
        let d = &o.displacements;
        table.push(vec![
            o.r.into(),
            o.cutoff.into(),
            o.value.into(),
            o.max_sampled.into(),
            d.alpha1.re.into(),
            d.alpha1.im.into(),
            d.alpha2.re.into(),
            d.alpha2.im.into(),
            d.beta1.re.into(),
            d.beta1.im.into(),
            d.beta2.re.into(),
            d.beta2.im.into(),
        ]);
    }
    emit(
        &table,
        common.out.as_deref(),
        common.format_or(Format::Csv),
        false,
    )?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::ScanQudit(a) => scan_qudit(a, common),
        Command::Tightness(a) => tightness(a, common),
        Command::ScanCv(a) => scan_cv(a, common),
        Command::Threshold(a) => threshold(a, common),
        Command::ScanBw(a) => scan_bw(a, common),
        Command::Certify(a) => certify::certify(a, common),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        CliError::Failed(msg) => {
            eprintln!("FAILED: {msg}");
            ExitCode::from(1)
        }
        CliError::Other(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
