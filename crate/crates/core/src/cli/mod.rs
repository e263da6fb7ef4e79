//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.

mod grid;
mod output;
mod pointfile;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{build_mixture, sample_mixture, Allocation, Method};
use crate::exec::with_threads;
use crate::geometry::{build_hex, build_improper, build_qam, Constellation};
use crate::harness::{
    build_cells, rrmse_study_with, ser_curve_timed, snr_to_sigma, FacetSet, LinkConfig,
    ReferenceSource, StudyOptions,
};
use crate::sampling::{NoiseModel, RngStream, StreamLabel};

pub use grid::parse_grid;
pub use output::{
    format_prob, render_csv, render_json, Field, Table, CELL_COLUMNS, COMPARE_COLUMNS,
    SAMPLE_COLUMNS, SER_COLUMNS,
};
pub use pointfile::{format_points, load_points, parse_points};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "aloe-ser",
    version,
    about = "Symbol error rate estimation for 2D constellations in AWGN"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SER over an Eb/N0 grid, one row per (Eb/N0, method).
    Ser(SerArgs),
    /// RRMSE of each estimator over repeated runs.
    Compare(CompareArgs),
    /// Decision-region facets of one symbol with their tail masses.
    Cell(CellArgs),
    /// Draws from the ALOE mixture of one symbol.
    Sample(SampleArgs),
    /// Write the constellation as a point file.
    Points(PointsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstKind {
    Qam,
    Hex,
    Improper,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ConstArgs {
    /// Constellation family.
    #[arg(long = "const", value_enum, default_value = "qam")]
    pub kind: ConstKind,
    /// Number of symbols.
    #[arg(long = "M", short = 'M')]
    pub m: Option<usize>,
    /// Circularity coefficient for the improper family.
    #[arg(long, default_value_t = 0.8)]
    pub kappa: f64,
    /// Point file for `--const custom`.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Keep custom points as given instead of scaling to unit energy.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed; drawn from entropy (and recorded in the output) if absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Worker threads (0 = all cores). Does not affect results.
    #[arg(long, env = "ALOE_SER_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SerArgs {
    #[command(flatten)]
    pub constellation: ConstArgs,
    /// Eb/N0 grid in dB: start:step:stop, comma list, or a single value.
    #[arg(long, default_value = "0:2:24")]
    pub snr: String,
    /// Samples per symbol.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Estimators (mc, is, aloe).
    #[arg(
        long = "methods",
        visible_alias = "method",
        value_delimiter = ',',
        default_value = "aloe"
    )]
    pub methods: Vec<String>,
    /// α grid of the overdispersed IS proposal.
    #[arg(long, default_value = "1:0.5:5")]
    pub alpha_grid: String,
    #[arg(long, value_enum, default_value = "categorical")]
    pub allocation: AllocationArg,
    #[arg(long, value_enum, default_value = "minimal")]
    pub facets: FacetArg,
    /// Fill the wall_time_s column (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub constellation: ConstArgs,
    #[arg(long, default_value = "0:2:24")]
    pub snr: String,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(
        long = "methods",
        visible_alias = "method",
        value_delimiter = ',',
        default_value = "mc,is,aloe"
    )]
    pub methods: Vec<String>,
    #[arg(long, default_value = "1:0.5:5")]
    pub alpha_grid: String,
    #[arg(long, default_value_t = 200)]
    pub repeats: usize,
    /// Budget multiplier of the ALOE reference run when no closed form exists.
    #[arg(long, default_value_t = 100)]
    pub ref_factor: usize,
    #[arg(long, value_enum, default_value = "categorical")]
    pub allocation: AllocationArg,
    #[arg(long, value_enum, default_value = "minimal")]
    pub facets: FacetArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CellArgs {
    #[command(flatten)]
    pub constellation: ConstArgs,
    #[arg(long, default_value_t = 0)]
    pub symbol: usize,
    /// Eb/N0 in dB.
    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,
    #[arg(long, value_enum, default_value = "minimal")]
    pub facets: FacetArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub constellation: ConstArgs,
    #[arg(long, default_value_t = 0)]
    pub symbol: usize,
    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "minimal")]
    pub facets: FacetArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct PointsArgs {
    #[command(flatten)]
    pub constellation: ConstArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AllocationArg {
    Categorical,
    Proportional,
}

impl From<AllocationArg> for Allocation {
    fn from(a: AllocationArg) -> Self {
        match a {
            AllocationArg::Categorical => Allocation::Categorical,
            AllocationArg::Proportional => Allocation::Proportional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FacetArg {
    Minimal,
    All,
}

impl From<FacetArg> for FacetSet {
    fn from(f: FacetArg) -> Self {
        match f {
            FacetArg::Minimal => FacetSet::Minimal,
            FacetArg::All => FacetSet::All,
        }
    }
}

/// Constellation part of a [`RunSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct ConstellationSpec {
    pub kind: ConstKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<String>,
    pub normalize: bool,
}

/// Fully resolved description of a run, echoed in every output header.
/// Output path and thread count are left out: neither affects the results.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: &'static str,
    pub constellation: ConstellationSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_factor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facets: Option<FacetSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunSpec {
    fn new(command: &'static str, constellation: ConstellationSpec, seed: Option<u64>) -> Self {
        RunSpec {
            command,
            constellation,
            snr_db: None,
            n: None,
            methods: None,
            alpha_grid: None,
            repeats: None,
            ref_factor: None,
            symbol: None,
            allocation: None,
            facets: None,
            seed,
        }
    }
}

/// Builds the constellation named by the flags.
pub fn resolve_constellation(args: &ConstArgs) -> Result<(Constellation, ConstellationSpec)> {
    let need_m = || {
        args.m.ok_or_else(|| {
            Error::invalid(format!("--M is required for --const {:?}", args.kind).to_lowercase())
        })
    };
    let (c, kappa, points) = match args.kind {
        ConstKind::Qam => (build_qam(need_m()?)?, None, None),
        ConstKind::Hex => (build_hex(need_m()?)?, None, None),
        ConstKind::Improper => (
            build_improper(need_m()?, args.kappa)?,
            Some(args.kappa),
            None,
        ),
        ConstKind::Custom => {
            let path = args
                .points
                .as_ref()
                .ok_or_else(|| Error::invalid("--const custom needs --points <file>"))?;
            let c = load_points(path, !args.no_normalize)?;
            if let Some(m) = args.m {
                if m != c.len() {
                    return Err(Error::invalid(format!(
                        "--M {m} does not match {} points in {}",
                        c.len(),
                        path.display()
                    )));
                }
            }
            (c, None, Some(path.display().to_string()))
        }
    };
    let spec = ConstellationSpec {
        kind: args.kind,
        m: c.len(),
        kappa,
        points,
        normalize: args.kind != ConstKind::Custom || !args.no_normalize,
    };
    Ok((c, spec))
}

fn parse_methods(raw: &[String]) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = raw
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::invalid("at least one method is required"));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn emit(common_out: Option<&PathBuf>, format: Format, spec: &RunSpec, table: &Table) -> Result<()> {
    let text = match format {
        Format::Csv => render_csv(spec, table),
        Format::Json => render_json(spec, table),
    };
    write_text(common_out, &text)
}

fn write_text(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn cmd_ser(args: &SerArgs) -> Result<()> {
    let (constellation, cspec) = resolve_constellation(&args.constellation)?;
    let snr = parse_grid(&args.snr)?;
    let methods = parse_methods(&args.methods)?;
    let alpha_grid = parse_grid(&args.alpha_grid)?;
    let seed = resolve_seed(args.common.seed);
    let mut cfg = LinkConfig::new(constellation, snr.clone(), args.n).with_methods(&methods);
    cfg.is_alpha_grid = alpha_grid.clone();
    cfg.allocation = args.allocation.into();
    cfg.facets = args.facets.into();
    cfg.validate()?;

    let cells = build_cells(&cfg.constellation, cfg.facets)?;
    let (curve, times) = with_threads(args.common.threads, || ser_curve_timed(&cfg, &cells, seed))?;

    let mut spec = RunSpec::new("ser", cspec, Some(seed));
    spec.snr_db = Some(snr);
    spec.n = Some(args.n);
    spec.methods = Some(methods.clone());
    if methods.contains(&Method::Is) {
        spec.alpha_grid = Some(alpha_grid);
    }
    if methods.contains(&Method::Aloe) {
        spec.allocation = Some(cfg.allocation);
    }
    spec.facets = Some(cfg.facets);

    let mut table = Table::new(SER_COLUMNS);
    for (r, secs) in curve.iter().zip(times) {
        let warning = if r.certified() {
            String::new()
        } else {
            let ids: Vec<String> = r.degenerate_symbols.iter().map(|s| s.to_string()).collect();
            eprintln!(
                "warning: Eb/N0 {} dB: degenerate proposal for symbols {} (p recorded as 0)",
                r.ebn0_db,
                ids.join(" ")
            );
            format!("degenerate:{}", ids.join(";"))
        };
        table.push(vec![
            Field::Plain(r.ebn0_db),
            Field::Text(r.method.to_string()),
            Field::opt_plain(r.alpha),
            Field::Prob(r.p_e),
            Field::Prob(r.p_e_std_error),
            Field::opt_prob(r.p_e_var_bound),
            Field::opt_prob(r.p_bar_mean),
            if args.timing {
                Field::Plain(secs)
            } else {
                Field::Missing
            },
            Field::Text(warning),
        ]);
    }
    emit(args.common.out.as_ref(), args.common.format, &spec, &table)
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let (constellation, cspec) = resolve_constellation(&args.constellation)?;
    let snr = parse_grid(&args.snr)?;
    let methods = parse_methods(&args.methods)?;
    let alpha_grid = parse_grid(&args.alpha_grid)?;
    if args.repeats < 2 {
        return Err(Error::invalid(format!(
            "--repeats must be at least 2, got {}",
            args.repeats
        )));
    }
    let seed = resolve_seed(args.common.seed);
    let mut cfg = LinkConfig::new(constellation, snr.clone(), args.n).with_methods(&methods);
    cfg.is_alpha_grid = alpha_grid.clone();
    cfg.allocation = args.allocation.into();
    cfg.facets = args.facets.into();
    cfg.validate()?;

    let opts = StudyOptions {
        reference_factor: args.ref_factor,
    };
    let study = with_threads(args.common.threads, || {
        rrmse_study_with(&cfg, args.repeats, seed, opts)
    })?;

    let mut spec = RunSpec::new("compare", cspec, Some(seed));
    spec.snr_db = Some(snr);
    spec.n = Some(args.n);
    spec.methods = Some(methods.clone());
    if methods.contains(&Method::Is) {
        spec.alpha_grid = Some(alpha_grid);
    }
    spec.repeats = Some(args.repeats);
    spec.ref_factor = Some(args.ref_factor);
    spec.allocation = Some(cfg.allocation);
    spec.facets = Some(cfg.facets);

    let mut table = Table::new(COMPARE_COLUMNS);
    table.note(
        "total_samples_per_run",
        cfg.per_symbol_n * cfg.constellation.len(),
    );
    for (snr_index, refp) in study.reference.iter().enumerate() {
        for (method, points) in &study.per_method {
            let p = &points[snr_index];
            table.push(vec![
                Field::Plain(p.ebn0_db),
                Field::Text(method.to_string()),
                Field::opt_plain(p.alpha),
                Field::opt_prob(p.rrmse),
                Field::opt_prob(refp.p_ref),
                Field::Text(
                    match refp.source {
                        ReferenceSource::Exact => "exact",
                        ReferenceSource::Aloe => "aloe",
                    }
                    .into(),
                ),
                Field::Prob(p.mean_estimate),
                Field::opt_prob(p.rrmse_mc_analytic),
            ]);
        }
    }
    emit(args.common.out.as_ref(), args.common.format, &spec, &table)
}

fn check_symbol(c: &Constellation, symbol: usize) -> Result<()> {
    if symbol >= c.len() {
        return Err(Error::invalid(format!(
            "symbol index {symbol} out of range (M = {})",
            c.len()
        )));
    }
    Ok(())
}

fn cmd_cell(args: &CellArgs) -> Result<()> {
    let (c, cspec) = resolve_constellation(&args.constellation)?;
    check_symbol(&c, args.symbol)?;
    let facets: FacetSet = args.facets.into();
    let cells = build_cells(&c, facets)?;
    let cell = &cells[args.symbol];
    let sigma = snr_to_sigma(args.snr, c.len(), c.energy());
    let noise = NoiseModel::new(cell.symbol, sigma)?;
    let mp = build_mixture(cell, &noise)?;

    let mut spec = RunSpec::new("cell", cspec, None);
    spec.snr_db = Some(vec![args.snr]);
    spec.symbol = Some(args.symbol);
    spec.facets = Some(facets);

    let mut table = Table::new(CELL_COLUMNS);
    table.note(
        "symbol",
        format!(
            "{} {}",
            format_prob(cell.symbol.re),
            format_prob(cell.symbol.im)
        ),
    );
    table.note("sigma", format_prob(sigma));
    table.note("K", cell.k());
    table.note("union_bound", format_prob(mp.union_bound));
    for (k, h) in cell.halfspaces.iter().enumerate() {
        table.push(vec![
            Field::Int(k as u64),
            Field::Prob(h.gamma.re),
            Field::Prob(h.gamma.im),
            Field::Prob(h.beta),
            Field::Prob(mp.canonical[k].tau),
            Field::Prob(mp.tail_masses[k].prob),
            Field::Prob(mp.weights[k]),
        ]);
    }
    emit(args.common.out.as_ref(), args.common.format, &spec, &table)
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let (c, cspec) = resolve_constellation(&args.constellation)?;
    check_symbol(&c, args.symbol)?;
    if args.n == 0 {
        return Err(Error::invalid("--n must be at least 1"));
    }
    let facets: FacetSet = args.facets.into();
    let cells = build_cells(&c, facets)?;
    let cell = &cells[args.symbol];
    let sigma = snr_to_sigma(args.snr, c.len(), c.energy());
    let noise = NoiseModel::new(cell.symbol, sigma)?;
    let mp = build_mixture(cell, &noise)?;
    let seed = resolve_seed(args.common.seed);
    let mut rng = RngStream::new(
        seed,
        StreamLabel::new(&[args.symbol as u64, Method::Aloe.tag()]),
    );

    let mut spec = RunSpec::new("sample", cspec, Some(seed));
    spec.snr_db = Some(vec![args.snr]);
    spec.n = Some(args.n);
    spec.symbol = Some(args.symbol);
    spec.facets = Some(facets);

    let mut table = Table::new(SAMPLE_COLUMNS);
    table.note("union_bound", format_prob(mp.union_bound));
    for _ in 0..args.n {
        let (x, k) = sample_mixture(&mp, &mut rng);
        table.push(vec![
            Field::Prob(x.re),
            Field::Prob(x.im),
            Field::Int(k as u64),
            Field::Int(mp.cell.count_membership(x) as u64),
        ]);
    }
    emit(args.common.out.as_ref(), args.common.format, &spec, &table)
}

fn cmd_points(args: &PointsArgs) -> Result<()> {
    let (c, _) = resolve_constellation(&args.constellation)?;
    write_text(args.out.as_ref(), &format_points(&c))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidArgument(_) | Error::DegenerateProposal { .. } => EXIT_USAGE,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ser(a) => cmd_ser(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Cell(a) => cmd_cell(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Points(a) => cmd_points(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
