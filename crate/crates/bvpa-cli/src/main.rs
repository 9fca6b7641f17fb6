//! Command-line interface over the bvpa library.
//!
//! Exit codes: 0 on success, 1 for usage problems (bad flags, malformed
//! parameter values), 2 for data problems (missing or malformed input
//! files, empty datasets or results), 3 for numeric failures of the
//! iterative procedures. Every command that writes a file does so
//! atomically (temp file plus rename), so interrupted runs never leave a
//! partial output behind. All floats are written with 17 significant
//! digits and parse back to the exact same value.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bvpa::data::{
    density_grid_2d, empirical_survival, ks_distance, load_csv, pot_transform, threshold_scan,
    PotConfig,
};
use bvpa::fit::FitRecord;
use bvpa::model::{bvpa_marginal, bvpa_sample_latent, density_lattice};
use bvpa::numeric::fmt_float;
use bvpa::pareto::pareto_sf;
use bvpa::study::{bootstrap_ci, run_study, StudyConfig};
use bvpa::{fit, BivariatePoint, BvpaError, BvpaParams, EmConfig, FitResult, Variant, PARAM_NAMES};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bvpa",
    version,
    about = "Bivariate Pareto with a shared shock: sampling, fitting, studies, bootstrap, and data analysis",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a reproducible sample and write it as CSV
    Sample(SampleArgs),
    /// Fit one estimation variant to a two-column CSV of observations
    Fit(FitArgs),
    /// Run a replication study over sample sizes and variants
    Simulate(SimulateArgs),
    /// Parametric-bootstrap confidence intervals around a fitted vector
    Bootstrap(BootstrapArgs),
    /// Threshold, rescale, fit, and diagnose a raw two-column dataset
    Analyze(AnalyzeArgs),
    /// Tabulate the classified joint density on a rectangular grid
    DensityGrid(DensityGridArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Generating parameters mu1,mu2,sigma1,sigma2,alpha0,alpha1,alpha2
    #[arg(long)]
    params: String,
    /// Number of draws
    #[arg(long)]
    n: usize,
    /// RNG seed; falls back to the BVPA_SEED environment variable, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row and two numeric columns
    #[arg(long)]
    input: PathBuf,
    /// Estimation variant: base, mod1, mod2 (alias mod2-wt), mod2-t, mod3, mod4
    #[arg(long)]
    variant: String,
    /// Stopping tolerance of the variant's own rule
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Hard cap on shape updates
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
    /// Include the surrogate-objective trace in the JSON
    #[arg(long)]
    emit_q_trace: bool,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// True parameters mu1,mu2,sigma1,sigma2,alpha0,alpha1,alpha2
    #[arg(long)]
    params: String,
    /// Comma-separated sample sizes, each at least 10
    #[arg(long)]
    sizes: String,
    /// Replications per (variant, size) cell
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Comma-separated variants, or 'all'
    #[arg(long, default_value = "all")]
    variants: String,
    /// Base seed; falls back to BVPA_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replications (results do not depend on this)
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Fit JSON produced by `bvpa fit`; its params seed the resamples
    #[arg(long)]
    fit_json: PathBuf,
    /// Size of each resample (normally the original dataset size)
    #[arg(long)]
    n: usize,
    /// Number of bootstrap resamples
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    /// Variant to refit on each resample; defaults to the fit JSON's variant
    #[arg(long)]
    variant: Option<String>,
    /// Seed; falls back to BVPA_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for resamples (results do not depend on this)
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV with a header row and two positive numeric columns
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out_dir: PathBuf,
    /// Retention thresholds t1,t2 in raw data units
    #[arg(long)]
    thresholds: Option<String>,
    /// Scale divisors d1,d2 applied after retention; default the thresholds
    #[arg(long)]
    divisors: Option<String>,
    /// Variant fitted to the exceedances, or 'all' (overlays then use mod1)
    #[arg(long, default_value = "all")]
    variant: String,
    /// Histogram bins per axis for the density grid
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Report retention for every quantile pair instead of fitting
    #[arg(long)]
    scan: bool,
    /// Comma-separated quantile levels tried by --scan
    #[arg(long, default_value = "0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95")]
    scan_quantiles: String,
}

#[derive(Args)]
struct DensityGridArgs {
    /// Parameters mu1,mu2,sigma1,sigma2,alpha0,alpha1,alpha2
    #[arg(long)]
    params: String,
    /// First-coordinate grid as lo,hi,steps (inclusive endpoints, steps >= 2)
    #[arg(long)]
    x1: String,
    /// Second-coordinate grid as lo,hi,steps
    #[arg(long)]
    x2: String,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Lib(BvpaError),
}

impl From<BvpaError> for CliError {
    fn from(e: BvpaError) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn exit_code(error: &CliError) -> u8 {
    match error {
        CliError::Usage(_) => EXIT_USAGE,
        CliError::Lib(e) => match e {
            BvpaError::InvalidParams(_) | BvpaError::Domain(_) | BvpaError::Precondition(_) => {
                EXIT_USAGE
            }
            BvpaError::Io(_)
            | BvpaError::Parse { .. }
            | BvpaError::EmptyData
            | BvpaError::EmptyResult(_) => EXIT_DATA,
            BvpaError::DegenerateData(_)
            | BvpaError::MleNonConvergence { .. }
            | BvpaError::DegenerateStatistics(_)
            | BvpaError::InvalidNormalization { .. }
            | BvpaError::StepDivergence(_)
            | BvpaError::AllReplicationsFailed { .. } => EXIT_NUMERIC,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bootstrap(args) => cmd_bootstrap(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::DensityGrid(args) => cmd_density_grid(args),
    }
}

// ---------------------------------------------------------------- helpers

/// Explicit flag first, then the BVPA_SEED environment variable, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("BVPA_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "BVPA_SEED must be an unsigned integer, got '{text}'"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{what}: '{part}' is not a number")))
        })
        .collect()
}

fn parse_params(text: &str) -> Result<BvpaParams, CliError> {
    let values = parse_f64_list(text, "--params")?;
    let array: [f64; 7] = values.try_into().map_err(|v: Vec<f64>| {
        CliError::Usage(format!(
            "--params needs 7 comma-separated values (mu1,mu2,sigma1,sigma2,alpha0,alpha1,alpha2), got {}",
            v.len()
        ))
    })?;
    Ok(BvpaParams::from_array(array)?)
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), CliError> {
    let values = parse_f64_list(text, what)?;
    if values.len() != 2 {
        return Err(CliError::Usage(format!(
            "{what} needs exactly two comma-separated values, got {}",
            values.len()
        )));
    }
    Ok((values[0], values[1]))
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--sizes: '{part}' is not a sample size")))
        })
        .collect()
}

fn parse_variants(text: &str) -> Result<Vec<Variant>, CliError> {
    if text.trim() == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    text.split(',')
        .map(|part| Variant::parse(part.trim()).map_err(CliError::from))
        .collect()
}

/// Inclusive grid lo..hi with `steps` points.
fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let values = parse_f64_list(text, what)?;
    if values.len() != 3 {
        return Err(CliError::Usage(format!(
            "{what} needs lo,hi,steps, got {} values",
            values.len()
        )));
    }
    let (lo, hi) = (values[0], values[1]);
    let steps = values[2];
    if steps.fract() != 0.0 || steps < 2.0 {
        return Err(CliError::Usage(format!(
            "{what}: steps must be an integer of at least 2, got {steps}"
        )));
    }
    if !(hi > lo) {
        return Err(CliError::Usage(format!(
            "{what}: hi must exceed lo, got {lo}..{hi}"
        )));
    }
    let steps = steps as usize;
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Writes through a temp file in the same directory plus an atomic rename,
/// so a crash mid-write never leaves a partial file at the target path.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "out".into());
    name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, contents).map_err(BvpaError::Io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::Lib(BvpaError::Io(e))
    })
}

/// Lax two-column reader for observation files: header row required, both
/// columns must be finite numbers, any sign allowed (locations can be
/// negative). Malformed rows name their 1-based line.
fn read_points_csv(path: &Path) -> Result<Vec<BivariatePoint>, CliError> {
    let contents = std::fs::read_to_string(path).map_err(BvpaError::Io)?;
    let mut rows = Vec::new();
    for (index, line) in contents.lines().enumerate() {
        let lineno = index + 1;
        if index == 0 {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() >= 2 && fields.iter().take(2).all(|f| f.trim().parse::<f64>().is_ok())
            {
                return Err(CliError::Lib(BvpaError::Parse {
                    line: 1,
                    message: "first row is numeric; expected a header row".into(),
                }));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(CliError::Lib(BvpaError::Parse {
                line: lineno,
                message: format!("expected exactly two columns, got {}", fields.len()),
            }));
        }
        let mut pair = [0.0f64; 2];
        for (slot, field) in pair.iter_mut().zip(&fields) {
            let value: f64 = field.trim().parse().map_err(|_| {
                CliError::Lib(BvpaError::Parse {
                    line: lineno,
                    message: format!("'{field}' is not a number"),
                })
            })?;
            if !value.is_finite() {
                return Err(CliError::Lib(BvpaError::Parse {
                    line: lineno,
                    message: format!("value {value} is not finite"),
                }));
            }
            *slot = value;
        }
        rows.push(BivariatePoint {
            x1: pair[0],
            x2: pair[1],
        });
    }
    if rows.is_empty() {
        return Err(CliError::Lib(BvpaError::EmptyData));
    }
    Ok(rows)
}

fn fit_json_string(record: &FitRecord) -> String {
    let mut json = serde_json::to_string_pretty(record).expect("fit record serializes");
    json.push('\n');
    json
}

// --------------------------------------------------------------- commands

fn cmd_sample(args: &SampleArgs) -> Result<(), CliError> {
    let params = parse_params(&args.params)?;
    let seed = resolve_seed(args.seed)?;
    let draws = bvpa_sample_latent(&params, args.n, seed);
    let ties = draws.iter().filter(|(_, latent)| latent.is_tie()).count();
    let mut out = String::from("x1,x2\n");
    for (point, _) in &draws {
        out.push_str(&format!(
            "{},{}\n",
            fmt_float(point.x1),
            fmt_float(point.x2)
        ));
    }
    write_atomic(&args.out, &out)?;
    if args.n > 0 {
        eprintln!(
            "sampled {} points with seed {}: {} exact ties ({:.4} of the sample)",
            args.n,
            seed,
            ties,
            ties as f64 / args.n as f64
        );
    } else {
        eprintln!("sampled 0 points with seed {seed}");
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let variant = Variant::parse(&args.variant)?;
    let data = read_points_csv(&args.input)?;
    let mut config = EmConfig::new(variant);
    config.tol = args.tol;
    config.max_iter = args.max_iter;
    let result = fit(&data, &config)?;
    write_atomic(&args.out, &fit_json_string(&result.record(args.emit_q_trace)))?;
    eprintln!(
        "{variant}: {} iterations on {} points, {}",
        result.iterations,
        data.len(),
        if result.converged {
            "converged"
        } else {
            "stopped at the iteration cap"
        }
    );
    if variant == Variant::Base && result.params.alpha0 < 0.01 {
        eprintln!(
            "note: alpha0 collapsed to {:.2e}; an estimated frame almost never reproduces exact \
             ties, so the observed tie class is empty and the base fit starves the shared shock",
            result.params.alpha0
        );
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = StudyConfig {
        true_params: parse_params(&args.params)?,
        sample_sizes: parse_sizes(&args.sizes)?,
        replications: args.reps,
        variants: parse_variants(&args.variants)?,
        base_seed: resolve_seed(args.seed)?,
        parallelism: args.parallelism,
    };
    let report = run_study(&config)?;
    for cell in &report.cells {
        if cell.failures > 0 {
            eprintln!(
                "warning: {}/{} replications failed for {} at n={}",
                cell.failures, report.replications, cell.variant, cell.n
            );
        }
    }
    if let Some(cell) = report
        .cells
        .iter()
        .find(|c| c.failures == report.replications)
    {
        return Err(CliError::Lib(BvpaError::AllReplicationsFailed {
            variant: cell.variant.to_string(),
            n: cell.n,
            failures: cell.failures,
        }));
    }
    write_atomic(&args.out, &report.to_csv())?;
    eprintln!(
        "wrote {} cells ({} replications each) to {}",
        report.cells.len(),
        report.replications,
        args.out.display()
    );
    Ok(())
}

fn cmd_bootstrap(args: &BootstrapArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.fit_json).map_err(BvpaError::Io)?;
    let record: FitRecord = serde_json::from_str(&text).map_err(|e| BvpaError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let variant = match &args.variant {
        Some(name) => Variant::parse(name)?,
        None => record.variant,
    };
    let seed = resolve_seed(args.seed)?;
    let ci = bootstrap_ci(
        &record.params,
        args.n,
        variant,
        args.resamples,
        seed,
        args.parallelism,
    )?;
    if ci.failures > 0 {
        eprintln!(
            "warning: {} of {} resamples failed and were excluded",
            ci.failures, ci.resamples
        );
    }
    write_atomic(&args.out, &ci.to_csv())?;
    eprintln!(
        "wrote 95% intervals for {variant} from {} resamples of size {} to {}",
        ci.resamples,
        args.n,
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let raw = load_csv(&args.input)?;
    std::fs::create_dir_all(&args.out_dir).map_err(BvpaError::Io)?;
    if args.scan {
        let levels = parse_f64_list(&args.scan_quantiles, "--scan-quantiles")?;
        let rows = threshold_scan(&raw, &levels)?;
        let mut out = String::from("q1,q2,threshold1,threshold2,retained\n");
        for row in &rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(row.q1),
                fmt_float(row.q2),
                fmt_float(row.threshold1),
                fmt_float(row.threshold2),
                row.retained
            ));
        }
        let path = args.out_dir.join("threshold_scan.csv");
        write_atomic(&path, &out)?;
        eprintln!(
            "scanned {} quantile pairs over {} rows -> {}",
            rows.len(),
            raw.rows.len(),
            path.display()
        );
        return Ok(());
    }
    let thresholds = args.thresholds.as_deref().ok_or_else(|| {
        CliError::Usage("--thresholds t1,t2 is required unless --scan is given".into())
    })?;
    let (t1, t2) = parse_pair(thresholds, "--thresholds")?;
    let (d1, d2) = match args.divisors.as_deref() {
        Some(text) => parse_pair(text, "--divisors")?,
        None => (t1, t2),
    };
    let pot = PotConfig {
        threshold1: t1,
        threshold2: t2,
        scale_divisors: (d1, d2),
    };
    let points = pot_transform(&raw, &pot)?;
    eprintln!(
        "retained {} of {} rows at thresholds ({t1}, {t2}), divisors ({d1}, {d2})",
        points.len(),
        raw.rows.len()
    );
    let variants: Vec<Variant> = if args.variant.trim() == "all" {
        Variant::ALL.to_vec()
    } else {
        vec![Variant::parse(args.variant.trim())?]
    };
    let mut estimates_csv = String::from("variant,parameter,estimate\n");
    let mut overlay: Option<FitResult> = None;
    let mut last_error: Option<BvpaError> = None;
    for &variant in &variants {
        match fit(&points, &EmConfig::new(variant)) {
            Ok(result) => {
                let path = args.out_dir.join(format!("fit_{variant}.json"));
                write_atomic(&path, &fit_json_string(&result.record(false)))?;
                for (name, value) in PARAM_NAMES.iter().zip(result.params.as_array()) {
                    estimates_csv
                        .push_str(&format!("{variant},{name},{}\n", fmt_float(value)));
                }
                eprintln!(
                    "{variant}: {} iterations, converged={}",
                    result.iterations, result.converged
                );
                // Survival overlays follow mod1 when it ran, otherwise the
                // first variant that fitted.
                if variant == Variant::Mod1 || overlay.is_none() {
                    overlay = Some(result);
                }
            }
            Err(e) => {
                eprintln!("warning: {variant} fit failed: {e}");
                last_error = Some(e);
            }
        }
    }
    let overlay = match overlay {
        Some(result) => result,
        None => return Err(CliError::Lib(last_error.expect("at least one variant ran"))),
    };
    write_atomic(&args.out_dir.join("estimates.csv"), &estimates_csv)?;
    for (coordinate, file) in [(1u8, "survival_x1.csv"), (2u8, "survival_x2.csv")] {
        let values: Vec<f64> = points
            .iter()
            .map(|p| if coordinate == 1 { p.x1 } else { p.x2 })
            .collect();
        let marginal = bvpa_marginal(&overlay.params, coordinate)?;
        let mut out = String::from("x,empirical,fitted\n");
        for (x, level) in empirical_survival(&values)? {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_float(x),
                fmt_float(level),
                fmt_float(pareto_sf(&marginal, x))
            ));
        }
        write_atomic(&args.out_dir.join(file), &out)?;
        let ks = ks_distance(&values, |x| pareto_sf(&marginal, x))?;
        eprintln!(
            "coordinate {coordinate}: Kolmogorov distance to the {} marginal = {ks:.4}",
            overlay.variant
        );
    }
    let cells = density_grid_2d(&points, (args.bins, args.bins))?;
    let mut out = String::from("x1_lo,x1_hi,x2_lo,x2_hi,density\n");
    for cell in &cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_float(cell.x1_lo),
            fmt_float(cell.x1_hi),
            fmt_float(cell.x2_lo),
            fmt_float(cell.x2_hi),
            fmt_float(cell.mass)
        ));
    }
    write_atomic(&args.out_dir.join("density_grid.csv"), &out)?;
    eprintln!("wrote estimates, survival tables, and density grid to {}", args.out_dir.display());
    Ok(())
}

fn cmd_density_grid(args: &DensityGridArgs) -> Result<(), CliError> {
    let params = parse_params(&args.params)?;
    let grid1 = parse_grid(&args.x1, "--x1")?;
    let grid2 = parse_grid(&args.x2, "--x2")?;
    let rows = density_lattice(&params, &grid1, &grid2);
    let mut out = String::from("x1,x2,branch,density\n");
    for (x1, x2, branch, density) in &rows {
        out.push_str(&format!(
            "{},{},{branch},{}\n",
            fmt_float(*x1),
            fmt_float(*x2),
            fmt_float(*density)
        ));
    }
    write_atomic(&args.out, &out)?;
    eprintln!(
        "wrote {} grid points ({} x {}) to {}",
        rows.len(),
        grid1.len(),
        grid2.len(),
        args.out.display()
    );
    Ok(())
}
