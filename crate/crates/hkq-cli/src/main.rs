//! Command-line driver: axiom verification, moment map cross-checks,
//! quotient metric evaluation, curvature sweeps, and monomial
//! classification.
//!
//! Machine-readable JSON goes to stdout and a one-line summary to stderr.
//! Exit code 0 means every requested check passed, 1 means a check failed
//! (or, for `classify`, the groups are inequivalent), 2 means the input
//! was unusable.

use clap::{Args, Parser, Subcommand};
use hkq_core::curvature::{self, FdScheme, MetricField};
use hkq_core::quotient::{self, QuotientChartPoint};
use hkq_core::spec::{GroupSpec, LSpec, SpecFile, SpecMode};
use hkq_core::{classify, liealg, moment, parallel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] hkq_core::HkError),
    #[error("cannot read {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("bad {what}: {detail}")]
    Input { what: &'static str, detail: String },
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "hkq",
    version,
    about = "Flat hyper-Kähler groups: verify axioms, reduce, and classify"
)]
struct Cli {
    /// Seed for every randomized sample; equal seeds give equal output
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for sweeps (overrides HKQ_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a named example group as spec JSON
    Preset(PresetArgs),
    /// Check the algebraic and structural axioms of a group
    Verify(VerifyArgs),
    /// Cross-check the moment map implementations and their invariance
    Moment(MomentArgs),
    /// Evaluate the reduced quotient metric at chart points
    Metric(MetricArgs),
    /// Compare the closed-form quotient metric against the reduction oracle
    ReduceCompare(ReduceCompareArgs),
    /// Sweep curvature of the reduced metric or the subgroup slice
    Curvature(CurvatureArgs),
    /// Decide monomial equivalence of two groups
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct PresetArgs {
    /// One of: taub-nut, taubian-calabi, lwy
    name: String,

    /// Slope parameter for taub-nut
    #[arg(long, default_value_t = 1.0)]
    slope: f64,

    /// Fiber slot count for taubian-calabi
    #[arg(long, default_value_t = 2)]
    slots: usize,

    /// JSON rows of the square matrix for lwy, e.g. "[[1,0],[1,2]]"
    #[arg(long)]
    theta: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Spec JSON file
    #[arg(long)]
    spec: PathBuf,

    /// Residual tolerance for every axiom check
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct MomentArgs {
    /// Spec JSON file (field "l" selects the acting generators)
    #[arg(long)]
    spec: PathBuf,

    /// Override the number of acting generators from the spec file
    #[arg(long)]
    l: Option<usize>,

    /// Random points to test
    #[arg(long, default_value_t = 200)]
    samples: usize,

    /// Largest acceptable disagreement or invariance residual
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct MetricArgs {
    /// Spec JSON file (field "l" selects the acting generators)
    #[arg(long)]
    spec: PathBuf,

    /// Override the number of acting generators from the spec file
    #[arg(long)]
    l: Option<usize>,

    /// Explicit chart point as a JSON vector [free base | tau | radii]
    #[arg(long)]
    point: Option<String>,

    /// Random chart points to evaluate when no explicit point is given
    #[arg(long, default_value_t = 5)]
    samples: usize,

    /// Smallest sampled radius
    #[arg(long, default_value_t = 0.5)]
    rho_min: f64,

    /// Largest sampled radius
    #[arg(long, default_value_t = 5.0)]
    rho_max: f64,

    /// CSV output: chart coordinates, then lower-triangular metric entries
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct ReduceCompareArgs {
    /// Spec JSON file (field "l" selects the acting generators)
    #[arg(long)]
    spec: PathBuf,

    /// Override the number of acting generators from the spec file
    #[arg(long)]
    l: Option<usize>,

    /// Random chart points to compare at
    #[arg(long, default_value_t = 20)]
    samples: usize,

    /// Largest acceptable entrywise difference
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    /// Smallest sampled radius
    #[arg(long, default_value_t = 0.3)]
    rho_min: f64,

    /// Largest sampled radius
    #[arg(long, default_value_t = 10.0)]
    rho_max: f64,
}

#[derive(Args)]
struct CurvatureArgs {
    /// Spec JSON file (field "l" selects the acting generators)
    #[arg(long)]
    spec: PathBuf,

    /// Override the number of acting generators from the spec file
    #[arg(long)]
    l: Option<usize>,

    /// Random points to sweep
    #[arg(long, default_value_t = 10)]
    samples: usize,

    /// Finite-difference step
    #[arg(long, default_value_t = 1e-3)]
    step: f64,

    /// Richardson-extrapolated differencing
    #[arg(long)]
    refine: bool,

    /// Sweep sectional curvature of the subgroup slice of the whole group
    /// instead of Ricci curvature of the moment-map quotient
    #[arg(long)]
    slice: bool,

    /// Fail when |Ricci| exceeds this (or sectional drops below its negative)
    #[arg(long)]
    tol: Option<f64>,

    /// Smallest sampled radius (quotient sweep)
    #[arg(long, default_value_t = 0.5)]
    rho_min: f64,

    /// Largest sampled radius (quotient sweep)
    #[arg(long, default_value_t = 5.0)]
    rho_max: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    /// First spec JSON file
    #[arg(long)]
    spec: PathBuf,

    /// Second spec JSON file
    #[arg(long)]
    other: PathBuf,
}

struct Loaded {
    spec: GroupSpec,
    lspec: LSpec,
}

fn load_spec(path: &Path) -> CliResult<Loaded> {
    load_spec_with(path, None)
}

/// Load a spec file; `l_override` replaces the file's generator count.
fn load_spec_with(path: &Path, l_override: Option<usize>) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|err| CliError::Io {
        path: path.to_owned(),
        err,
    })?;
    let file = SpecFile::parse(&text)?;
    let spec = file.to_spec()?;
    let lspec = LSpec::first(l_override.or(file.l).unwrap_or(0));
    lspec.validate_shape(&spec)?;
    Ok(Loaded { spec, lspec })
}

fn parse_json_arg<T: serde::de::DeserializeOwned>(what: &'static str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Input {
        what,
        detail: e.to_string(),
    })
}

fn run_preset(args: &PresetArgs) -> CliResult<bool> {
    let (spec, lspec) = match args.name.as_str() {
        "taub-nut" => quotient::taub_nut(args.slope)?,
        "taubian-calabi" => quotient::taubian_calabi(args.slots)?,
        "lwy" => {
            let rows: Vec<Vec<f64>> = match &args.theta {
                Some(text) => parse_json_arg("--theta matrix", text)?,
                None => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            };
            let m = rows.len();
            if m == 0 || rows.iter().any(|r| r.len() != m) {
                return Err(CliError::Input {
                    what: "--theta matrix",
                    detail: format!("need a nonempty square matrix, got {m} rows"),
                });
            }
            let theta = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
            quotient::lwy(theta)?
        }
        other => {
            return Err(CliError::Input {
                what: "preset name",
                detail: format!("unknown preset {other}; try taub-nut, taubian-calabi, lwy"),
            })
        }
    };
    println!("{}", SpecFile::from_spec(&spec, Some(lspec.l())).to_json());
    eprintln!(
        "{}: ambient dimension {}, quotient dimension {}",
        args.name,
        spec.dim(),
        quotient::quotient_dimension(&spec, &lspec)
    );
    Ok(true)
}

fn run_verify(args: &VerifyArgs) -> CliResult<bool> {
    let loaded = load_spec(&args.spec)?;
    let report = match loaded.spec.mode() {
        SpecMode::Hyperkahler => liealg::verify_hyperkahler(&loaded.spec, args.tol)?,
        SpecMode::Flat2m => liealg::kahler_structure_flat(&loaded.spec, args.tol)?,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    eprintln!(
        "verify: {} checks, worst residual {:.2e}: {}",
        report.checks.len(),
        report.max_residual(),
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(report.passed)
}

fn run_moment(args: &MomentArgs, rng: &mut ChaCha8Rng) -> CliResult<bool> {
    let Loaded { spec, lspec } = load_spec_with(&args.spec, args.l)?;
    let mut worst_pair = 0.0f64;
    let mut worst_inv = 0.0f64;
    for _ in 0..args.samples {
        let g = moment::random_regular_point(&spec, rng);
        let a = moment::moment_quaternionic(&spec, &lspec, &g)?;
        let b = moment::moment_real(&spec, &lspec, &g)?;
        let c = moment::moment_contraction(&spec, &lspec, &g)?;
        worst_pair = worst_pair
            .max((&a - &b).amax())
            .max((&a - &c).amax())
            .max((&b - &c).amax());
        worst_inv = worst_inv.max(moment::check_invariance(&spec, &lspec, &g, 1, rng)?);
    }
    let passed = worst_pair <= args.tol && worst_inv <= args.tol;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "samples": args.samples,
            "worst_agreement": worst_pair,
            "worst_invariance": worst_inv,
            "tolerance": args.tol,
            "passed": passed,
        }))
        .expect("summary serializes")
    );
    eprintln!(
        "moment: {} points, agreement {:.2e}, invariance {:.2e}: {}",
        args.samples,
        worst_pair,
        worst_inv,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

fn run_metric(args: &MetricArgs, rng: &mut ChaCha8Rng) -> CliResult<bool> {
    let Loaded { spec, lspec } = load_spec_with(&args.spec, args.l)?;
    let points: Vec<QuotientChartPoint> = match &args.point {
        Some(text) => {
            let coords: Vec<f64> = parse_json_arg("--point vector", text)?;
            vec![QuotientChartPoint::from_vec(&spec, &lspec, &coords)?]
        }
        None => (0..args.samples)
            .map(|_| quotient::random_chart_point(&spec, &lspec, rng, args.rho_min, args.rho_max))
            .collect(),
    };
    let metrics: Vec<(Vec<f64>, DMatrix<f64>)> = points
        .iter()
        .map(|pt| Ok((pt.to_vec(), quotient::pp_metric(&spec, &lspec, pt)?)))
        .collect::<CliResult<_>>()?;

    if args.csv {
        let n = quotient::quotient_dimension(&spec, &lspec);
        let mut header: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        for i in 0..n {
            for j in 0..=i {
                header.push(format!("g{i}_{j}"));
            }
        }
        println!("{}", header.join(","));
        for (coords, g) in &metrics {
            let mut row: Vec<String> = coords.iter().map(f64::to_string).collect();
            for i in 0..n {
                for j in 0..=i {
                    row.push(g[(i, j)].to_string());
                }
            }
            println!("{}", row.join(","));
        }
    } else {
        let items: Vec<serde_json::Value> = metrics
            .iter()
            .map(|(coords, g)| {
                let rows: Vec<Vec<f64>> = (0..g.nrows())
                    .map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect())
                    .collect();
                json!({ "chart": coords, "metric": rows })
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&items).expect("metrics serialize")
        );
    }
    eprintln!(
        "metric: evaluated {} chart point(s) in dimension {}",
        metrics.len(),
        quotient::quotient_dimension(&spec, &lspec)
    );
    Ok(true)
}

fn run_reduce_compare(args: &ReduceCompareArgs, rng: &mut ChaCha8Rng) -> CliResult<bool> {
    let Loaded { spec, lspec } = load_spec_with(&args.spec, args.l)?;
    let points: Vec<QuotientChartPoint> = (0..args.samples)
        .map(|_| quotient::random_chart_point(&spec, &lspec, rng, args.rho_min, args.rho_max))
        .collect();
    let diffs = parallel::map_indexed(points.len(), |i| -> hkq_core::Result<f64> {
        let closed = quotient::pp_metric(&spec, &lspec, &points[i])?;
        let oracle = quotient::reduction_oracle(&spec, &lspec, &points[i])?;
        Ok((closed - oracle).amax())
    });
    let mut worst = 0.0f64;
    for d in diffs {
        worst = worst.max(d?);
    }
    let passed = worst <= args.tol;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "samples": args.samples,
            "worst_difference": worst,
            "tolerance": args.tol,
            "passed": passed,
        }))
        .expect("summary serializes")
    );
    eprintln!(
        "reduce-compare: {} points, worst entry difference {:.2e}: {}",
        args.samples,
        worst,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

fn run_curvature(args: &CurvatureArgs, rng: &mut ChaCha8Rng) -> CliResult<bool> {
    let Loaded { spec, lspec } = load_spec_with(&args.spec, args.l)?;
    let scheme = if args.refine {
        FdScheme::refined(args.step)
    } else {
        FdScheme::with_step(args.step)
    };

    if args.slice {
        let n = quotient::slice_dim(&spec, &lspec);
        let field = MetricField::subgroup_slice(spec.clone(), lspec.clone());
        let seeds: Vec<u64> = (0..args.samples).map(|_| rng.random()).collect();
        let mins = parallel::map_indexed(args.samples, |i| -> hkq_core::Result<f64> {
            let mut local_rng = ChaCha8Rng::seed_from_u64(seeds[i]);
            let x: Vec<f64> = (0..n).map(|_| local_rng.random_range(-1.5..1.5)).collect();
            let g = field.eval(&x)?;
            let riem = curvature::riemann(&field, &x, scheme)?;
            let mut local = f64::INFINITY;
            let mut planes = 0;
            while planes < 10 {
                let u = DVector::from_fn(n, |_, _| local_rng.random_range(-1.0..1.0));
                let v = DVector::from_fn(n, |_, _| local_rng.random_range(-1.0..1.0));
                match curvature::sectional_of(&riem, &g, &u, &v) {
                    Ok(kappa) => {
                        local = local.min(kappa);
                        planes += 1;
                    }
                    Err(_) => continue, // degenerate plane, redraw
                }
            }
            Ok(local)
        });
        let mut values = Vec::with_capacity(args.samples);
        let mut min_k = f64::INFINITY;
        for m in mins {
            let v = m?;
            min_k = min_k.min(v);
            values.push(v);
        }
        let passed = args.tol.is_none_or(|t| min_k >= -t);
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "mode": "slice-sectional",
                "samples": args.samples,
                "planes_per_point": 10,
                "step": args.step,
                "refined": args.refine,
                "per_point_minimum": values,
                "min_sectional": min_k,
                "tolerance": args.tol,
                "passed": passed,
            }))
            .expect("summary serializes")
        );
        eprintln!(
            "curvature (slice): {} points, minimum sectional {:.2e}: {}",
            args.samples,
            min_k,
            if passed { "PASS" } else { "FAIL" }
        );
        Ok(passed)
    } else {
        let field = MetricField::reduced(spec.clone(), lspec.clone());
        let points: Vec<Vec<f64>> = (0..args.samples)
            .map(|_| {
                quotient::random_chart_point(&spec, &lspec, rng, args.rho_min, args.rho_max)
                    .to_vec()
            })
            .collect();
        let sweep = curvature::ricci_sweep(&field, &points, scheme);
        let mut values = Vec::with_capacity(args.samples);
        let mut worst = 0.0f64;
        for r in sweep {
            let v = r?;
            worst = worst.max(v);
            values.push(v);
        }
        let passed = args.tol.is_none_or(|t| worst <= t);
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "mode": "quotient-ricci",
                "samples": args.samples,
                "step": args.step,
                "refined": args.refine,
                "per_point_max_abs_ricci": values,
                "max_abs_ricci": worst,
                "tolerance": args.tol,
                "passed": passed,
            }))
            .expect("summary serializes")
        );
        eprintln!(
            "curvature (quotient): {} points, max |Ricci| {:.2e}: {}",
            args.samples,
            worst,
            if passed { "PASS" } else { "FAIL" }
        );
        Ok(passed)
    }
}

fn run_classify(args: &ClassifyArgs) -> CliResult<bool> {
    let a = load_spec(&args.spec)?;
    let b = load_spec(&args.other)?;
    let inv_a = classify::invariants(&a.spec);
    let inv_b = classify::invariants(&b.spec);
    let witness = classify::equivalent_monomial(&a.spec, &b.spec)?;
    let equivalent = witness.is_some();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "invariants": { "spec": inv_a, "other": inv_b },
            "invariants_match": inv_a.matches(&inv_b, 1e-6),
            "equivalent": equivalent,
            "witness": witness,
        }))
        .expect("classification serializes")
    );
    match &witness {
        Some(w) => eprintln!("classify: equivalent, witness residual {:.2e}", w.residual),
        None => eprintln!("classify: not equivalent"),
    }
    Ok(equivalent)
}

fn run(command: &Command, rng: &mut ChaCha8Rng) -> CliResult<bool> {
    match command {
        Command::Preset(args) => run_preset(args),
        Command::Verify(args) => run_verify(args),
        Command::Moment(args) => run_moment(args, rng),
        Command::Metric(args) => run_metric(args, rng),
        Command::ReduceCompare(args) => run_reduce_compare(args, rng),
        Command::Curvature(args) => run_curvature(args, rng),
        Command::Classify(args) => run_classify(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    parallel::configure_threads(cli.threads.or_else(parallel::threads_from_env));
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match run(&cli.command, &mut rng) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
