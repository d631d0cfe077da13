use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use gridot::barycenter::{barycenter, interpolation_problem, BarycenterProblem};
use gridot::generators::{
    cube_root_normal, gaussian_map, gaussian_w2, rng_from_seed, uniform_cross, uniform_square,
    Gaussian,
};
use gridot::geometry::load_samples;
use gridot::io::{write_coupling, write_json_lines, write_samples};
use gridot::refinement::{solve, DensityModel, SolveConfig};
use gridot::transportmap::{
    level_metrics, map_error_e1, map_error_e1_table, per_axis_ks, LevelMetrics, MapEvaluator,
    ReferenceMap,
};
use gridot::{Error, RefinementPolicy, SampleSet};

const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gridot",
    version,
    about = "Sample-based optimal transport on adaptive grids"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "OT_WORKERS")]
    workers: Option<usize>,

    /// JSON file whose keys override the command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Input CSV files start with a header row.
    #[arg(long, global = true)]
    header: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multilevel transport between two sample sets.
    Solve(SolveArgs),
    /// Weighted barycenter of several sample sets.
    Barycenter(BarycenterArgs),
    /// Displacement interpolation between two sample sets.
    Interpolate(InterpolateArgs),
    /// Write synthetic samples.
    Generate(GenerateArgs),
    /// Error measures for an existing mapped sample file.
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Number of refinement levels.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Segments with more samples than this are bisected.
    #[arg(long, default_value_t = 10)]
    n_min: usize,
    #[arg(long, value_enum, default_value_t = PolicyArg::Standard)]
    policy: PolicyArg,
    /// Keep only the children of supported parent pairs.
    #[arg(long)]
    no_neighbor_expansion: bool,
    #[arg(long, value_enum, default_value_t = DensityArg::Linear)]
    density_model: DensityArg,
    #[arg(long, default_value_t = 32)]
    quadrature_order: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Standard,
    LongestAxis,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Uniform,
    Linear,
}

impl SolverFlags {
    fn to_config(&self) -> SolveConfig {
        SolveConfig {
            max_levels: self.levels,
            n_min: self.n_min,
            policy: match self.policy {
                PolicyArg::Standard => RefinementPolicy::Standard,
                PolicyArg::LongestAxis => RefinementPolicy::LongestAxis,
            },
            neighbor_expansion: !self.no_neighbor_expansion,
            density_model: match self.density_model {
                DensityArg::Uniform => DensityModel::Uniform,
                DensityArg::Linear => DensityModel::Linear,
            },
            quadrature_order: self.quadrature_order,
            ..SolveConfig::default()
        }
    }
}

#[derive(Args, Clone)]
struct ReferenceFlags {
    /// Known map for the error measures.
    #[arg(long, value_enum)]
    reference: Option<ReferenceKind>,
    /// Source Gaussian mean, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ref_src_mean: Option<Vec<f64>>,
    /// Source Gaussian covariance, row-major, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ref_src_cov: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ref_dst_mean: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ref_dst_cov: Option<Vec<f64>>,
    /// CSV of `x, y(x)` rows, one per source sample, in sample order.
    #[arg(long)]
    reference_table: Option<PathBuf>,
    /// Reference Wasserstein distance for E2 (computed for Gaussians).
    #[arg(long)]
    w_ref: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReferenceKind {
    GaussianAffine,
    CubeRoot,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    dst: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    #[command(flatten)]
    reference: ReferenceFlags,
    /// Also solve target to source and report the target-side map error.
    #[arg(long)]
    both_directions: bool,
}

#[derive(Args)]
struct BarycenterArgs {
    /// Marginal sample files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Barycentric weights, comma separated (default: uniform).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Starting samples (default: the first marginal).
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    /// Relative displacement tolerance.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct InterpolateArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    dst: PathBuf,
    /// Position along the interpolation, in [0, 1].
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Gaussian,
    UniformSquare,
    UniformCross,
    CuberootTarget,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: GeneratorKind,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mean: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cov: Option<Vec<f64>>,
    /// Dimension for the cube-root target.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// For gaussian: write `x, y(x)` rows of the affine map to this target.
    #[arg(long)]
    reference_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    target_mean: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    target_cov: Option<Vec<f64>>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Source samples.
    #[arg(long)]
    src: PathBuf,
    /// Mapped source samples, in source order.
    #[arg(long)]
    mapped: PathBuf,
    /// Target samples, for the per-axis KS statistic.
    #[arg(long)]
    dst: Option<PathBuf>,
    /// Numerical Wasserstein distance, for E2.
    #[arg(long)]
    w: Option<f64>,
    #[command(flatten)]
    reference: ReferenceFlags,
}

/// Keys a `--config` file may set, beyond those of [`SolveConfig`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct Extras {
    weights: Option<Vec<f64>>,
    max_iters: Option<usize>,
    tolerance: Option<f64>,
    seed: Option<u64>,
    n: Option<usize>,
    t: Option<f64>,
}

/// Command-level failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. } | Error::Internal(_) | Error::IterationLimit(_) => EXIT_SOLVER,
        Error::Marginal { source, .. } => exit_code(source),
        _ => EXIT_USAGE,
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

type CmdResult = std::result::Result<(), Failure>;

fn read_samples(path: &Path, header: bool) -> std::result::Result<SampleSet, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    load_samples(BufReader::new(file), header).map_err(|e| io_failure(path, e))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn output(path: Option<&Path>) -> std::result::Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_failure(path, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(path, e))
}

fn check_dims(a: &SampleSet, b: &SampleSet, a_name: &Path, b_name: &Path) -> CmdResult {
    if a.dim() != b.dim() {
        return Err(usage(format!(
            "dimension mismatch: {} has dimension {}, {} has dimension {}",
            a_name.display(),
            a.dim(),
            b_name.display(),
            b.dim()
        )));
    }
    Ok(())
}

/// Overlays the keys of `file` that `base` knows about; returns the rest.
fn overlay<T: Serialize + DeserializeOwned>(
    base: &T,
    file: &mut Map<String, Value>,
) -> std::result::Result<T, Failure> {
    let mut value = serde_json::to_value(base).map_err(|e| usage(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .expect("config types serialise to objects");
    let known: Vec<String> = obj.keys().cloned().collect();
    for key in known {
        if let Some(v) = file.remove(&key) {
            obj.insert(key, v);
        }
    }
    serde_json::from_value(value).map_err(|e| usage(format!("config: {e}")))
}

fn load_config(
    path: Option<&Path>,
    solve: SolveConfig,
    extras: Extras,
) -> std::result::Result<(SolveConfig, Extras), Failure> {
    let Some(path) = path else {
        return Ok((solve, extras));
    };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let Value::Object(mut file) = serde_json::from_str(&text).map_err(|e| io_failure(path, e))?
    else {
        return Err(usage(format!("{}: expected a JSON object", path.display())));
    };
    let solve = overlay(&solve, &mut file)?;
    let extras = overlay(&extras, &mut file)?;
    if !file.is_empty() {
        let keys: Vec<&String> = file.keys().collect();
        return Err(usage(format!("{}: unknown keys {keys:?}", path.display())));
    }
    solve.validate()?;
    Ok((solve, extras))
}

fn gaussian_from(
    mean: &Option<Vec<f64>>,
    cov: &Option<Vec<f64>>,
    what: &str,
) -> std::result::Result<Gaussian, Failure> {
    match (mean, cov) {
        (Some(m), Some(c)) => Ok(Gaussian::new(m.clone(), c.clone())?),
        _ => Err(usage(format!("{what} needs both a mean and a covariance"))),
    }
}

enum Reference {
    Map(ReferenceMap),
    Table(SampleSet),
}

fn resolve_reference(
    flags: &ReferenceFlags,
    header: bool,
) -> std::result::Result<(Option<Reference>, Option<f64>), Failure> {
    let mut w_ref = flags.w_ref;
    let reference = match (flags.reference, &flags.reference_table) {
        (Some(_), Some(_)) => {
            return Err(usage("--reference and --reference-table are exclusive"));
        }
        (Some(ReferenceKind::GaussianAffine), None) => {
            let g1 = gaussian_from(&flags.ref_src_mean, &flags.ref_src_cov, "source Gaussian")?;
            let g2 = gaussian_from(&flags.ref_dst_mean, &flags.ref_dst_cov, "target Gaussian")?;
            w_ref = w_ref.or(Some(gaussian_w2(&g1, &g2)?));
            Some(Reference::Map(gaussian_map(&g1, &g2)?))
        }
        (Some(ReferenceKind::CubeRoot), None) => Some(Reference::Map(ReferenceMap::CubeRoot)),
        (None, Some(path)) => Some(Reference::Table(read_samples(path, header)?)),
        (None, None) => None,
    };
    Ok((reference, w_ref))
}

/// Splits a table of `x, y(x)` rows and checks that its inputs match `source`.
fn table_outputs(table: &SampleSet, source: &SampleSet) -> std::result::Result<SampleSet, Failure> {
    let d = source.dim();
    if table.dim() != 2 * d || table.len() != source.len() {
        return Err(usage(format!(
            "reference table must have {} rows of {} columns, found {} of {}",
            source.len(),
            2 * d,
            table.len(),
            table.dim()
        )));
    }
    let mut ys = Vec::with_capacity(d * table.len());
    for (row, x) in table.points().zip(source.points()) {
        if row[..d] != *x {
            return Err(usage(
                "reference table rows do not match the source samples",
            ));
        }
        ys.extend_from_slice(&row[d..]);
    }
    Ok(SampleSet::new(d, ys)?)
}

fn cmd_solve(args: &SolveArgs, cli: &Cli) -> CmdResult {
    let (config, _) = load_config(
        cli.config.as_deref(),
        args.solver.to_config(),
        Extras::default(),
    )?;
    let src = read_samples(&args.src, cli.header)?;
    let dst = read_samples(&args.dst, cli.header)?;
    check_dims(&src, &dst, &args.src, &args.dst)?;
    let (reference, w_ref) = resolve_reference(&args.reference, cli.header)?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;

    let solution = solve(&src, &dst, &config)?;
    let mut metrics: Vec<LevelMetrics> = match &reference {
        Some(Reference::Map(r)) => level_metrics(&solution, &src, Some(r), w_ref)?,
        Some(Reference::Table(t)) => {
            let ys = table_outputs(t, &src)?;
            let mut m = level_metrics(&solution, &src, None, w_ref)?;
            for (entry, lvl) in m.iter_mut().zip(&solution.levels) {
                entry.e1_source_side =
                    Some(map_error_e1_table(&MapEvaluator::new(lvl)?, &src, &ys)?);
            }
            m
        }
        None => level_metrics(&solution, &src, None, w_ref)?,
    };
    if args.both_directions {
        let back = solve(&dst, &src, &config)?;
        let inverse = match &reference {
            Some(Reference::Map(r)) => r.inverse(),
            _ => None,
        };
        if let Some(inv) = inverse {
            for (entry, lvl) in metrics.iter_mut().zip(&back.levels) {
                let ev = MapEvaluator::new(lvl)?;
                entry.e1_target_side = Some(map_error_e1(&ev, &dst, |x| inv.eval(x))?);
            }
        } else {
            log::warn!("no inverse reference available; target-side error not reported");
        }
    }

    let evaluator = MapEvaluator::from_solution(&solution)?;
    let mapped = evaluator.push_samples(&src)?;
    let out = &args.out;
    let path = out.join("levels.jsonl");
    write_json_lines(create(&path)?, &solution.records()).map_err(|e| io_failure(&path, e))?;
    let path = out.join("coupling.csv");
    write_coupling(create(&path)?, solution.final_level()).map_err(|e| io_failure(&path, e))?;
    let path = out.join("mapped.csv");
    write_samples(create(&path)?, &mapped).map_err(|e| io_failure(&path, e))?;
    let path = out.join("metrics.jsonl");
    write_json_lines(create(&path)?, &metrics).map_err(|e| io_failure(&path, e))?;
    write_json(
        &out.join("metrics.json"),
        metrics.last().expect("at least one level"),
    )?;
    Ok(())
}

fn cmd_barycenter(args: &BarycenterArgs, cli: &Cli) -> CmdResult {
    let extras = Extras {
        weights: args.weights.clone(),
        max_iters: Some(args.max_iters),
        tolerance: Some(args.tol),
        ..Extras::default()
    };
    let (config, extras) = load_config(cli.config.as_deref(), args.solver.to_config(), extras)?;
    let k = args.inputs.len();
    let weights = extras.weights.unwrap_or_else(|| vec![1.0 / k as f64; k]);
    if weights.len() != k {
        return Err(usage(format!(
            "{} weights given for {k} inputs",
            weights.len()
        )));
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(usage("weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(usage(format!(
            "weights sum to {total}, expected 1 within 1e-9"
        )));
    }
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let marginals = args
        .inputs
        .iter()
        .map(|p| read_samples(p, cli.header))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for (m, p) in marginals.iter().zip(&args.inputs).skip(1) {
        check_dims(&marginals[0], m, &args.inputs[0], p)?;
    }
    let init = match &args.init {
        Some(p) => {
            let s = read_samples(p, cli.header)?;
            check_dims(&marginals[0], &s, &args.inputs[0], p)?;
            Some(s)
        }
        None => None,
    };
    let mut problem = BarycenterProblem::new(marginals, weights);
    problem.init = init;
    problem.config = config;
    problem.max_iters = extras.max_iters.unwrap_or(args.max_iters);
    problem.tolerance = extras.tolerance.unwrap_or(args.tol);
    let result = barycenter(&problem)?;

    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let path = args.out.join("barycenter.csv");
    write_samples(create(&path)?, &result.samples).map_err(|e| io_failure(&path, e))?;
    let path = args.out.join("history.jsonl");
    write_json_lines(create(&path)?, &result.history).map_err(|e| io_failure(&path, e))?;
    if !result.converged {
        log::warn!(
            "stopped after {} iterations without meeting the tolerance",
            result.history.len()
        );
    }
    Ok(())
}

fn cmd_interpolate(args: &InterpolateArgs, cli: &Cli) -> CmdResult {
    let extras = Extras {
        max_iters: Some(args.max_iters),
        tolerance: Some(args.tol),
        t: Some(args.t),
        ..Extras::default()
    };
    let (config, extras) = load_config(cli.config.as_deref(), args.solver.to_config(), extras)?;
    let src = read_samples(&args.src, cli.header)?;
    let dst = read_samples(&args.dst, cli.header)?;
    check_dims(&src, &dst, &args.src, &args.dst)?;
    let mut problem = interpolation_problem(&src, &dst, extras.t.unwrap_or(args.t), &config)?;
    problem.max_iters = extras.max_iters.unwrap_or(args.max_iters);
    problem.tolerance = extras.tolerance.unwrap_or(args.tol);
    let result = barycenter(&problem)?;
    write_samples(output(args.out.as_deref())?, &result.samples).map_err(|e| usage(e.to_string()))
}

fn cmd_generate(args: &GenerateArgs, cli: &Cli) -> CmdResult {
    let extras = Extras {
        seed: Some(args.seed),
        n: Some(args.n),
        ..Extras::default()
    };
    let (_, extras) = load_config(cli.config.as_deref(), SolveConfig::default(), extras)?;
    let n = extras.n.unwrap_or(args.n);
    let mut rng = rng_from_seed(extras.seed.unwrap_or(args.seed));
    let samples = match args.kind {
        GeneratorKind::Gaussian => {
            gaussian_from(&args.mean, &args.cov, "gaussian")?.sample(n, &mut rng)?
        }
        GeneratorKind::UniformSquare => uniform_square(n, &mut rng),
        GeneratorKind::UniformCross => uniform_cross(n, &mut rng),
        GeneratorKind::CuberootTarget => cube_root_normal(n, args.dim, &mut rng),
    };
    if let Some(path) = &args.reference_out {
        let GeneratorKind::Gaussian = args.kind else {
            return Err(usage("--reference-out is only available for gaussian"));
        };
        let g1 = gaussian_from(&args.mean, &args.cov, "gaussian")?;
        let g2 = gaussian_from(&args.target_mean, &args.target_cov, "target Gaussian")?;
        let map = gaussian_map(&g1, &g2)?;
        let d = samples.dim();
        let mut rows = Vec::with_capacity(2 * d * samples.len());
        for x in samples.points() {
            rows.extend_from_slice(x);
            rows.extend(map.eval(x));
        }
        let table = SampleSet::new(2 * d, rows)?;
        write_samples(create(path)?, &table).map_err(|e| io_failure(path, e))?;
    }
    write_samples(output(args.out.as_deref())?, &samples).map_err(|e| usage(e.to_string()))
}

#[derive(Serialize)]
struct MappedMetrics {
    #[serde(rename = "E1_source_side")]
    e1_source_side: Option<f64>,
    #[serde(rename = "W")]
    w: Option<f64>,
    #[serde(rename = "E2")]
    e2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_per_axis: Option<Vec<f64>>,
}

fn cmd_metrics(args: &MetricsArgs, cli: &Cli) -> CmdResult {
    let src = read_samples(&args.src, cli.header)?;
    let mapped = read_samples(&args.mapped, cli.header)?;
    check_dims(&src, &mapped, &args.src, &args.mapped)?;
    if src.len() != mapped.len() {
        return Err(usage(format!(
            "{} has {} rows but {} has {}",
            args.src.display(),
            src.len(),
            args.mapped.display(),
            mapped.len()
        )));
    }
    let (reference, w_ref) = resolve_reference(&args.reference, cli.header)?;
    let rms = |ys: &SampleSet| {
        let sum: f64 = mapped
            .points()
            .zip(ys.points())
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>())
            .sum();
        (sum / src.len() as f64).sqrt()
    };
    let e1 = match reference {
        Some(Reference::Map(r)) => {
            let coords = src.points().flat_map(|x| r.eval(x)).collect();
            Some(rms(&SampleSet::new(src.dim(), coords)?))
        }
        Some(Reference::Table(t)) => Some(rms(&table_outputs(&t, &src)?)),
        None => None,
    };
    let ks = match &args.dst {
        Some(p) => {
            let dst = read_samples(p, cli.header)?;
            check_dims(&src, &dst, &args.src, p)?;
            Some(per_axis_ks(&mapped, &dst))
        }
        None => None,
    };
    let report = MappedMetrics {
        e1_source_side: e1,
        w: args.w,
        e2: args.w.zip(w_ref).map(|(w, r)| w - r),
        ks_per_axis: ks,
    };
    let mut out = BufWriter::new(io::stdout().lock());
    serde_json::to_writer(&mut out, &report).map_err(|e| usage(e.to_string()))?;
    writeln!(out).map_err(|e| usage(e.to_string()))
}

fn run(cli: &Cli) -> CmdResult {
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, cli),
        Command::Barycenter(a) => cmd_barycenter(a, cli),
        Command::Interpolate(a) => cmd_interpolate(a, cli),
        Command::Generate(a) => cmd_generate(a, cli),
        Command::Metrics(a) => cmd_metrics(a, cli),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gridot: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
