use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pointnetlk::bench::{
    cost_sweep, load_encoder, make_data, run_benchmark, run_timing, sweep_to_csv, timing_to_csv, DataSpec,
    ExperimentConfig, ExperimentKind, ShapeSource, TimingConfig,
};
use pointnetlk::mesh::sample_surface;
use pointnetlk::metrics::{records_to_csv, success_curve, success_ratio};
use pointnetlk::se3::Axis;
use pointnetlk::shapes::asymmetric_mesh;
use pointnetlk::{
    icp_register, icp_register_partial, register, register_partial, IcpConfig, Method, PointCloud, Pooling,
    RegistrationResult, SolverConfig, VisibilityMode,
};

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "pointnetlk",
    version,
    about = "Point cloud registration with IC-LK over pooled point features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register SOURCE onto TEMPLATE with IC-LK and print the estimate.
    Register(PairArgs),
    /// Register SOURCE onto TEMPLATE with ICP and print the estimate.
    Icp(PairArgs),
    /// Paired IC-LK/ICP trials on synthetic perturbations; writes CSV.
    Benchmark(BenchmarkArgs),
    /// Median run time of both methods against cloud size.
    Timing(TimingArgs),
    /// Cost of both methods while rotating SOURCE about an axis.
    CostSweep(SweepArgs),
    /// Write a template/source pair and a manifest with the ground truth.
    MakeData(MakeDataArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points sampled per mesh.
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Rotation magnitude range in degrees, LO:HI.
    #[arg(long, value_parser = parse_range)]
    rot_range: Option<(f64, f64)>,
    /// Translation magnitude range, LO:HI.
    #[arg(long, value_parser = parse_range)]
    trans_range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    /// Encoder weights; without it the moment encoder is used.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Override the pooling stored in the weights file.
    #[arg(long)]
    pooling: Option<Pooling>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Finite-difference step for the Jacobian.
    #[arg(long)]
    step: Option<f64>,
    /// IC-LK stop threshold on the twist update.
    #[arg(long)]
    stop_thresh: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "depth")]
    visibility: VisibilityMode,
}

impl Common {
    fn solver(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            step: self.step.unwrap_or(d.step),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            stop_threshold: self.stop_thresh.unwrap_or(d.stop_threshold),
            visibility: self.visibility,
            ..d
        }
    }

    fn icp(&self) -> IcpConfig {
        let d = IcpConfig::default();
        IcpConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            ..d
        }
    }

    fn encoder(&self) -> CliResult<Box<dyn pointnetlk::Encoder>> {
        if self.weights.is_none() && self.pooling.is_some() {
            return Err("--pooling requires --weights".into());
        }
        Ok(load_encoder(self.weights.as_deref(), self.pooling)?)
    }
}

#[derive(Args)]
struct PairArgs {
    template: PathBuf,
    source: PathBuf,
    /// Use the partial-visibility loop.
    #[arg(long)]
    partial: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// OFF meshes or XYZ clouds, cycled over trials; defaults to a built-in shape.
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "clean")]
    kind: ExperimentKind,
    /// Initial-angle bin width for the success curve, degrees.
    #[arg(long, default_value_t = 10.0)]
    bin_width: f64,
    /// Write measured wall times instead of 0 (makes the CSV nondeterministic).
    #[arg(long)]
    record_wall_time: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TimingArgs {
    /// OFF mesh to sample; defaults to a built-in shape.
    input: Option<PathBuf>,
    /// Ascending comma-separated point counts.
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 512, 1024, 2048, 4096, 8192])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    template: PathBuf,
    source: PathBuf,
    #[arg(long, default_value = "z")]
    axis: Axis,
    /// Angle grid in degrees, LO:HI:STEP.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "-180:180:5")]
    angles: AngleGrid,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct MakeDataArgs {
    /// OFF mesh; defaults to a built-in shape.
    mesh: Option<PathBuf>,
    #[arg(long, default_value = "clean")]
    kind: ExperimentKind,
    #[command(flatten)]
    common: Common,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number '{hi}'"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("range must satisfy LO <= HI, got '{s}'"));
    }
    Ok((lo, hi))
}

#[derive(Clone)]
struct AngleGrid(Vec<f64>);

fn parse_grid(s: &str) -> Result<AngleGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected LO:HI:STEP, got '{s}'"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number '{x}'"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && lo <= hi) {
        return Err(format!("grid must satisfy LO <= HI and STEP > 0, got '{s}'"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err("angle grid too large".into());
    }
    Ok(AngleGrid((0..=n).map(|i| lo + i as f64 * step).collect()))
}

fn is_off(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("off"))
}

/// XYZ clouds as-is; OFF meshes surface-sampled, not normalized.
fn load_cloud(path: &Path, points: usize, seed: u64) -> CliResult<PointCloud> {
    if is_off(path) {
        Ok(sample_surface(&pointnetlk::mesh::load_off(path)?, points, seed)?)
    } else {
        Ok(PointCloud::load_xyz(path)?)
    }
}

fn load_shape(path: Option<&Path>) -> CliResult<ShapeSource> {
    match path {
        Some(p) => Ok(ShapeSource::load(p)?),
        None => Ok(ShapeSource::Mesh(asymmetric_mesh())),
    }
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn print_result(res: &RegistrationResult) -> String {
    let mut s = String::from("estimate:\n");
    for row in res.estimate.to_row_major().chunks(4) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.12}")).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    let status = if res.converged { "converged" } else { "not converged" };
    s.push_str(&format!("iterations: {} ({status})\n", res.iterations_used));
    let norms: Vec<String> = res.per_iteration_twist_norms.iter().map(|x| format!("{x:e}")).collect();
    s.push_str(&format!("twist_norms: {}\n", norms.join(" ")));
    s.push_str(&format!("residual: {:e}\n", res.residual_norm));
    s
}

fn cmd_pair(args: &PairArgs, method: Method) -> CliResult {
    let c = &args.common;
    let template = load_cloud(&args.template, c.points, c.seed)?;
    let source = load_cloud(&args.source, c.points, pointnetlk::rng::derive(c.seed, 1))?;
    let res = match (method, args.partial) {
        (Method::Iclk, false) => register(&c.encoder()?, &template, &source, &c.solver())?,
        (Method::Iclk, true) => register_partial(&c.encoder()?, &template, &source, &c.solver())?,
        (Method::Icp, false) => icp_register(&template, &source, &c.icp())?,
        (Method::Icp, true) => icp_register_partial(&template, &source, &c.icp(), c.visibility)?,
    };
    emit(c.out.as_deref(), &print_result(&res))
}

fn cmd_benchmark(args: &BenchmarkArgs) -> CliResult {
    let c = &args.common;
    if args.bin_width.is_nan() || args.bin_width <= 0.0 {
        return Err("--bin-width must be > 0".into());
    }
    let defaults = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        kind: args.kind,
        inputs: args.inputs.clone(),
        n_points: c.points,
        trials: c.trials,
        seed: c.seed,
        rot_range_deg: c.rot_range.unwrap_or(defaults.rot_range_deg),
        trans_range: c.trans_range.unwrap_or(defaults.trans_range),
        noise_sd: c.noise_sd,
        solver: c.solver(),
        icp: c.icp(),
        weights: c.weights.clone(),
        out: c.out.clone(),
        record_wall_time: args.record_wall_time,
    };
    let shapes = if args.inputs.is_empty() {
        vec![load_shape(None)?]
    } else {
        args.inputs
            .iter()
            .map(|p| load_shape(Some(p)))
            .collect::<CliResult<Vec<_>>>()?
    };
    let encoder = c.encoder()?;
    let records = run_benchmark(&cfg, &shapes, &encoder)?;
    emit(c.out.as_deref(), &records_to_csv(&records))?;

    let mut summary = String::new();
    for m in [Method::Iclk, Method::Icp] {
        let mine: Vec<_> = records.iter().filter(|r| r.method == m).cloned().collect();
        let ratio = success_ratio(&mine).unwrap_or(0.0);
        summary.push_str(&format!("{m}: success {:.3} over {} trials\n", ratio, mine.len()));
        for (lo, r) in success_curve(&mine, args.bin_width) {
            summary.push_str(&format!("  [{lo:>5.1}, {:>5.1}) {r:.3}\n", lo + args.bin_width));
        }
    }
    // Keep stdout pure CSV when it carries the records.
    if c.out.is_some() {
        emit(None, &summary)?;
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn cmd_timing(args: &TimingArgs) -> CliResult {
    let c = &args.common;
    let d = TimingConfig::default();
    let cfg = TimingConfig {
        sizes: args.sizes.clone(),
        iterations: c.max_iters.unwrap_or(d.iterations),
        repetitions: args.reps,
        seed: c.seed,
        rot_range_deg: c.rot_range.unwrap_or(d.rot_range_deg),
        trans_range: c.trans_range.unwrap_or(d.trans_range),
    };
    let shape = load_shape(args.input.as_deref())?;
    let rows = run_timing(&cfg, &shape, &c.encoder()?)?;
    emit(c.out.as_deref(), &timing_to_csv(&rows))
}

fn cmd_sweep(args: &SweepArgs) -> CliResult {
    let c = &args.common;
    let template = load_cloud(&args.template, c.points, c.seed)?;
    let source = load_cloud(&args.source, c.points, pointnetlk::rng::derive(c.seed, 1))?;
    let points = cost_sweep(&c.encoder()?, &template, &source, args.axis, &args.angles.0)?;
    emit(c.out.as_deref(), &sweep_to_csv(&points))
}

fn cmd_make_data(args: &MakeDataArgs) -> CliResult {
    let c = &args.common;
    let out = c.out.as_deref().ok_or("make-data requires --out DIR")?;
    let defaults = ExperimentConfig::default();
    let spec = DataSpec {
        kind: args.kind,
        n_points: c.points,
        rot_range_deg: c.rot_range.unwrap_or(defaults.rot_range_deg),
        trans_range: c.trans_range.unwrap_or(defaults.trans_range),
        noise_sd: c.noise_sd,
        visibility: c.visibility,
        mesh: args.mesh.as_ref().map(|p| p.display().to_string()),
    };
    let shape = load_shape(args.mesh.as_deref())?;
    let manifest = make_data(&shape, &spec, c.seed, out)?;
    let listing: String = manifest
        .files
        .iter()
        .map(|f| format!("{}\n", out.join(f).display()))
        .collect();
    emit(None, &listing)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Register(a) => cmd_pair(a, Method::Iclk),
        Command::Icp(a) => cmd_pair(a, Method::Icp),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Timing(a) => cmd_timing(a),
        Command::CostSweep(a) => cmd_sweep(a),
        Command::MakeData(a) => cmd_make_data(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pointnetlk: error: {e}");
            ExitCode::FAILURE
        }
    }
}
