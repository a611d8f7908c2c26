//! Experiment drivers behind the CLI: paired IC-LK/ICP benchmarks, timing
//! scans, cost sweeps and replayable data manufacture.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::encoder::{Encoder, EncoderWeights, MlpEncoder, MomentEncoder, Pooling};
use crate::error::{Error, Result};
use crate::harness::{
    add_gaussian_noise, normalize_unit_box, random_transform, visible_subset, PerturbationSpec, VisibilityMode,
};
use crate::icp::{icp_register, icp_register_partial, nearest_neighbors, IcpConfig};
use crate::mesh::{load_off, sample_surface, TriangleMesh};
use crate::metrics::{frobenius_loss, median, Method, TrialRecord};
use crate::rng;
use crate::se3::{axis_rotation, inverse, pose_error, Axis, RigidTransform};
use crate::solver::{register, register_partial, uncenter, RegistrationResult, SolverConfig};
use crate::weights::load_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clean,
    Noise,
    Partial,
    Timing,
    CostSweep,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(ExperimentKind::Clean),
            "noise" => Ok(ExperimentKind::Noise),
            "partial" => Ok(ExperimentKind::Partial),
            "timing" => Ok(ExperimentKind::Timing),
            "cost-sweep" => Ok(ExperimentKind::CostSweep),
            other => Err(Error::InvalidArgument(format!("unknown experiment kind '{other}'"))),
        }
    }
}

/// Where a trial's template comes from.
#[derive(Debug, Clone)]
pub enum ShapeSource {
    /// Surface-sampled with `n_points` per trial.
    Mesh(TriangleMesh),
    /// Used as-is (after normalization).
    Cloud(PointCloud),
}

impl ShapeSource {
    /// `.off` files are meshes; anything else is read as XYZ.
    pub fn load(path: &Path) -> Result<Self> {
        let is_off = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("off"));
        if is_off {
            Ok(ShapeSource::Mesh(load_off(path)?))
        } else {
            Ok(ShapeSource::Cloud(PointCloud::load_xyz(path)?))
        }
    }

    /// A normalized template for one trial.
    pub fn template(&self, n_points: usize, seed: u64) -> Result<PointCloud> {
        match self {
            ShapeSource::Mesh(m) => normalize_unit_box(&sample_surface(m, n_points, seed)?),
            ShapeSource::Cloud(c) => normalize_unit_box(c),
        }
    }
}

/// Moment encoder when no weights are given; otherwise the MLP, with an
/// optional pooling override.
pub fn load_encoder(weights: Option<&Path>, pooling: Option<Pooling>) -> Result<Box<dyn Encoder>> {
    match weights {
        None => Ok(Box::new(MomentEncoder)),
        Some(p) => {
            let mut w: EncoderWeights = load_weights(p)?;
            if let Some(pool) = pooling {
                w.pooling = pool;
            }
            Ok(Box::new(MlpEncoder::new(w)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub inputs: Vec<PathBuf>,
    pub n_points: usize,
    pub trials: usize,
    pub seed: u64,
    pub rot_range_deg: (f64, f64),
    pub trans_range: (f64, f64),
    pub noise_sd: f64,
    pub solver: SolverConfig,
    pub icp: IcpConfig,
    pub weights: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Record real wall-clock times; off keeps the CSV a pure function of the seed.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Clean,
            inputs: Vec::new(),
            n_points: 1000,
            trials: 100,
            seed: 0,
            rot_range_deg: (0.0, 90.0),
            trans_range: (0.0, 0.3),
            noise_sd: 0.0,
            solver: SolverConfig::default(),
            icp: IcpConfig::default(),
            weights: None,
            out: None,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.n_points < 1 {
            return Err(Error::InvalidArgument("n_points must be >= 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument("noise sd must be finite and >= 0".into()));
        }
        PerturbationSpec::new(self.rot_range_deg, self.trans_range, 0)?;
        self.solver.validate()?;
        self.icp.validate()
    }

    fn perturbation(&self, seed: u64) -> PerturbationSpec {
        PerturbationSpec {
            rot_range_deg: self.rot_range_deg,
            trans_range: self.trans_range,
            rng_seed: seed,
        }
    }
}

/// A generated trial: `gt · source = template` before noise.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub seed: u64,
    pub template: PointCloud,
    pub source: PointCloud,
    pub gt: RigidTransform,
}

/// Sub-stream indices under a trial seed.
const STREAM_SAMPLE: u64 = 0;
const STREAM_PERTURB: u64 = 1;
const STREAM_NOISE: u64 = 2;

pub fn make_trial(cfg: &ExperimentConfig, shape: &ShapeSource, trial_seed: u64) -> Result<TrialData> {
    let template = shape.template(cfg.n_points, rng::derive(trial_seed, STREAM_SAMPLE))?;
    let perturbation = random_transform(&cfg.perturbation(rng::derive(trial_seed, STREAM_PERTURB)));
    let mut source = template.transformed(&perturbation);
    if cfg.kind == ExperimentKind::Noise {
        source = add_gaussian_noise(&source, cfg.noise_sd, rng::derive(trial_seed, STREAM_NOISE))?;
    }
    Ok(TrialData {
        seed: trial_seed,
        template,
        source,
        gt: inverse(&perturbation),
    })
}

fn run_method(
    cfg: &ExperimentConfig,
    encoder: &dyn Encoder,
    method: Method,
    data: &TrialData,
) -> Result<RegistrationResult> {
    let partial = cfg.kind == ExperimentKind::Partial;
    match (method, partial) {
        (Method::Iclk, false) => register(encoder, &data.template, &data.source, &cfg.solver),
        (Method::Iclk, true) => register_partial(encoder, &data.template, &data.source, &cfg.solver),
        (Method::Icp, false) => icp_register(&data.template, &data.source, &cfg.icp),
        (Method::Icp, true) => icp_register_partial(&data.template, &data.source, &cfg.icp, cfg.solver.visibility),
    }
}

fn record_for(
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
    gt: RigidTransform,
    outcome: Result<RegistrationResult>,
    wall_time: f64,
) -> TrialRecord {
    let (init_rot, init_trans) = pose_error(&RigidTransform::identity(), &gt);
    let wall_time = if cfg.record_wall_time { wall_time } else { 0.0 };
    match outcome {
        Ok(res) => {
            let (rot_err, trans_err) = pose_error(&res.estimate, &gt);
            TrialRecord {
                method,
                n_points: cfg.n_points,
                seed,
                gt,
                est: res.estimate,
                initial_rot_deg: init_rot,
                initial_trans: init_trans,
                rot_err_deg: rot_err,
                trans_err,
                iterations: res.iterations_used,
                converged: res.converged,
                wall_time,
                loss: frobenius_loss(&res.estimate, &gt),
            }
        }
        Err(_) => TrialRecord {
            method,
            n_points: cfg.n_points,
            seed,
            gt,
            est: RigidTransform::identity(),
            initial_rot_deg: init_rot,
            initial_trans: init_trans,
            rot_err_deg: f64::NAN,
            trans_err: f64::NAN,
            iterations: 0,
            converged: false,
            wall_time,
            loss: f64::NAN,
        },
    }
}

fn run_trial(cfg: &ExperimentConfig, shapes: &[ShapeSource], encoder: &dyn Encoder, index: usize) -> Vec<TrialRecord> {
    let trial_seed = rng::derive(cfg.seed, index as u64);
    let shape = &shapes[index % shapes.len()];
    let methods = [Method::Iclk, Method::Icp];
    match make_trial(cfg, shape, trial_seed) {
        Ok(data) => methods
            .iter()
            .map(|&m| {
                let start = Instant::now();
                let outcome = run_method(cfg, encoder, m, &data);
                let elapsed = start.elapsed().as_secs_f64();
                record_for(cfg, m, trial_seed, data.gt, outcome, elapsed)
            })
            .collect(),
        Err(e) => {
            let gt = inverse(&random_transform(
                &cfg.perturbation(rng::derive(trial_seed, STREAM_PERTURB)),
            ));
            methods
                .iter()
                .map(|&m| record_for(cfg, m, trial_seed, gt, Err(Error::InvalidArgument(e.to_string())), 0.0))
                .collect()
        }
    }
}

/// Runs `cfg.trials` paired trials (IC-LK then ICP on identical inputs).
/// Trials run in parallel; records come back in trial order.
pub fn run_benchmark(
    cfg: &ExperimentConfig,
    shapes: &[ShapeSource],
    encoder: &dyn Encoder,
) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    if !matches!(
        cfg.kind,
        ExperimentKind::Clean | ExperimentKind::Noise | ExperimentKind::Partial
    ) {
        return Err(Error::InvalidArgument(format!(
            "benchmark runs clean, noise or partial experiments, not {:?}",
            cfg.kind
        )));
    }
    if shapes.is_empty() {
        return Err(Error::InvalidArgument("no input shapes".into()));
    }
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, shapes, encoder, i))
        .collect();
    Ok(per_trial.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    /// Ascending point counts.
    pub sizes: Vec<usize>,
    pub iterations: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub rot_range_deg: (f64, f64),
    pub trans_range: (f64, f64),
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            sizes: vec![256, 512, 1024, 2048, 4096, 8192],
            iterations: 10,
            repetitions: 5,
            seed: 0,
            rot_range_deg: (0.0, 45.0),
            trans_range: (0.0, 0.3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: Method,
    pub n_points: usize,
    pub median_seconds: f64,
}

pub const TIMING_CSV_HEADER: &str = "method,n_points,median_seconds";

pub fn timing_to_csv(rows: &[TimingRow]) -> String {
    let mut s = format!("{TIMING_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.method, r.n_points, r.median_seconds));
    }
    s
}

/// Median wall time of a fixed number of iterations per method and cloud size.
/// Early stopping is disabled so per-iteration cost dominates; one warm-up
/// run per method and size is discarded.
pub fn run_timing(cfg: &TimingConfig, shape: &ShapeSource, encoder: &dyn Encoder) -> Result<Vec<TimingRow>> {
    if cfg.sizes.is_empty() || cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "timing sizes must be nonempty and ascending".into(),
        ));
    }
    if cfg.iterations < 1 || cfg.repetitions < 1 {
        return Err(Error::InvalidArgument("iterations and repetitions must be >= 1".into()));
    }
    let solver = SolverConfig {
        max_iters: cfg.iterations,
        stop_threshold: 0.0,
        ..SolverConfig::default()
    };
    let icp = IcpConfig {
        max_iters: cfg.iterations,
        stop_mse_delta: 0.0,
        ..IcpConfig::default()
    };
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let exp = ExperimentConfig {
            n_points: n,
            rot_range_deg: cfg.rot_range_deg,
            trans_range: cfg.trans_range,
            ..ExperimentConfig::default()
        };
        let data = make_trial(&exp, shape, rng::derive(cfg.seed, n as u64))?;
        for method in [Method::Iclk, Method::Icp] {
            let run = || -> Result<f64> {
                let start = Instant::now();
                match method {
                    Method::Iclk => register(encoder, &data.template, &data.source, &solver)?,
                    Method::Icp => icp_register(&data.template, &data.source, &icp)?,
                };
                Ok(start.elapsed().as_secs_f64())
            };
            run()?;
            let mut times = (0..cfg.repetitions).map(|_| run()).collect::<Result<Vec<_>>>()?;
            rows.push(TimingRow {
                method,
                n_points: n,
                median_seconds: median(&mut times),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub angle_deg: f64,
    pub iclk_cost: f64,
    pub icp_cost: f64,
}

pub const SWEEP_CSV_HEADER: &str = "angle_deg,iclk_cost,icp_cost";

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.angle_deg, p.iclk_cost, p.icp_cost));
    }
    s
}

/// Rotates `source` about `axis` through its centroid and evaluates, without
/// optimizing, the feature distance `‖φ(G·P_S) − φ(P_T)‖` and the mean
/// nearest-neighbour distance after centroid alignment.
pub fn cost_sweep(
    encoder: &dyn Encoder,
    template: &PointCloud,
    source: &PointCloud,
    axis: Axis,
    angles_deg: &[f64],
) -> Result<Vec<SweepPoint>> {
    let f_tmpl = encoder.encode(template)?;
    let c_src = source.centroid();
    let c_tmpl = template.centroid();
    angles_deg
        .iter()
        .map(|&angle| {
            let g = uncenter(&axis_rotation(axis, angle.to_radians()), &c_src, &c_src);
            let moved = source.transformed(&g);
            let iclk_cost = (encoder.encode(&moved)? - &f_tmpl).norm();
            let aligned = moved.translated(&(c_tmpl - moved.centroid()));
            let icp_cost = nearest_neighbors(&aligned, template).mean_distance();
            Ok(SweepPoint {
                angle_deg: angle,
                iclk_cost,
                icp_cost,
            })
        })
        .collect()
}

/// Parameters echoed into a data manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub kind: ExperimentKind,
    pub n_points: usize,
    pub rot_range_deg: (f64, f64),
    pub trans_range: (f64, f64),
    pub noise_sd: f64,
    pub visibility: VisibilityMode,
    pub mesh: Option<String>,
}

/// `manifest.json` written next to the generated clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    /// Row-major transform taking `source.xyz` onto `template.xyz`.
    pub g_gt: Vec<f64>,
    pub spec: DataSpec,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn gt(&self) -> Result<RigidTransform> {
        RigidTransform::from_row_major(&self.g_gt)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }
}

/// Writes `template.xyz`, `source.xyz` (plus the visible subsets for the
/// partial kind) and `manifest.json` into `out_dir`.
pub fn make_data(shape: &ShapeSource, spec: &DataSpec, seed: u64, out_dir: &Path) -> Result<Manifest> {
    if !matches!(
        spec.kind,
        ExperimentKind::Clean | ExperimentKind::Noise | ExperimentKind::Partial
    ) {
        return Err(Error::InvalidArgument(format!("cannot make data for {:?}", spec.kind)));
    }
    let cfg = ExperimentConfig {
        kind: spec.kind,
        n_points: spec.n_points,
        trials: 1,
        seed,
        rot_range_deg: spec.rot_range_deg,
        trans_range: spec.trans_range,
        noise_sd: spec.noise_sd,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let data = make_trial(&cfg, shape, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut files = vec!["template.xyz".to_string(), "source.xyz".to_string()];
    data.template.save_xyz(out_dir.join("template.xyz"))?;
    data.source.save_xyz(out_dir.join("source.xyz"))?;
    if spec.kind == ExperimentKind::Partial {
        visible_subset(&data.template, spec.visibility)?.save_xyz(out_dir.join("template_visible.xyz"))?;
        visible_subset(&data.source, spec.visibility)?.save_xyz(out_dir.join("source_visible.xyz"))?;
        files.push("template_visible.xyz".into());
        files.push("source_visible.xyz".into());
    }
    files.push("manifest.json".into());

    let manifest = Manifest {
        seed,
        g_gt: data.gt.to_row_major().to_vec(),
        spec: spec.clone(),
        files,
    };
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{records_to_csv, success_ratio};
    use crate::shapes::{asymmetric_mesh, symmetric_mesh};

    fn shapes() -> Vec<ShapeSource> {
        vec![ShapeSource::Mesh(asymmetric_mesh())]
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(run_benchmark(&cfg, &shapes(), &MomentEncoder).is_err());
    }

    #[test]
    fn benchmark_is_deterministic() {
        let cfg = ExperimentConfig {
            trials: 6,
            n_points: 200,
            seed: 99,
            ..ExperimentConfig::default()
        };
        let a = records_to_csv(&run_benchmark(&cfg, &shapes(), &MomentEncoder).unwrap());
        let b = records_to_csv(&run_benchmark(&cfg, &shapes(), &MomentEncoder).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 12);
    }

    #[test]
    fn zero_perturbation_always_succeeds() {
        let cfg = ExperimentConfig {
            trials: 8,
            n_points: 300,
            rot_range_deg: (0.0, 0.0),
            trans_range: (0.0, 0.0),
            ..ExperimentConfig::default()
        };
        let recs = run_benchmark(&cfg, &shapes(), &MomentEncoder).unwrap();
        for m in [Method::Iclk, Method::Icp] {
            assert_eq!(success_ratio(recs.iter().filter(|r| r.method == m)), Some(1.0));
        }
    }

    #[test]
    fn both_methods_see_identical_inputs() {
        let cfg = ExperimentConfig {
            trials: 3,
            n_points: 100,
            ..ExperimentConfig::default()
        };
        let recs = run_benchmark(&cfg, &shapes(), &MomentEncoder).unwrap();
        for pair in recs.chunks(2) {
            assert_eq!(pair[0].method, Method::Iclk);
            assert_eq!(pair[1].method, Method::Icp);
            assert_eq!(pair[0].gt, pair[1].gt);
            assert_eq!(pair[0].seed, pair[1].seed);
        }
    }

    #[test]
    fn failing_trials_become_rows() {
        let flat = ShapeSource::Cloud(PointCloud::new(vec![crate::cloud::Point::zeros(); 3]).unwrap());
        let cfg = ExperimentConfig {
            trials: 2,
            ..ExperimentConfig::default()
        };
        let recs = run_benchmark(&cfg, &[flat], &MomentEncoder).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.rot_err_deg.is_nan() && !r.converged));
    }

    #[test]
    fn sweep_of_identical_clouds() {
        let c = ShapeSource::Mesh(asymmetric_mesh()).template(400, 1).unwrap();
        let angles: Vec<f64> = (0..=72).map(|i| i as f64 * 5.0).collect();
        let pts = cost_sweep(&MomentEncoder, &c, &c, Axis::Z, &angles).unwrap();
        assert_eq!(pts[0].iclk_cost, 0.0);
        assert_eq!(pts[0].icp_cost, 0.0);
        let last = pts.last().unwrap();
        assert!((last.iclk_cost - pts[0].iclk_cost).abs() < 1e-9);
        assert!((last.icp_cost - pts[0].icp_cost).abs() < 1e-9);
    }

    #[test]
    fn sweep_of_mirror_symmetric_cloud_is_symmetric() {
        // Box symmetric in x and y, sampled then mirrored so the point set
        // itself is exactly symmetric under y -> -y.
        let raw = sample_surface(&symmetric_mesh(), 300, 4).unwrap();
        let mut pts = raw.points().to_vec();
        pts.extend(raw.iter().map(|p| crate::cloud::Point::new(p.x, -p.y, p.z)));
        let c = PointCloud::new(pts).unwrap();
        let angles: Vec<f64> = (-12..=12).map(|i| i as f64 * 7.5).collect();
        let pts = cost_sweep(&MomentEncoder, &c, &c, Axis::Z, &angles).unwrap();
        for i in 0..pts.len() {
            let j = pts.len() - 1 - i;
            assert!((pts[i].iclk_cost - pts[j].iclk_cost).abs() < 1e-9);
            assert!((pts[i].icp_cost - pts[j].icp_cost).abs() < 1e-9);
        }
    }

    #[test]
    fn timing_rejects_bad_sizes() {
        let cfg = TimingConfig {
            sizes: vec![512, 256],
            ..TimingConfig::default()
        };
        assert!(run_timing(&cfg, &shapes()[0], &MomentEncoder).is_err());
    }

    #[test]
    fn timing_single_size_gives_one_row_per_method() {
        let cfg = TimingConfig {
            sizes: vec![128],
            repetitions: 1,
            iterations: 2,
            ..TimingConfig::default()
        };
        let rows = run_timing(&cfg, &shapes()[0], &MomentEncoder).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.median_seconds >= 0.0 && r.n_points == 128));
    }

    #[test]
    fn make_data_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DataSpec {
            kind: ExperimentKind::Partial,
            n_points: 300,
            rot_range_deg: (0.0, 30.0),
            trans_range: (0.0, 0.2),
            noise_sd: 0.0,
            visibility: VisibilityMode::Depth,
            mesh: None,
        };
        let m = make_data(&shapes()[0], &spec, 17, dir.path()).unwrap();
        let loaded = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(loaded, m);
        let exp = ExperimentConfig {
            kind: spec.kind,
            n_points: spec.n_points,
            rot_range_deg: spec.rot_range_deg,
            trans_range: spec.trans_range,
            ..ExperimentConfig::default()
        };
        let regenerated = make_trial(&exp, &shapes()[0], 17).unwrap();
        assert_eq!(pose_error(&loaded.gt().unwrap(), &regenerated.gt), (0.0, 0.0));
        for f in ["template_visible.xyz", "source_visible.xyz"] {
            assert!(dir.path().join(f).exists());
        }

        let dir2 = tempfile::tempdir().unwrap();
        make_data(&shapes()[0], &spec, 17, dir2.path()).unwrap();
        for f in &m.files {
            assert_eq!(
                std::fs::read(dir.path().join(f)).unwrap(),
                std::fs::read(dir2.path().join(f)).unwrap(),
                "{f} differs"
            );
        }
    }
}
