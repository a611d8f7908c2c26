//! Manufacturing of (template, source, ground truth) triples: normalization,
//! random rigid perturbations, Gaussian noise and the 2.5D visibility sensor.

use nalgebra::Vector3;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::encoder::VisibilityMask;
use crate::error::{Error, Result};
use crate::rng;
use crate::se3::{exp_map, RigidTransform, Twist};

/// Distance the clouds are pushed along the viewing direction before the
/// visibility test.
pub const SENSOR_OFFSET: f64 = 2.0;

/// Ranges for random rigid perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Rotation angle range in degrees.
    pub rot_range_deg: (f64, f64),
    /// Translation magnitude range in scene units.
    pub trans_range: (f64, f64),
    pub rng_seed: u64,
}

impl PerturbationSpec {
    pub fn new(rot_range_deg: (f64, f64), trans_range: (f64, f64), rng_seed: u64) -> Result<Self> {
        let spec = PerturbationSpec {
            rot_range_deg,
            trans_range,
            rng_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        if !ok(self.rot_range_deg) || self.rot_range_deg.1 > 180.0 {
            return Err(Error::InvalidArgument(format!(
                "rotation range {:?} must satisfy 0 <= lo <= hi <= 180",
                self.rot_range_deg
            )));
        }
        if !ok(self.trans_range) {
            return Err(Error::InvalidArgument(format!(
                "translation range {:?} must satisfy 0 <= lo <= hi",
                self.trans_range
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        PerturbationSpec { rng_seed, ..self }
    }
}

/// How visible points are selected from a cloud.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibilityMode {
    /// Depth along the `[1,1,1]` viewing direction strictly below the mean depth.
    #[default]
    Depth,
    /// Every coordinate strictly below the corresponding mean coordinate.
    Componentwise,
}

impl std::str::FromStr for VisibilityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depth" => Ok(VisibilityMode::Depth),
            "componentwise" => Ok(VisibilityMode::Componentwise),
            other => Err(Error::InvalidArgument(format!("unknown visibility mode '{other}'"))),
        }
    }
}

fn uniform_in(rng: &mut rng::Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

fn unit_sphere(rng: &mut rng::Rng) -> Vector3<f64> {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Uniform scale and shift into `[0,1]³` with the longest axis spanning `[0,1]`.
pub fn normalize_unit_box(cloud: &PointCloud) -> Result<PointCloud> {
    let mut lo = Point::repeat(f64::INFINITY);
    let mut hi = Point::repeat(f64::NEG_INFINITY);
    for p in cloud {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = (hi - lo).max();
    if !(extent > 0.0) {
        return Err(Error::DegenerateCloud);
    }
    let scale = 1.0 / extent;
    let pts = cloud
        .iter()
        .map(|p| ((p - lo) * scale).map(|x| x.clamp(0.0, 1.0)))
        .collect();
    PointCloud::new(pts)
}

/// Random rigid transform: axis uniform on the sphere, angle uniform in the
/// range; translation direction uniform on the sphere, magnitude uniform in
/// the range.
pub fn random_transform(spec: &PerturbationSpec) -> RigidTransform {
    let mut rng = rng::seeded(spec.rng_seed);
    let axis = unit_sphere(&mut rng);
    let angle = uniform_in(&mut rng, spec.rot_range_deg).to_radians();
    let dir = unit_sphere(&mut rng);
    let mag = uniform_in(&mut rng, spec.trans_range);
    let rotation = exp_map(&Twist::from_parts(axis * angle, Vector3::zeros())).rotation();
    RigidTransform::from_parts(rotation, dir * mag)
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sd` to every coordinate.
pub fn add_gaussian_noise(cloud: &PointCloud, sd: f64, seed: u64) -> Result<PointCloud> {
    if !(sd >= 0.0) || !sd.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise sd must be finite and >= 0, got {sd}"
        )));
    }
    if sd == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::seeded(seed);
    let pts = cloud
        .iter()
        .map(|p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            p + Vector3::new(dx, dy, dz)
        })
        .collect();
    PointCloud::new(pts)
}

/// Viewing direction of the simulated sensor.
pub fn view_direction() -> Vector3<f64> {
    Vector3::repeat(1.0 / 3f64.sqrt())
}

/// Per-point visibility of the simulated 2.5D sensor.
pub fn visibility_mask(cloud: &PointCloud, mode: VisibilityMode) -> Result<VisibilityMask> {
    if cloud.len() < 2 {
        return Err(Error::InvalidArgument("visibility needs at least two points".into()));
    }
    let u = view_direction();
    let offset = u * SENSOR_OFFSET;
    let shifted: Vec<Point> = cloud.iter().map(|p| p + offset).collect();
    let n = shifted.len() as f64;
    let keep: Vec<bool> = match mode {
        VisibilityMode::Depth => {
            let depths: Vec<f64> = shifted.iter().map(|p| p.dot(&u)).collect();
            let mean = depths.iter().sum::<f64>() / n;
            depths.iter().map(|&d| d < mean).collect()
        }
        VisibilityMode::Componentwise => {
            let mean = shifted.iter().fold(Point::zeros(), |a, p| a + p) / n;
            shifted
                .iter()
                .map(|p| p.x < mean.x && p.y < mean.y && p.z < mean.z)
                .collect()
        }
    };
    if !keep.iter().any(|&k| k) {
        return Err(Error::EmptyVisibleSet);
    }
    Ok(VisibilityMask::new(keep))
}

/// Points the simulated sensor sees, in the original (untranslated) frame.
pub fn visible_subset(cloud: &PointCloud, mode: VisibilityMode) -> Result<PointCloud> {
    let mask = visibility_mask(cloud, mode)?;
    let pts = cloud
        .iter()
        .zip(mask.keep())
        .filter(|(_, &k)| k)
        .map(|(p, _)| *p)
        .collect();
    PointCloud::new(pts)
}

/// Centers a cloud at the origin; returns the centered cloud and the removed centroid.
pub fn subtract_mean(cloud: &PointCloud) -> (PointCloud, Point) {
    let c = cloud.centroid();
    (cloud.translated(&-c), c)
}
