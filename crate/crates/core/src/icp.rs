//! Point-to-point ICP baseline with brute-force correspondences.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::harness::{visible_subset, VisibilityMode};
use crate::se3::{compose, RigidTransform};
use crate::solver::{partial_loop, PartialStep, RegistrationResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    pub max_iters: usize,
    /// Stop once an iteration lowers the correspondence MSE by less than
    /// this; 0 disables early stopping.
    pub stop_mse_delta: f64,
    /// Always true: correspondences are exhaustive, no spatial index.
    pub use_brute_force: bool,
    /// Twist threshold that ends the partial-visibility outer loop.
    pub partial_stop_threshold: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig {
            max_iters: 10,
            stop_mse_delta: 1e-9,
            use_brute_force: true,
            partial_stop_threshold: 1e-7,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.stop_mse_delta >= 0.0) {
            return Err(Error::InvalidArgument("stop_mse_delta must be >= 0".into()));
        }
        if !self.use_brute_force {
            return Err(Error::InvalidArgument(
                "only brute-force correspondences are supported".into(),
            ));
        }
        Ok(())
    }
}

/// For each source point: nearest template index and squared distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondences {
    pub pairs: Vec<(usize, f64)>,
}

impl Correspondences {
    pub fn mse(&self) -> f64 {
        self.pairs.iter().map(|&(_, d)| d).sum::<f64>() / self.pairs.len() as f64
    }

    pub fn mean_distance(&self) -> f64 {
        self.pairs.iter().map(|&(_, d)| d.sqrt()).sum::<f64>() / self.pairs.len() as f64
    }
}

/// Exhaustive O(N·M) nearest neighbours; ties go to the lowest index.
pub fn nearest_neighbors(source: &PointCloud, template: &PointCloud) -> Correspondences {
    let tmpl = template.points();
    let pairs = source
        .iter()
        .map(|s| {
            let mut best = (0, f64::INFINITY);
            for (j, t) in tmpl.iter().enumerate() {
                let d = (s - t).norm_squared();
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect();
    Correspondences { pairs }
}

/// Least-squares rigid transform taking `source[i]` onto `target[i]`
/// (SVD of the cross-covariance, reflection-corrected).
pub fn best_rigid_fit(source: &PointCloud, target: &PointCloud) -> Result<RigidTransform> {
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} source points vs {} targets",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 3 {
        return Err(Error::DegenerateConfiguration("need at least 3 correspondences".into()));
    }
    let cs = source.centroid();
    let ct = target.centroid();
    let h = source
        .iter()
        .zip(target)
        .fold(Matrix3::zeros(), |acc, (s, t)| acc + (s - cs) * (t - ct).transpose());

    let svd = h.svd(true, true);
    let sv = svd.singular_values;
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if !(sorted[0] > 0.0) || sorted[1] <= 1e-12 * sorted[0] {
        return Err(Error::DegenerateConfiguration(
            "points are collinear or coincident".into(),
        ));
    }
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    // Flip the direction of the smallest singular value.
    let smallest = (0..3).min_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap()).unwrap();
    let mut flip = Vector3::repeat(1.0);
    flip[smallest] = d;
    let r = v * Matrix3::from_diagonal(&flip) * u.transpose();
    Ok(RigidTransform::from_parts(r, ct - r * cs))
}

/// Matched template points for a set of correspondences.
fn matched(template: &PointCloud, corr: &Correspondences) -> PointCloud {
    let idx: Vec<usize> = corr.pairs.iter().map(|&(j, _)| j).collect();
    template.select(&idx).expect("correspondence indices are valid")
}

/// One ICP step: correspondences, best fit. Returns the update, the MSE
/// before it and the fit residual after it.
fn icp_step(current: &PointCloud, template: &PointCloud) -> Result<(RigidTransform, f64, f64)> {
    let corr = nearest_neighbors(current, template);
    let targets = matched(template, &corr);
    let dg = best_rigid_fit(current, &targets)?;
    let after = current
        .iter()
        .zip(&targets)
        .map(|(s, t)| (dg.apply(s) - t).norm_squared())
        .sum::<f64>()
        / current.len() as f64;
    Ok((dg, corr.mse(), after))
}

/// Classic ICP. `residual_history` holds the correspondence MSE measured at
/// the start of each iteration plus the value after the last update.
pub fn icp_register(template: &PointCloud, source: &PointCloud, cfg: &IcpConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    let mut current = source.clone();
    let mut g = RigidTransform::identity();
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let mut twist_norms = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let (dg, before, after) = icp_step(&current, template)?;
        history.push(before);
        g = compose(&dg, &g);
        current = current.transformed(&dg);
        twist_norms.push(crate::se3::log_map(&dg).map_or(f64::INFINITY, |xi| xi.norm()));
        if cfg.stop_mse_delta > 0.0 && before - after < cfg.stop_mse_delta {
            converged = true;
            break;
        }
    }
    history.push(nearest_neighbors(&current, template).mse());

    Ok(RegistrationResult {
        estimate: g,
        iterations_used: iterations,
        converged,
        residual_norm: *history.last().unwrap(),
        per_iteration_twist_norms: twist_norms,
        residual_history: history,
    })
}

struct IcpPartialStep {
    template_visible: PointCloud,
}

impl PartialStep for IcpPartialStep {
    fn step(&mut self, source_visible: &PointCloud) -> Result<(RigidTransform, f64)> {
        let (dg, before, _) = icp_step(source_visible, &self.template_visible)?;
        Ok((dg, before))
    }

    fn residual(&mut self, source_visible: &PointCloud) -> Result<f64> {
        Ok(nearest_neighbors(source_visible, &self.template_visible).mse())
    }
}

/// ICP inside the same visibility re-sampling loop as
/// [`crate::solver::register_partial`], one ICP iteration per outer step.
pub fn icp_register_partial(
    template: &PointCloud,
    source: &PointCloud,
    cfg: &IcpConfig,
    visibility: VisibilityMode,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    let mut inner = IcpPartialStep {
        template_visible: visible_subset(template, visibility)?,
    };
    partial_loop(
        source,
        visibility,
        cfg.max_iters,
        cfg.partial_stop_threshold,
        &mut inner,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Point;
    use crate::se3::{exp_map, inverse, pose_error, Twist};
    use crate::shapes::asymmetric_cloud;
    use rand::Rng as _;

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = crate::rng::seeded(seed);
        PointCloud::new(
            (0..n)
                .map(|_| Point::new(rng.random(), rng.random(), rng.random()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn self_correspondence() {
        let c = random_cloud(50, 1);
        let corr = nearest_neighbors(&c, &c);
        for (i, &(j, d)) in corr.pairs.iter().enumerate() {
            assert_eq!((i, d), (j, 0.0));
        }
    }

    #[test]
    fn picks_closest_and_lowest_index_on_ties() {
        let src = PointCloud::new(vec![Point::zeros()]).unwrap();
        let tmpl = PointCloud::new(vec![
            Point::new(2.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 3.0),
        ])
        .unwrap();
        assert_eq!(nearest_neighbors(&src, &tmpl).pairs, vec![(1, 1.0)]);
        let tie = PointCloud::new(vec![Point::new(1.0, 0.0, 0.0), Point::new(-1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(nearest_neighbors(&src, &tie).pairs[0].0, 0);
    }

    #[test]
    fn nearest_neighbors_match_exhaustive_oracle() {
        let a = random_cloud(50, 2);
        let b = random_cloud(50, 3);
        let corr = nearest_neighbors(&a, &b);
        for (s, &(j, d)) in a.iter().zip(&corr.pairs) {
            let dists: Vec<f64> = b.iter().map(|t| (s - t).norm_squared()).collect();
            let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(d, min);
            assert_eq!(j, dists.iter().position(|&x| x == min).unwrap());
        }
    }

    #[test]
    fn fit_identity_and_known_transform() {
        let c = random_cloud(40, 4);
        let id = best_rigid_fit(&c, &c).unwrap();
        assert!((id.matrix() - nalgebra::Matrix4::identity()).amax() < 1e-12);
        let g = exp_map(&Twist::new(0.4, -1.1, 0.7, 0.3, 2.0, -1.0));
        let fit = best_rigid_fit(&c, &c.transformed(&g)).unwrap();
        assert!((fit.matrix() - g.matrix()).amax() < 1e-10);
    }

    #[test]
    fn reflection_yields_proper_rotation() {
        let c = random_cloud(30, 5);
        let mirrored = PointCloud::new(c.iter().map(|p| Point::new(-p.x, p.y, p.z)).collect()).unwrap();
        let fit = best_rigid_fit(&c, &mirrored).unwrap();
        assert!((fit.rotation().determinant() - 1.0).abs() < 1e-12);
        let residual: f64 = c
            .iter()
            .zip(&mirrored)
            .map(|(s, t)| (fit.apply(s) - t).norm_squared())
            .sum();
        assert!(residual > 0.0);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let line = PointCloud::new((0..5).map(|i| Point::new(i as f64, 0.0, 0.0)).collect()).unwrap();
        assert!(matches!(
            best_rigid_fit(&line, &line),
            Err(Error::DegenerateConfiguration(_))
        ));
        let same = PointCloud::new(vec![Point::zeros(); 4]).unwrap();
        assert!(best_rigid_fit(&same, &same).is_err());
        let two = PointCloud::new(vec![Point::zeros(), Point::x()]).unwrap();
        assert!(best_rigid_fit(&two, &two).is_err());
        assert!(best_rigid_fit(&random_cloud(4, 1), &random_cloud(5, 1)).is_err());
    }

    #[test]
    fn zero_perturbation_single_iteration() {
        let c = asymmetric_cloud(300, 6);
        let res = icp_register(&c, &c, &IcpConfig::default()).unwrap();
        assert!((res.estimate.matrix() - nalgebra::Matrix4::identity()).amax() < 1e-12);
        assert_eq!(res.iterations_used, 1);
        assert!(res.converged);
    }

    #[test]
    fn converges_locally_and_mse_never_increases() {
        let c = asymmetric_cloud(500, 7);
        let gt = compose(
            &RigidTransform::from_translation(Vector3::new(0.05, 0.0, 0.0)),
            &RigidTransform::from_axis_angle(&Vector3::new(0.2, 0.5, 1.0), 10f64.to_radians()),
        );
        let cfg = IcpConfig {
            max_iters: 20,
            ..IcpConfig::default()
        };
        let res = icp_register(&c, &c.transformed(&inverse(&gt)), &cfg).unwrap();
        let (r, t) = pose_error(&res.estimate, &gt);
        assert!(r < 0.5 && t < 5e-3, "error ({r}, {t})");
        for w in res.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{:?}", res.residual_history);
        }
    }

    #[test]
    fn half_turn_of_elongated_cloud_falls_into_local_minimum() {
        let c = asymmetric_cloud(500, 8);
        let gt = uncentered_spin(&c, 180f64.to_radians());
        let cfg = IcpConfig {
            max_iters: 50,
            ..IcpConfig::default()
        };
        let res = icp_register(&c, &c.transformed(&inverse(&gt)), &cfg).unwrap();
        let (r, _) = pose_error(&res.estimate, &gt);
        assert!(r > 5.0, "unexpectedly recovered a half turn ({r} deg)");
    }

    fn uncentered_spin(c: &PointCloud, angle: f64) -> RigidTransform {
        let centroid = c.centroid();
        crate::solver::uncenter(
            &RigidTransform::from_axis_angle(&Vector3::z(), angle),
            &centroid,
            &centroid,
        )
    }

    #[test]
    fn partial_icp_zero_perturbation() {
        let c = asymmetric_cloud(400, 9);
        let res = icp_register_partial(&c, &c, &IcpConfig::default(), VisibilityMode::Depth).unwrap();
        assert!((res.estimate.matrix() - nalgebra::Matrix4::identity()).amax() < 1e-12);
        assert!(res.converged);
    }

    #[test]
    fn config_validation() {
        let c = random_cloud(10, 1);
        let cfg = IcpConfig {
            max_iters: 0,
            ..IcpConfig::default()
        };
        assert!(icp_register(&c, &c, &cfg).is_err());
    }
}
