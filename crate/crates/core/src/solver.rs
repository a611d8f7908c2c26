//! Inverse-compositional Lucas–Kanade alignment in feature space.
//!
//! The template is linearized once: each Jacobian column is a forward
//! difference of the encoder under the inverse generator motion
//! `exp(−t·Tᵢ)`. Each iteration then solves `ξ = J⁺ (φ(P_S) − φ(P_T))`,
//! warps the source by `ΔG = exp(ξ)` and accumulates `G ← ΔG·G`.
//!
//! Every returned estimate maps the *source* onto the *template*:
//! `estimate · source ≈ template`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::encoder::{Encoder, FeatureVector};
use crate::error::{Error, Result};
use crate::harness::{subtract_mean, visible_subset, VisibilityMode};
use crate::se3::{compose, exp_map, log_map, RigidTransform, Twist};

/// Iteration cap for the SVD behind the pseudo-inverse.
const SVD_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Finite-difference step on each twist coordinate.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once every |Δξᵢ| falls below this.
    pub stop_threshold: f64,
    /// Singular values below `pinv_rcond · σ_max` are treated as zero.
    pub pinv_rcond: f64,
    pub subtract_means: bool,
    /// Sensor model for [`register_partial`].
    pub visibility: VisibilityMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: 1e-2,
            max_iters: 10,
            stop_threshold: 1e-7,
            pinv_rcond: 1e-6,
            subtract_means: true,
            visibility: VisibilityMode::Depth,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be > 0, got {}", self.step)));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.stop_threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stop_threshold must be >= 0, got {}",
                self.stop_threshold
            )));
        }
        if !(self.pinv_rcond > 0.0 && self.pinv_rcond < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pinv_rcond must lie in (0, 1), got {}",
                self.pinv_rcond
            )));
        }
        Ok(())
    }
}

/// Outcome of a registration; shared by IC-LK and ICP.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Transform taking the source onto the template.
    pub estimate: RigidTransform,
    pub iterations_used: usize,
    pub converged: bool,
    /// Method-specific residual at exit: feature distance for IC-LK,
    /// correspondence MSE for ICP.
    pub residual_norm: f64,
    pub per_iteration_twist_norms: Vec<f64>,
    /// Residual before the first update and after every iteration.
    pub residual_history: Vec<f64>,
}

/// Finite-difference linearization of the encoder at the template.
#[derive(Debug, Clone)]
pub struct Jacobian {
    /// K × 6.
    pub matrix: DMatrix<f64>,
    /// φ(template), the base point of the differences.
    pub template_feature: FeatureVector,
}

/// Forward-difference Jacobian: column `i` is
/// `[φ(exp(−t·Tᵢ)·P_T) − φ(P_T)] / t`.
pub fn compute_jacobian<E: Encoder + ?Sized>(encoder: &E, template: &PointCloud, step: f64) -> Result<Jacobian> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
    }
    let base = encoder.encode(template)?;
    let mut matrix = DMatrix::zeros(base.len(), 6);
    for i in 0..6 {
        let warp = exp_map(&Twist::basis(i, -step));
        let perturbed = encoder.encode(&template.transformed(&warp))?;
        if perturbed.len() != base.len() {
            return Err(Error::DimensionMismatch(format!(
                "encoder returned {} features, expected {}",
                perturbed.len(),
                base.len()
            )));
        }
        matrix.set_column(i, &((perturbed - &base) / step));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite Jacobian entry".into()));
    }
    Ok(Jacobian {
        matrix,
        template_feature: base,
    })
}

/// Moore–Penrose pseudo-inverse via SVD with a relative singular-value cutoff.
pub fn pseudo_inverse(j: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    let (rows, cols) = j.shape();
    if j.iter().all(|&x| x == 0.0) {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let svd = j
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sigma_max = svd.singular_values.max();
    let cutoff = rcond * sigma_max;
    let inv_sigma = svd.singular_values.map(|s| if s > cutoff { 1.0 / s } else { 0.0 });
    // J⁺ = V Σ⁺ Uᵀ
    let mut v = v_t.transpose();
    for (mut col, s) in v.column_iter_mut().zip(inv_sigma.iter()) {
        col *= *s;
    }
    Ok(v * u.transpose())
}

/// Minimum-norm least-squares twist `J⁺ (f_src − f_tmpl)`.
pub fn solve_twist(j: &DMatrix<f64>, f_src: &FeatureVector, f_tmpl: &FeatureVector, rcond: f64) -> Result<Twist> {
    if j.ncols() != 6 || j.nrows() != f_src.len() || f_src.len() != f_tmpl.len() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian is {}x{}, features have {} and {} entries",
            j.nrows(),
            j.ncols(),
            f_src.len(),
            f_tmpl.len()
        )));
    }
    let pinv = pseudo_inverse(j, rcond)?;
    twist_from(&pinv, &(f_src - f_tmpl))
}

fn twist_from(pinv: &DMatrix<f64>, residual: &DVector<f64>) -> Result<Twist> {
    let xi = pinv * residual;
    let twist = Twist::new(xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]);
    if !twist.is_finite() {
        return Err(Error::NumericalFailure("non-finite twist update".into()));
    }
    Ok(twist)
}

/// Lifts a transform between centered frames back to the original frames:
/// `T(c_tmpl) · g · T(−c_src)`.
pub(crate) fn uncenter(g: &RigidTransform, c_tmpl: &Point, c_src: &Point) -> RigidTransform {
    compose(
        &RigidTransform::from_translation(*c_tmpl),
        &compose(g, &RigidTransform::from_translation(-c_src)),
    )
}

fn centered(cloud: &PointCloud, enabled: bool) -> (PointCloud, Point) {
    if enabled {
        subtract_mean(cloud)
    } else {
        (cloud.clone(), Point::zeros())
    }
}

/// Registers `source` onto `template` with the IC-LK iteration.
pub fn register<E: Encoder + ?Sized>(
    encoder: &E,
    template: &PointCloud,
    source: &PointCloud,
    cfg: &SolverConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    let (tmpl, c_tmpl) = centered(template, cfg.subtract_means);
    let (mut src, c_src) = centered(source, cfg.subtract_means);

    let lin = compute_jacobian(encoder, &tmpl, cfg.step)?;
    let pinv = pseudo_inverse(&lin.matrix, cfg.pinv_rcond)?;
    let f_tmpl = &lin.template_feature;

    let mut f_src = encoder.encode(&src)?;
    let mut g = RigidTransform::identity();
    let mut residual_history = vec![(&f_src - f_tmpl).norm()];
    let mut twist_norms = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let xi = twist_from(&pinv, &(&f_src - f_tmpl))?;
        let dg = exp_map(&xi);
        g = compose(&dg, &g);
        src = src.transformed(&dg);
        f_src = encoder.encode(&src)?;
        residual_history.push((&f_src - f_tmpl).norm());
        twist_norms.push(xi.norm());
        if xi.max_abs() < cfg.stop_threshold {
            converged = true;
            break;
        }
    }

    Ok(RegistrationResult {
        estimate: uncenter(&g, &c_tmpl, &c_src),
        iterations_used: iterations,
        converged,
        residual_norm: *residual_history.last().unwrap(),
        per_iteration_twist_norms: twist_norms,
        residual_history,
    })
}

/// One inner update of the partial-visibility loop.
pub(crate) trait PartialStep {
    /// Transform that moves the visible source towards the visible template,
    /// plus the residual measured before the move.
    fn step(&mut self, source_visible: &PointCloud) -> Result<(RigidTransform, f64)>;
    fn residual(&mut self, source_visible: &PointCloud) -> Result<f64>;
}

/// Outer loop shared by IC-LK and ICP: re-sample the visible source, take a
/// single inner step, warp the full source, repeat.
pub(crate) fn partial_loop<S: PartialStep>(
    source: &PointCloud,
    visibility: VisibilityMode,
    max_iters: usize,
    stop_threshold: f64,
    inner: &mut S,
) -> Result<RegistrationResult> {
    let mut current = source.clone();
    let mut g = RigidTransform::identity();
    let mut twist_norms = Vec::new();
    let mut residual_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let visible = visible_subset(&current, visibility)?;
        let (dg, before) = inner.step(&visible)?;
        if residual_history.is_empty() {
            residual_history.push(before);
        }
        g = compose(&dg, &g);
        current = current.transformed(&dg);
        let step_size = log_map(&dg).map_or(f64::INFINITY, |xi| xi.max_abs());
        twist_norms.push(log_map(&dg).map_or(f64::INFINITY, |xi| xi.norm()));
        let after = inner.residual(&visible_subset(&current, visibility)?)?;
        residual_history.push(after);
        if step_size < stop_threshold {
            converged = true;
            break;
        }
    }

    Ok(RegistrationResult {
        estimate: g,
        iterations_used: iterations,
        converged,
        residual_norm: *residual_history.last().unwrap(),
        per_iteration_twist_norms: twist_norms,
        residual_history,
    })
}

struct IclkPartialStep<'a, E: ?Sized> {
    encoder: &'a E,
    pinv: DMatrix<f64>,
    f_tmpl: FeatureVector,
    c_tmpl: Point,
    subtract_means: bool,
}

impl<E: Encoder + ?Sized> PartialStep for IclkPartialStep<'_, E> {
    fn step(&mut self, source_visible: &PointCloud) -> Result<(RigidTransform, f64)> {
        let (src, c_src) = centered(source_visible, self.subtract_means);
        let f_src = self.encoder.encode(&src)?;
        let residual = &f_src - &self.f_tmpl;
        let xi = twist_from(&self.pinv, &residual)?;
        Ok((uncenter(&exp_map(&xi), &self.c_tmpl, &c_src), residual.norm()))
    }

    fn residual(&mut self, source_visible: &PointCloud) -> Result<f64> {
        let (src, _) = centered(source_visible, self.subtract_means);
        Ok((self.encoder.encode(&src)? - &self.f_tmpl).norm())
    }
}

/// IC-LK against a 2.5D view: the template's visible set and Jacobian are
/// fixed, the source's visible set is re-sampled after every single-step
/// update of the full source.
pub fn register_partial<E: Encoder + ?Sized>(
    encoder: &E,
    template: &PointCloud,
    source: &PointCloud,
    cfg: &SolverConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    let tmpl_visible = visible_subset(template, cfg.visibility)?;
    let (tmpl, c_tmpl) = centered(&tmpl_visible, cfg.subtract_means);
    let lin = compute_jacobian(encoder, &tmpl, cfg.step)?;
    let mut inner = IclkPartialStep {
        encoder,
        pinv: pseudo_inverse(&lin.matrix, cfg.pinv_rcond)?,
        f_tmpl: lin.template_feature,
        c_tmpl,
        subtract_means: cfg.subtract_means,
    };
    partial_loop(source, cfg.visibility, cfg.max_iters, cfg.stop_threshold, &mut inner)
}
