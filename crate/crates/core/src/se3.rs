//! SE(3) / se(3) machinery: generators, exponential and logarithm maps,
//! composition, inversion and pose-error metrics.
//!
//! Twists are ordered `(ω; v)`: three rotational coordinates (radians)
//! followed by three translational coordinates (scene units). The generator
//! `T_i` multiplies twist coordinate `i` in the same order.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this rotation angle the exp/log coefficients use Taylor expansions.
const TAYLOR_THRESHOLD: f64 = 1e-4;

/// `log_map` refuses rotations this close to pi.
pub const LOG_PI_MARGIN: f64 = 1e-6;

/// Orthogonality drift (Frobenius) that triggers re-orthonormalization.
const ORTHO_DRIFT: f64 = 1e-9;

/// Tolerance for the validity checks in [`RigidTransform::from_matrix`].
const VALIDITY_TOL: f64 = 1e-9;

/// se(3) coordinates `(ω₁, ω₂, ω₃, v₁, v₂, v₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Twist(pub Vector6<f64>);

impl Twist {
    pub fn zero() -> Self {
        Twist(Vector6::zeros())
    }

    pub fn new(w1: f64, w2: f64, w3: f64, v1: f64, v2: f64, v3: f64) -> Self {
        Twist(Vector6::new(w1, w2, w3, v1, v2, v3))
    }

    pub fn from_parts(omega: Vector3<f64>, v: Vector3<f64>) -> Self {
        Twist(Vector6::new(omega.x, omega.y, omega.z, v.x, v.y, v.z))
    }

    /// Unit twist along coordinate `i` scaled by `t`.
    pub fn basis(i: usize, t: f64) -> Self {
        let mut xi = Vector6::zeros();
        xi[i] = t;
        Twist(xi)
    }

    pub fn omega(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn v(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// The 4×4 Lie-algebra matrix `Σ ξᵢ Tᵢ`.
    pub fn hat(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.omega()));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.v());
        m
    }
}

impl std::ops::Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist(-self.0)
    }
}

/// The six generators of se(3), `T₁..T₆`, in twist order.
pub fn generators() -> [Matrix4<f64>; 6] {
    std::array::from_fn(|i| Twist::basis(i, 1.0).hat())
}

/// Skew-symmetric cross-product matrix `[w]ₓ`.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// A homogeneous 4×4 rigid transform with orthonormal, right-handed rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform(Matrix4<f64>);

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform(Matrix4::identity())
    }

    /// Builds a transform from a rotation block and translation column.
    /// The rotation is trusted; use [`RigidTransform::from_matrix`] to validate.
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        RigidTransform(m)
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::from_parts(Matrix3::identity(), t)
    }

    /// Rotation by `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        exp_map(&Twist::from_parts(axis * (angle / n), Vector3::zeros()))
    }

    /// Validates a raw homogeneous matrix against the SE(3) invariants.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry".into()));
        }
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(Error::InvalidTransform(
                "bottom row must be exactly [0, 0, 0, 1]".into(),
            ));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let drift = (r.transpose() * r - Matrix3::identity()).norm();
        if drift > VALIDITY_TOL {
            return Err(Error::InvalidTransform(format!(
                "rotation block is not orthonormal (drift {drift:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::InvalidTransform(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(RigidTransform(m))
    }

    /// Row-major 16 entries, as stored in manifests.
    pub fn from_row_major(values: &[f64]) -> Result<Self> {
        if values.len() != 16 {
            return Err(Error::InvalidTransform(format!(
                "expected 16 values, got {}",
                values.len()
            )));
        }
        Self::from_matrix(Matrix4::from_row_slice(values))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[4 * r + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.0.fixed_view::<3, 3>(0, 0) * p + self.0.fixed_view::<3, 1>(0, 3)
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation())
    }

    /// Frobenius norm of `RᵀR − I`.
    pub fn orthogonality_drift(&self) -> f64 {
        let r = self.rotation();
        (r.transpose() * r - Matrix3::identity()).norm()
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        compose(&self, &rhs)
    }
}

fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    // atan2 keeps full precision near 0 and near π where acos does not.
    let s = 0.5 * vee(&(r - r.transpose())).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Coefficients `(sin θ/θ, (1−cos θ)/θ², (θ−sin θ)/θ³)` for θ² = `theta_sq`.
fn exp_coefficients(theta_sq: f64) -> (f64, f64, f64) {
    let theta = theta_sq.sqrt();
    if theta < TAYLOR_THRESHOLD {
        let t4 = theta_sq * theta_sq;
        (
            1.0 - theta_sq / 6.0 + t4 / 120.0,
            0.5 - theta_sq / 24.0 + t4 / 720.0,
            1.0 / 6.0 - theta_sq / 120.0 + t4 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / theta_sq, (theta - s) / (theta_sq * theta))
    }
}

/// Closed-form exponential map (Rodrigues rotation plus left Jacobian on `v`).
pub fn exp_map(xi: &Twist) -> RigidTransform {
    let omega = xi.omega();
    let w = skew(&omega);
    let w2 = w * w;
    let (a, b, c) = exp_coefficients(omega.norm_squared());
    let rotation = Matrix3::identity() + w * a + w2 * b;
    let v_mat = Matrix3::identity() + w * b + w2 * c;
    RigidTransform::from_parts(rotation, v_mat * xi.v())
}

/// Inverse of [`exp_map`] on rotations with angle below `π − 1e-6`.
pub fn log_map(g: &RigidTransform) -> Result<Twist> {
    let r = g.rotation();
    let theta = rotation_angle(&r);
    if theta > std::f64::consts::PI - LOG_PI_MARGIN {
        return Err(Error::AngleNearPi { angle: theta });
    }
    let theta_sq = theta * theta;
    let axis_part = vee(&(r - r.transpose()));
    // ω = θ / (2 sin θ) · vee(R − Rᵀ)
    let scale = if theta < TAYLOR_THRESHOLD {
        0.5 + theta_sq / 12.0 + 7.0 * theta_sq * theta_sq / 720.0
    } else {
        theta / (2.0 * theta.sin())
    };
    let omega = axis_part * scale;
    let w = skew(&omega);
    // V⁻¹ = I − ½W + k·W², k = (1 − A/(2B)) / θ²
    let k = if theta < TAYLOR_THRESHOLD {
        1.0 / 12.0 + theta_sq / 720.0 + theta_sq * theta_sq / 30240.0
    } else {
        let (a, b, _) = exp_coefficients(theta_sq);
        (1.0 - a / (2.0 * b)) / theta_sq
    };
    let v_inv = Matrix3::identity() - w * 0.5 + w * w * k;
    Ok(Twist::from_parts(omega, v_inv * g.translation()))
}

/// Projects a near-orthonormal matrix onto SO(3) via polar decomposition.
fn polar_project(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut proj = u * v_t;
    if proj.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        proj = u * v_t;
    }
    proj
}

/// Matrix product `a·b`, re-orthonormalized if the rotation drifted.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    let m = a.0 * b.0;
    let out = RigidTransform(m);
    if out.orthogonality_drift() > ORTHO_DRIFT {
        RigidTransform::from_parts(polar_project(&out.rotation()), out.translation())
    } else {
        out
    }
}

/// `(Rᵀ, −Rᵀt)`.
pub fn inverse(g: &RigidTransform) -> RigidTransform {
    let rt = g.rotation().transpose();
    RigidTransform::from_parts(rt, -(rt * g.translation()))
}

/// Rotation error (degrees) and translation error between an estimate and
/// the ground truth.
pub fn pose_error(est: &RigidTransform, gt: &RigidTransform) -> (f64, f64) {
    let rel_rot = est.rotation().transpose() * gt.rotation();
    let rot_err_deg = rotation_angle(&rel_rot).to_degrees();
    let trans_err = compose(&inverse(est), gt).translation().norm();
    (rot_err_deg, trans_err)
}

/// Rotation matrix for an angle about a coordinate axis; used by fixtures and the cost sweep.
pub fn axis_rotation(axis: Axis, angle: f64) -> RigidTransform {
    let r = match axis {
        Axis::X => Rotation3::from_axis_angle(&Vector3::x_axis(), angle),
        Axis::Y => Rotation3::from_axis_angle(&Vector3::y_axis(), angle),
        Axis::Z => Rotation3::from_axis_angle(&Vector3::z_axis(), angle),
    };
    RigidTransform::from_parts(*r.matrix(), Vector3::zeros())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
        }
    }
}
