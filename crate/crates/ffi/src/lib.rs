//! C ABI over the `pointnetlk` registration toolkit.
//!
//! Clouds and encoders cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free`. Every fallible entry point
//! returns a [`PnlkStatus`]; on failure a message is kept per thread and read
//! with [`pnlk_last_error_message`]. Panics never unwind into C.
//!
//! Transforms are 16 doubles in row-major order. Registration estimates map
//! the source onto the template.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pointnetlk::encoder::{Encoder, MlpEncoder, MomentEncoder};
use pointnetlk::{
    frobenius_loss, icp_register, icp_register_partial, load_weights, pose_error, register, register_partial, Error,
    IcpConfig, PointCloud, RegistrationResult, RigidTransform, SolverConfig, VisibilityMode,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnlkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Format = 5,
    DimensionMismatch = 6,
    InvalidTransform = 7,
    Degenerate = 8,
    EmptyVisibleSet = 9,
    NumericalFailure = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Sensor model for the partial-visibility calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnlkVisibility {
    Depth = 0,
    Componentwise = 1,
}

impl From<PnlkVisibility> for VisibilityMode {
    fn from(v: PnlkVisibility) -> Self {
        match v {
            PnlkVisibility::Depth => VisibilityMode::Depth,
            PnlkVisibility::Componentwise => VisibilityMode::Componentwise,
        }
    }
}

/// Opaque point cloud.
pub struct PnlkCloud {
    inner: PointCloud,
}

/// Opaque feature encoder.
pub struct PnlkEncoder {
    inner: Box<dyn Encoder>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnlkSolverConfig {
    pub step: f64,
    pub max_iters: usize,
    pub stop_threshold: f64,
    pub pinv_rcond: f64,
    pub subtract_means: bool,
    pub visibility: PnlkVisibility,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnlkIcpConfig {
    pub max_iters: usize,
    pub stop_mse_delta: f64,
    pub partial_stop_threshold: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnlkResult {
    /// Row-major 4×4 transform taking the source onto the template.
    pub estimate: [f64; 16],
    pub iterations_used: usize,
    pub converged: bool,
    pub residual_norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PnlkStatus {
    match err {
        Error::Io { .. } => PnlkStatus::Io,
        Error::Parse { .. } => PnlkStatus::Parse,
        Error::Format(_) => PnlkStatus::Format,
        Error::DimensionMismatch(_) => PnlkStatus::DimensionMismatch,
        Error::InvalidArgument(_) => PnlkStatus::InvalidArgument,
        Error::InvalidTransform(_) | Error::AngleNearPi { .. } => PnlkStatus::InvalidTransform,
        Error::DegenerateMesh | Error::DegenerateCloud | Error::DegenerateConfiguration(_) => PnlkStatus::Degenerate,
        Error::EmptyVisibleSet | Error::EmptyAfterMask => PnlkStatus::EmptyVisibleSet,
        Error::NumericalFailure(_) => PnlkStatus::NumericalFailure,
    }
}

struct Failure(PnlkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PnlkStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any failure and converts panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PnlkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PnlkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            PnlkStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(PnlkStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn transform_arg(m: *const f64, what: &str) -> Result<RigidTransform, Failure> {
    if m.is_null() {
        return Err(null(what));
    }
    Ok(RigidTransform::from_row_major(std::slice::from_raw_parts(m, 16))?)
}

unsafe fn write_result(out: *mut PnlkResult, res: &RegistrationResult) {
    let mut estimate = [0.0; 16];
    estimate.copy_from_slice(&res.estimate.to_row_major());
    out.write(PnlkResult {
        estimate,
        iterations_used: res.iterations_used,
        converged: res.converged,
        residual_norm: res.residual_norm,
    });
}

fn solver_config(c: &PnlkSolverConfig) -> SolverConfig {
    SolverConfig {
        step: c.step,
        max_iters: c.max_iters,
        stop_threshold: c.stop_threshold,
        pinv_rcond: c.pinv_rcond,
        subtract_means: c.subtract_means,
        visibility: c.visibility.into(),
    }
}

fn icp_config(c: &PnlkIcpConfig) -> IcpConfig {
    IcpConfig {
        max_iters: c.max_iters,
        stop_mse_delta: c.stop_mse_delta,
        partial_stop_threshold: c.partial_stop_threshold,
        ..IcpConfig::default()
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pnlk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn pnlk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn pnlk_solver_config_default() -> PnlkSolverConfig {
    let d = SolverConfig::default();
    PnlkSolverConfig {
        step: d.step,
        max_iters: d.max_iters,
        stop_threshold: d.stop_threshold,
        pinv_rcond: d.pinv_rcond,
        subtract_means: d.subtract_means,
        visibility: PnlkVisibility::Depth,
    }
}

#[no_mangle]
pub extern "C" fn pnlk_icp_config_default() -> PnlkIcpConfig {
    let d = IcpConfig::default();
    PnlkIcpConfig {
        max_iters: d.max_iters,
        stop_mse_delta: d.stop_mse_delta,
        partial_stop_threshold: d.partial_stop_threshold,
    }
}

/// Builds a cloud from `n_points` interleaved xyz triples.
///
/// # Safety
/// `xyz` must point to `3 * n_points` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_cloud_new(xyz: *const f64, n_points: usize, out: *mut *mut PnlkCloud) -> PnlkStatus {
    guard(|| {
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n_points
            .checked_mul(3)
            .ok_or_else(|| Failure(PnlkStatus::InvalidArgument, "n_points overflows".into()))?;
        let inner = PointCloud::from_flat(std::slice::from_raw_parts(xyz, len))?;
        out.write(Box::into_raw(Box::new(PnlkCloud { inner })));
        Ok(())
    })
}

/// Reads an XYZ text file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_cloud_load_xyz(path: *const c_char, out: *mut *mut PnlkCloud) -> PnlkStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = PointCloud::load_xyz(path)?;
        out.write(Box::into_raw(Box::new(PnlkCloud { inner })));
        Ok(())
    })
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `cloud` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlk_cloud_len(cloud: *const PnlkCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.inner.len())
}

/// Copies interleaved xyz into `out`, which holds `capacity` doubles.
///
/// # Safety
/// `cloud` must be a live handle; `out` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pnlk_cloud_copy_points(cloud: *const PnlkCloud, out: *mut f64, capacity: usize) -> PnlkStatus {
    guard(|| {
        let cloud = cloud.as_ref().ok_or_else(|| null("cloud"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let need = 3 * cloud.inner.len();
        if capacity < need {
            return Err(Failure(
                PnlkStatus::BufferTooSmall,
                format!("buffer holds {capacity} doubles, need {need}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(cloud.inner.iter()) {
            chunk.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `cloud` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pnlk_cloud_free(cloud: *mut PnlkCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// The analytic moment encoder (12 features).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_encoder_moment(out: *mut *mut PnlkEncoder) -> PnlkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(Box::into_raw(Box::new(PnlkEncoder {
            inner: Box::new(MomentEncoder),
        })));
        Ok(())
    })
}

/// Loads an MLP encoder from a PNLKW1 weights file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_encoder_load(path: *const c_char, out: *mut *mut PnlkEncoder) -> PnlkStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let encoder = MlpEncoder::new(load_weights(path)?)?;
        out.write(Box::into_raw(Box::new(PnlkEncoder {
            inner: Box::new(encoder),
        })));
        Ok(())
    })
}

/// Feature length K, or 0 for NULL.
///
/// # Safety
/// `encoder` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnlk_encoder_feature_dim(encoder: *const PnlkEncoder) -> usize {
    encoder.as_ref().map_or(0, |e| e.inner.feature_dim())
}

/// Writes φ(cloud) into `out`, which holds `capacity` doubles.
///
/// # Safety
/// Handles must be live; `out` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pnlk_encoder_encode(
    encoder: *const PnlkEncoder,
    cloud: *const PnlkCloud,
    out: *mut f64,
    capacity: usize,
) -> PnlkStatus {
    guard(|| {
        let encoder = encoder.as_ref().ok_or_else(|| null("encoder"))?;
        let cloud = cloud.as_ref().ok_or_else(|| null("cloud"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let f = encoder.inner.encode(&cloud.inner)?;
        if capacity < f.len() {
            return Err(Failure(
                PnlkStatus::BufferTooSmall,
                format!("buffer holds {capacity} doubles, need {}", f.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, f.len()).copy_from_slice(f.as_slice());
        Ok(())
    })
}

/// # Safety
/// `encoder` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pnlk_encoder_free(encoder: *mut PnlkEncoder) {
    if !encoder.is_null() {
        drop(Box::from_raw(encoder));
    }
}

unsafe fn iclk(
    encoder: *const PnlkEncoder,
    template: *const PnlkCloud,
    source: *const PnlkCloud,
    config: *const PnlkSolverConfig,
    out: *mut PnlkResult,
    partial: bool,
) -> PnlkStatus {
    guard(|| {
        let encoder = encoder.as_ref().ok_or_else(|| null("encoder"))?;
        let template = template.as_ref().ok_or_else(|| null("template"))?;
        let source = source.as_ref().ok_or_else(|| null("source"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = config.as_ref().map_or_else(SolverConfig::default, solver_config);
        let res = if partial {
            register_partial(&encoder.inner, &template.inner, &source.inner, &cfg)?
        } else {
            register(&encoder.inner, &template.inner, &source.inner, &cfg)?
        };
        write_result(out, &res);
        Ok(())
    })
}

/// IC-LK registration of `source` onto `template`. A NULL `config` selects
/// the defaults.
///
/// # Safety
/// Handles must be live; `config` must be NULL or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_register(
    encoder: *const PnlkEncoder,
    template: *const PnlkCloud,
    source: *const PnlkCloud,
    config: *const PnlkSolverConfig,
    out: *mut PnlkResult,
) -> PnlkStatus {
    iclk(encoder, template, source, config, out, false)
}

/// IC-LK with the partial-visibility loop.
///
/// # Safety
/// As for [`pnlk_register`].
#[no_mangle]
pub unsafe extern "C" fn pnlk_register_partial(
    encoder: *const PnlkEncoder,
    template: *const PnlkCloud,
    source: *const PnlkCloud,
    config: *const PnlkSolverConfig,
    out: *mut PnlkResult,
) -> PnlkStatus {
    iclk(encoder, template, source, config, out, true)
}

/// Point-to-point ICP. A NULL `config` selects the defaults.
///
/// # Safety
/// Handles must be live; `config` must be NULL or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_icp_register(
    template: *const PnlkCloud,
    source: *const PnlkCloud,
    config: *const PnlkIcpConfig,
    out: *mut PnlkResult,
) -> PnlkStatus {
    guard(|| {
        let template = template.as_ref().ok_or_else(|| null("template"))?;
        let source = source.as_ref().ok_or_else(|| null("source"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = config.as_ref().map_or_else(IcpConfig::default, icp_config);
        write_result(out, &icp_register(&template.inner, &source.inner, &cfg)?);
        Ok(())
    })
}

/// ICP inside the partial-visibility loop.
///
/// # Safety
/// As for [`pnlk_icp_register`].
#[no_mangle]
pub unsafe extern "C" fn pnlk_icp_register_partial(
    template: *const PnlkCloud,
    source: *const PnlkCloud,
    config: *const PnlkIcpConfig,
    visibility: PnlkVisibility,
    out: *mut PnlkResult,
) -> PnlkStatus {
    guard(|| {
        let template = template.as_ref().ok_or_else(|| null("template"))?;
        let source = source.as_ref().ok_or_else(|| null("source"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = config.as_ref().map_or_else(IcpConfig::default, icp_config);
        let res = icp_register_partial(&template.inner, &source.inner, &cfg, visibility.into())?;
        write_result(out, &res);
        Ok(())
    })
}

/// Rotation error in degrees and translation error of `est` against `gt`.
///
/// # Safety
/// `est` and `gt` must point to 16 readable doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_pose_error(
    est: *const f64,
    gt: *const f64,
    rot_err_deg: *mut f64,
    trans_err: *mut f64,
) -> PnlkStatus {
    guard(|| {
        let est = transform_arg(est, "est")?;
        let gt = transform_arg(gt, "gt")?;
        if rot_err_deg.is_null() || trans_err.is_null() {
            return Err(null("output"));
        }
        let (r, t) = pose_error(&est, &gt);
        rot_err_deg.write(r);
        trans_err.write(t);
        Ok(())
    })
}

/// `‖est⁻¹·gt − I‖_F`.
///
/// # Safety
/// `est` and `gt` must point to 16 readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pnlk_frobenius_loss(est: *const f64, gt: *const f64, out: *mut f64) -> PnlkStatus {
    guard(|| {
        let est = transform_arg(est, "est")?;
        let gt = transform_arg(gt, "gt")?;
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(frobenius_loss(&est, &gt));
        Ok(())
    })
}
