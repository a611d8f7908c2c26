use std::ffi::{CStr, CString};
use std::ptr;

use pointnetlk::shapes::asymmetric_cloud;
use pointnetlk::{inverse, EncoderWeights, Pooling, RigidTransform};
use pointnetlk_ffi::*;

fn flat(c: &pointnetlk::PointCloud) -> Vec<f64> {
    c.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn cloud(xyz: &[f64]) -> *mut PnlkCloud {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { pnlk_cloud_new(xyz.as_ptr(), xyz.len() / 3, &mut out) },
        PnlkStatus::Ok
    );
    out
}

fn moment() -> *mut PnlkEncoder {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pnlk_encoder_moment(&mut out) }, PnlkStatus::Ok);
    out
}

fn last_error() -> String {
    let p = pnlk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn blank_result() -> PnlkResult {
    PnlkResult {
        estimate: [0.0; 16],
        iterations_used: 0,
        converged: false,
        residual_norm: 0.0,
    }
}

#[test]
fn cloud_round_trip() {
    let xyz = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let c = cloud(&xyz);
    unsafe {
        assert_eq!(pnlk_cloud_len(c), 2);
        let mut buf = [0.0; 6];
        assert_eq!(pnlk_cloud_copy_points(c, buf.as_mut_ptr(), 6), PnlkStatus::Ok);
        assert_eq!(buf, xyz);
        assert_eq!(
            pnlk_cloud_copy_points(c, buf.as_mut_ptr(), 5),
            PnlkStatus::BufferTooSmall
        );
        pnlk_cloud_free(c);
        pnlk_cloud_free(ptr::null_mut());
        assert_eq!(pnlk_cloud_len(ptr::null()), 0);
    }
}

#[test]
fn register_matches_library() {
    let template = asymmetric_cloud(500, 1);
    let gt = RigidTransform::from_axis_angle(&nalgebra::Vector3::new(1.0, 0.3, -0.2), 12f64.to_radians());
    let source = template.transformed(&inverse(&gt));
    let (t, s, e) = (cloud(&flat(&template)), cloud(&flat(&source)), moment());
    let mut res = blank_result();
    unsafe {
        let cfg = pnlk_solver_config_default();
        assert_eq!(pnlk_register(e, t, s, &cfg, &mut res), PnlkStatus::Ok);
        let lib = pointnetlk::register(&pointnetlk::MomentEncoder, &template, &source, &Default::default()).unwrap();
        assert_eq!(res.estimate.to_vec(), lib.estimate.to_row_major().to_vec());
        assert_eq!(res.iterations_used, lib.iterations_used);

        let gt_rm = gt.to_row_major();
        let (mut rot, mut trans) = (f64::NAN, f64::NAN);
        assert_eq!(
            pnlk_pose_error(res.estimate.as_ptr(), gt_rm.as_ptr(), &mut rot, &mut trans),
            PnlkStatus::Ok
        );
        assert!(rot < 0.5 && trans < 5e-3);
        let mut loss = f64::NAN;
        assert_eq!(
            pnlk_frobenius_loss(res.estimate.as_ptr(), gt_rm.as_ptr(), &mut loss),
            PnlkStatus::Ok
        );
        assert!(loss < 1e-2);

        assert_eq!(pnlk_register(e, t, s, ptr::null(), &mut res), PnlkStatus::Ok);
        assert_eq!(pnlk_icp_register(t, t, ptr::null(), &mut res), PnlkStatus::Ok);
        assert_eq!(res.iterations_used, 1);
        assert_eq!(pnlk_register_partial(e, t, t, &cfg, &mut res), PnlkStatus::Ok);
        assert!(res.converged);
        let icp = pnlk_icp_config_default();
        assert_eq!(
            pnlk_icp_register_partial(t, t, &icp, PnlkVisibility::Componentwise, &mut res),
            PnlkStatus::Ok
        );
        for h in [t, s] {
            pnlk_cloud_free(h);
        }
        pnlk_encoder_free(e);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(pnlk_cloud_new(ptr::null(), 3, &mut out), PnlkStatus::NullPointer);
        assert!(last_error().contains("xyz"));

        let nan = [f64::NAN, 0.0, 0.0];
        assert_eq!(pnlk_cloud_new(nan.as_ptr(), 1, &mut out), PnlkStatus::InvalidArgument);

        let missing = CString::new("/nonexistent/cloud.xyz").unwrap();
        assert_eq!(pnlk_cloud_load_xyz(missing.as_ptr(), &mut out), PnlkStatus::Io);
        assert!(last_error().contains("nonexistent"));

        let mut enc = ptr::null_mut();
        assert_eq!(pnlk_encoder_load(missing.as_ptr(), &mut enc), PnlkStatus::Io);

        let c = cloud(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let e = moment();
        let mut cfg = pnlk_solver_config_default();
        cfg.max_iters = 0;
        let mut res = blank_result();
        assert_eq!(pnlk_register(e, c, c, &cfg, &mut res), PnlkStatus::InvalidArgument);
        assert_eq!(
            pnlk_register(ptr::null(), c, c, &cfg, &mut res),
            PnlkStatus::NullPointer
        );

        let bad = [2.0; 16];
        let (mut r, mut t) = (0.0, 0.0);
        assert_eq!(
            pnlk_pose_error(bad.as_ptr(), bad.as_ptr(), &mut r, &mut t),
            PnlkStatus::InvalidTransform
        );
        pnlk_cloud_free(c);
        pnlk_encoder_free(e);
    }
}

#[test]
fn weights_file_encoder() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.pnlk");
    let weights = EncoderWeights::random(&[3, 8, 16], Pooling::Max, 2).unwrap();
    pointnetlk::save_weights(&weights, &path).unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let template = asymmetric_cloud(100, 3);
    unsafe {
        let mut e = ptr::null_mut();
        assert_eq!(pnlk_encoder_load(c_path.as_ptr(), &mut e), PnlkStatus::Ok);
        assert_eq!(pnlk_encoder_feature_dim(e), 16);
        let c = cloud(&flat(&template));
        let mut f = [0.0; 16];
        assert_eq!(pnlk_encoder_encode(e, c, f.as_mut_ptr(), 16), PnlkStatus::Ok);
        let expect = pointnetlk::Encoder::encode(&pointnetlk::MlpEncoder::new(weights).unwrap(), &template).unwrap();
        assert_eq!(f.to_vec(), expect.as_slice().to_vec());
        assert_eq!(
            pnlk_encoder_encode(e, c, f.as_mut_ptr(), 15),
            PnlkStatus::BufferTooSmall
        );
        pnlk_cloud_free(c);
        pnlk_encoder_free(e);
    }
    let v = unsafe { CStr::from_ptr(pnlk_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
