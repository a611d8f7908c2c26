//! Rigid point cloud registration by inverse-compositional Lucas-Kanade over
//! pooled per-point features, with an ICP baseline and a synthetic benchmark
//! harness.
//!
//! Every estimate returned by the registration routines maps the source cloud
//! onto the template: `estimate · source ≈ template`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cloud;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod icp;
pub mod mesh;
pub mod metrics;
pub mod rng;
pub mod se3;
pub mod shapes;
pub mod solver;
pub mod weights;

pub use cloud::{Point, PointCloud};
pub use encoder::{Encoder, EncoderWeights, FeatureVector, Layer, MlpEncoder, MomentEncoder, Pooling, VisibilityMask};
pub use error::{Error, Result};
pub use harness::{PerturbationSpec, VisibilityMode};
pub use icp::{icp_register, icp_register_partial, IcpConfig};
pub use mesh::TriangleMesh;
pub use metrics::{frobenius_loss, Method, TrialRecord};
pub use se3::{compose, exp_map, inverse, log_map, pose_error, RigidTransform, Twist};
pub use solver::{register, register_partial, RegistrationResult, SolverConfig};
pub use weights::{load_weights, save_weights};
