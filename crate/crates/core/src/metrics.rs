//! Transform loss, success criteria and summary statistics.

use std::fmt::Write as _;

use nalgebra::Matrix4;

use crate::se3::{compose, inverse, RigidTransform};

/// Success requires rotation error strictly below this many degrees...
pub const SUCCESS_ROT_DEG: f64 = 5.0;
/// ...and translation error strictly below this.
pub const SUCCESS_TRANS: f64 = 0.01;

pub const CSV_HEADER: &str =
    "method,n_points,seed,init_rot_deg,init_trans,rot_err_deg,trans_err,iters,converged,wall_time_s,loss";

/// `‖est⁻¹ · gt − I₄‖_F`.
pub fn frobenius_loss(est: &RigidTransform, gt: &RigidTransform) -> f64 {
    (compose(&inverse(est), gt).matrix() - Matrix4::identity()).norm()
}

/// Registration method tag written to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Iclk,
    Icp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Iclk => "iclk",
            Method::Icp => "icp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One registration trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub n_points: usize,
    pub seed: u64,
    pub gt: RigidTransform,
    pub est: RigidTransform,
    pub initial_rot_deg: f64,
    pub initial_trans: f64,
    /// NaN when the trial errored.
    pub rot_err_deg: f64,
    pub trans_err: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub loss: f64,
}

impl TrialRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.n_points,
            self.seed,
            self.initial_rot_deg,
            self.initial_trans,
            self.rot_err_deg,
            self.trans_err,
            self.iterations,
            self.converged,
            self.wall_time,
            self.loss
        )
    }
}

/// Strict thresholds: rotation < 5° and translation < 0.01.
pub fn is_success(rec: &TrialRecord) -> bool {
    rec.rot_err_deg < SUCCESS_ROT_DEG && rec.trans_err < SUCCESS_TRANS
}

pub fn success_ratio<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> Option<f64> {
    let (mut n, mut ok) = (0usize, 0usize);
    for r in records {
        n += 1;
        ok += usize::from(is_success(r));
    }
    (n > 0).then(|| ok as f64 / n as f64)
}

/// Fraction of successful trials per initial-rotation bin of width
/// `bin_width_deg`. Returns `(bin lower edge, ratio)` for non-empty bins only.
pub fn success_curve(records: &[TrialRecord], bin_width_deg: f64) -> Vec<(f64, f64)> {
    assert!(bin_width_deg > 0.0, "bin width must be positive");
    let mut bins: std::collections::BTreeMap<i64, (usize, usize)> = Default::default();
    for r in records {
        let b = (r.initial_rot_deg / bin_width_deg).floor() as i64;
        let e = bins.entry(b).or_default();
        e.0 += 1;
        e.1 += usize::from(is_success(r));
    }
    bins.into_iter()
        .map(|(b, (n, ok))| (b as f64 * bin_width_deg, ok as f64 / n as f64))
        .collect()
}

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.to_csv_row());
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}
