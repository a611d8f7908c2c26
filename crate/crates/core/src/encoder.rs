//! Global point-cloud descriptors φ(P).
//!
//! [`MlpEncoder`] applies a shared per-point MLP followed by a symmetric
//! pooling over the point axis. [`MomentEncoder`] is an analytic stand-in
//! (centroid and raw second moments) whose Jacobian is known in closed form,
//! which makes the solver testable without trained weights.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::se3::skew;

pub type FeatureVector = DVector<f64>;

/// Symmetric reduction over the point axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Max,
    Avg,
}

impl Pooling {
    pub fn code(self) -> u8 {
        match self {
            Pooling::Max => 0,
            Pooling::Avg => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Pooling::Max),
            1 => Ok(Pooling::Avg),
            c => Err(Error::Format(format!("unknown pooling code {c}"))),
        }
    }
}

impl std::str::FromStr for Pooling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Pooling::Max),
            "avg" => Ok(Pooling::Avg),
            other => Err(Error::InvalidArgument(format!("unknown pooling '{other}'"))),
        }
    }
}

/// Per-point keep flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMask {
    keep: Vec<bool>,
}

impl VisibilityMask {
    pub fn new(keep: Vec<bool>) -> Self {
        VisibilityMask { keep }
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Anything that maps a point cloud to a fixed-length feature vector.
pub trait Encoder: Send + Sync {
    fn feature_dim(&self) -> usize;

    fn encode_masked(&self, cloud: &PointCloud, mask: Option<&VisibilityMask>) -> Result<FeatureVector>;

    fn encode(&self, cloud: &PointCloud) -> Result<FeatureVector> {
        self.encode_masked(cloud, None)
    }
}

impl<E: Encoder + ?Sized> Encoder for &E {
    fn feature_dim(&self) -> usize {
        (**self).feature_dim()
    }
    fn encode_masked(&self, cloud: &PointCloud, mask: Option<&VisibilityMask>) -> Result<FeatureVector> {
        (**self).encode_masked(cloud, mask)
    }
}

impl<E: Encoder + ?Sized> Encoder for Box<E> {
    fn feature_dim(&self) -> usize {
        (**self).feature_dim()
    }
    fn encode_masked(&self, cloud: &PointCloud, mask: Option<&VisibilityMask>) -> Result<FeatureVector> {
        (**self).encode_masked(cloud, mask)
    }
}

/// Indices of the points the mask keeps; `None` when every point survives.
fn kept_indices(cloud: &PointCloud, mask: Option<&VisibilityMask>) -> Result<Option<Vec<usize>>> {
    let Some(mask) = mask else { return Ok(None) };
    if mask.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "mask length {} does not match cloud size {}",
            mask.len(),
            cloud.len()
        )));
    }
    let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask.keep[i]).collect();
    if idx.is_empty() {
        return Err(Error::EmptyAfterMask);
    }
    Ok(Some(idx))
}

/// One affine layer `y = scale ⊙ (W x + b) + shift`, stored as written on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
}

impl Layer {
    /// Layer with unit scale and zero shift.
    pub fn affine(in_dim: usize, out_dim: usize, weight: Vec<f32>, bias: Vec<f32>) -> Self {
        Layer {
            in_dim,
            out_dim,
            weight,
            bias,
            scale: vec![1.0; out_dim],
            shift: vec![0.0; out_dim],
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let expect = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "layer {index}: {name} has {got} entries, expected {want}"
                )))
            }
        };
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::DimensionMismatch(format!("layer {index} has a zero dimension")));
        }
        expect("weight", self.weight.len(), self.in_dim * self.out_dim)?;
        expect("bias", self.bias.len(), self.out_dim)?;
        expect("scale", self.scale.len(), self.out_dim)?;
        expect("shift", self.shift.len(), self.out_dim)?;
        if self.scale.contains(&0.0) {
            return Err(Error::DimensionMismatch(format!(
                "layer {index} has a zero affine scale"
            )));
        }
        let finite = |v: &[f32]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.weight) && finite(&self.bias) && finite(&self.scale) && finite(&self.shift)) {
            return Err(Error::DimensionMismatch(format!(
                "layer {index} has non-finite parameters"
            )));
        }
        Ok(())
    }
}

/// Shared per-point MLP parameters plus the pooling operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub pooling: Pooling,
    pub layers: Vec<Layer>,
}

impl EncoderWeights {
    pub fn new(pooling: Pooling, layers: Vec<Layer>) -> Result<Self> {
        let w = EncoderWeights { pooling, layers };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .layers
            .first()
            .ok_or_else(|| Error::DimensionMismatch("encoder has no layers".into()))?;
        if first.in_dim != 3 {
            return Err(Error::DimensionMismatch(format!(
                "first layer input is {}, expected 3",
                first.in_dim
            )));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate(i)?;
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::DimensionMismatch(format!(
                    "layer {i} outputs {} channels but layer {} expects {}",
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        Ok(())
    }

    /// Layer dimensions, input first: e.g. `[3, 64, 64, 64, 128, 1024]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers.first().map_or(0, |l| l.in_dim)];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// He-style uniform random initialization with zero biases.
    pub fn random(dims: &[usize], pooling: Pooling, seed: u64) -> Result<Self> {
        use rand::Rng as _;
        if dims.len() < 2 {
            return Err(Error::DimensionMismatch("need at least input and output dims".into()));
        }
        let mut rng = crate::rng::seeded(seed);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (i, o) = (d[0], d[1]);
                let bound = (6.0 / i as f64).sqrt();
                let weight = (0..i * o)
                    .map(|_| ((2.0 * rng.random::<f64>() - 1.0) * bound) as f32)
                    .collect();
                Layer::affine(i, o, weight, vec![0.0; o])
            })
            .collect();
        Self::new(pooling, layers)
    }

    /// All-zero weights: a constant encoder.
    pub fn zeros(dims: &[usize], pooling: Pooling) -> Result<Self> {
        let layers = dims
            .windows(2)
            .map(|d| Layer::affine(d[0], d[1], vec![0.0; d[0] * d[1]], vec![0.0; d[1]]))
            .collect();
        Self::new(pooling, layers)
    }
}

/// Inference-ready form of [`EncoderWeights`] (f64 matrices, folded affine).
#[derive(Debug, Clone)]
pub struct MlpEncoder {
    weights: EncoderWeights,
    // Per layer: scale ⊙ W, and scale ⊙ b + shift.
    matrices: Vec<DMatrix<f64>>,
    offsets: Vec<DVector<f64>>,
}

impl MlpEncoder {
    pub fn new(weights: EncoderWeights) -> Result<Self> {
        weights.validate()?;
        let mut matrices = Vec::with_capacity(weights.layers.len());
        let mut offsets = Vec::with_capacity(weights.layers.len());
        for l in &weights.layers {
            let mut m = DMatrix::from_row_slice(
                l.out_dim,
                l.in_dim,
                &l.weight.iter().map(|&x| f64::from(x)).collect::<Vec<_>>(),
            );
            let mut off = DVector::zeros(l.out_dim);
            for r in 0..l.out_dim {
                let s = f64::from(l.scale[r]);
                m.row_mut(r).scale_mut(s);
                off[r] = s * f64::from(l.bias[r]) + f64::from(l.shift[r]);
            }
            matrices.push(m);
            offsets.push(off);
        }
        Ok(MlpEncoder {
            weights,
            matrices,
            offsets,
        })
    }

    pub fn weights(&self) -> &EncoderWeights {
        &self.weights
    }

    pub fn pooling(&self) -> Pooling {
        self.weights.pooling
    }

    /// Per-point activations of the final layer, channels × points.
    fn activations(&self, cloud: &PointCloud, indices: Option<&[usize]>) -> DMatrix<f64> {
        let n = indices.map_or(cloud.len(), <[usize]>::len);
        let pts = cloud.points();
        let mut x = DMatrix::from_fn(3, n, |r, c| {
            let i = indices.map_or(c, |idx| idx[c]);
            pts[i][r]
        });
        let last = self.matrices.len() - 1;
        for (li, (m, off)) in self.matrices.iter().zip(&self.offsets).enumerate() {
            let mut y = m * &x;
            for mut col in y.column_iter_mut() {
                col += off;
                if li != last {
                    col.apply(|v| *v = v.max(0.0));
                }
            }
            x = y;
        }
        x
    }
}

impl Encoder for MlpEncoder {
    fn feature_dim(&self) -> usize {
        self.weights.output_dim()
    }

    fn encode_masked(&self, cloud: &PointCloud, mask: Option<&VisibilityMask>) -> Result<FeatureVector> {
        if cloud.is_empty() {
            return Err(Error::InvalidArgument("cannot encode an empty cloud".into()));
        }
        let indices = kept_indices(cloud, mask)?;
        let act = self.activations(cloud, indices.as_deref());
        let k = act.nrows();
        let n = act.ncols();
        let out = match self.weights.pooling {
            Pooling::Max => DVector::from_fn(k, |r, _| act.row(r).iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            Pooling::Avg => {
                let mut sum = DVector::zeros(k);
                for col in act.column_iter() {
                    sum += col;
                }
                sum / n as f64
            }
        };
        Ok(out)
    }
}

/// Number of features produced by [`MomentEncoder`].
pub const MOMENT_DIM: usize = 12;

/// Centroid followed by the row-major raw second moment `E[p pᵀ]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentEncoder;

impl Encoder for MomentEncoder {
    fn feature_dim(&self) -> usize {
        MOMENT_DIM
    }

    fn encode_masked(&self, cloud: &PointCloud, mask: Option<&VisibilityMask>) -> Result<FeatureVector> {
        if cloud.is_empty() {
            return Err(Error::InvalidArgument("cannot encode an empty cloud".into()));
        }
        let indices = kept_indices(cloud, mask)?;
        let pts = cloud.points();
        let mut mean = nalgebra::Vector3::zeros();
        let mut second = Matrix3::zeros();
        let mut count = 0usize;
        let mut add = |p: &nalgebra::Vector3<f64>| {
            mean += p;
            second += p * p.transpose();
            count += 1;
        };
        match &indices {
            Some(idx) => idx.iter().for_each(|&i| add(&pts[i])),
            None => pts.iter().for_each(add),
        }
        let n = count as f64;
        Ok(moment_feature(&(mean / n), &(second / n)))
    }
}

fn moment_feature(mean: &nalgebra::Vector3<f64>, second: &Matrix3<f64>) -> FeatureVector {
    let mut f = DVector::zeros(MOMENT_DIM);
    f.rows_mut(0, 3).copy_from(mean);
    for r in 0..3 {
        for c in 0..3 {
            f[3 + 3 * r + c] = second[(r, c)];
        }
    }
    f
}

/// Exact `∂/∂ξ encode_moments(exp(−Σ ξᵢTᵢ)·P)` at ξ = 0, a 12×6 matrix.
///
/// Under the infinitesimal motion `p ↦ p − ω×p − v`, the centroid moves by
/// `[μ]ₓ ω − v`, and `M = E[ppᵀ]` moves by `−[ω]ₓM + M[ω]ₓ − (vμᵀ + μvᵀ)`.
pub fn moment_jacobian_analytic(cloud: &PointCloud) -> SMatrix<f64, 12, 6> {
    let feat = MomentEncoder
        .encode(cloud)
        .expect("PointCloud is nonempty by construction");
    let mean = nalgebra::Vector3::new(feat[0], feat[1], feat[2]);
    let m = Matrix3::from_row_slice(&feat.as_slice()[3..]);
    let mut j = SMatrix::<f64, 12, 6>::zeros();
    for k in 0..3 {
        let e = nalgebra::Vector3::ith(k, 1.0);
        let dmean_w = mean.cross(&e);
        let ek = skew(&e);
        let dm_w = -ek * m + m * ek;
        let dm_v = -(e * mean.transpose() + mean * e.transpose());
        for r in 0..3 {
            j[(r, k)] = dmean_w[r];
            j[(r, k + 3)] = -e[r];
            for c in 0..3 {
                j[(3 + 3 * r + c, k)] = dm_w[(r, c)];
                j[(3 + 3 * r + c, k + 3)] = dm_v[(r, c)];
            }
        }
    }
    j
}
