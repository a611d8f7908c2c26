//! Point clouds and the plain-text XYZ interchange format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::se3::RigidTransform;

pub type Point = Vector3<f64>;

/// An ordered, nonempty list of finite 3D points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidArgument(format!("point {i} is not finite")));
        }
        Ok(PointCloud { points })
    }

    /// Flat `[x0, y0, z0, x1, ...]` input.
    pub fn from_flat(xyz: &[f64]) -> Result<Self> {
        if !xyz.len().is_multiple_of(3) {
            return Err(Error::DimensionMismatch(format!(
                "flat coordinate buffer length {} is not a multiple of 3",
                xyz.len()
            )));
        }
        Self::new(xyz.chunks_exact(3).map(|c| Point::new(c[0], c[1], c[2])).collect())
    }

    pub(crate) fn from_points_unchecked(points: Vec<Point>) -> Self {
        debug_assert!(!points.is_empty());
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn centroid(&self) -> Point {
        let sum = self.points.iter().fold(Point::zeros(), |acc, p| acc + p);
        sum / self.points.len() as f64
    }

    pub fn transformed(&self, g: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| g.apply(p)).collect(),
        }
    }

    pub fn translated(&self, offset: &Point) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| p + offset).collect(),
        }
    }

    /// Points at the given indices, in index order.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        let pts: Vec<Point> = indices
            .iter()
            .map(|&i| {
                self.points
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        PointCloud::new(pts)
    }

    /// Parses the XYZ text format: one `x y z` triple per line. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse_xyz(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    idx + 1,
                    format!("expected 3 coordinates, found {}", fields.len()),
                ));
            }
            let mut xyz = [0.0; 3];
            for (slot, f) in xyz.iter_mut().zip(&fields) {
                *slot = f
                    .parse::<f64>()
                    .map_err(|e| Error::parse(idx + 1, format!("bad coordinate '{f}': {e}")))?;
                if !slot.is_finite() {
                    return Err(Error::parse(idx + 1, "non-finite coordinate"));
                }
            }
            points.push(Point::from(xyz));
        }
        if points.is_empty() {
            return Err(Error::parse(0, "no points in XYZ input"));
        }
        Ok(PointCloud { points })
    }

    pub fn load_xyz(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_xyz(&text)
    }

    /// Shortest round-trip decimal representation, so re-reading is exact.
    pub fn to_xyz_string(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 48);
        for p in &self.points {
            let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
        }
        out
    }

    pub fn save_xyz(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_xyz_string()).map_err(|e| Error::io(path, e))
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_round_trip_is_exact() {
        let cloud = PointCloud::new(vec![
            Point::new(0.1, -2.5e-7, 3.0),
            Point::new(1.0 / 3.0, 2.0f64.sqrt(), -0.0),
        ])
        .unwrap();
        let back = PointCloud::parse_xyz(&cloud.to_xyz_string()).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn xyz_rejects_bad_lines() {
        let err = PointCloud::parse_xyz("0 0 0\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(PointCloud::parse_xyz("0 0 x\n").is_err());
        assert!(PointCloud::parse_xyz("# only a comment\n").is_err());
        assert!(PointCloud::parse_xyz("nan 0 0\n").is_err());
    }

    #[test]
    fn empty_and_non_finite_rejected() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![Point::new(f64::INFINITY, 0.0, 0.0)]).is_err());
        assert!(PointCloud::from_flat(&[1.0, 2.0]).is_err());
    }
}
