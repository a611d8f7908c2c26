//! Triangle meshes: OFF parsing and area-weighted surface sampling.

use std::path::Path;

use rand::Rng as _;

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidArgument(format!(
                "face {f:?} references a vertex beyond {n}"
            )));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Serializes to standard OFF.
    pub fn to_off_string(&self) -> String {
        let mut s = format!("OFF\n{} {} 0\n", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
        }
        for f in &self.faces {
            s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        s
    }
}

/// Reads an OFF mesh from disk.
pub fn load_off(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text)
}

/// Parses OFF text. Accepts the standard header and the ModelNet variant
/// where the counts follow "OFF" on the same line (`OFF490 976 0`).
/// Polygons with more than three vertices are fan-triangulated.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(header_line, "missing OFF header"))?
        .trim();

    let (counts_line, counts_text) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| Error::parse(header_line, "missing element counts"))?
    } else {
        (header_line, rest)
    };
    let counts: Vec<usize> = counts_text
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::parse(counts_line, format!("bad count '{t}': {e}")))
        })
        .collect::<Result<_>>()?;
    if counts.len() != 3 {
        return Err(Error::parse(
            counts_line,
            format!("expected 3 counts, found {}", counts.len()),
        ));
    }
    let (n_vertices, n_faces) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse(counts_line, "file ended before all vertices"))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(Error::parse(
                ln,
                format!("vertex needs 3 coordinates, found {}", vals.len()),
            ));
        }
        let mut xyz = [0.0; 3];
        for (slot, t) in xyz.iter_mut().zip(&vals) {
            *slot = t
                .parse::<f64>()
                .map_err(|e| Error::parse(ln, format!("bad coordinate '{t}': {e}")))?;
            if !slot.is_finite() {
                return Err(Error::parse(ln, "non-finite coordinate"));
            }
        }
        vertices.push(Point::from(xyz));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::parse(counts_line, "file ended before all faces"))?;
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::parse(ln, format!("bad face entry '{t}': {e}")))
            })
            .collect::<Result<_>>()?;
        let (&k, idx) = vals.split_first().ok_or_else(|| Error::parse(ln, "empty face"))?;
        if k < 3 || idx.len() != k {
            return Err(Error::parse(
                ln,
                format!("face declares {k} vertices but lists {}", idx.len()),
            ));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n_vertices) {
            return Err(Error::parse(
                ln,
                format!("face index {bad} out of range (vertex count {n_vertices})"),
            ));
        }
        for j in 1..k - 1 {
            faces.push([idx[0], idx[j], idx[j + 1]]);
        }
    }

    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln, "unexpected trailing content"));
    }
    Ok(TriangleMesh { vertices, faces })
}

/// Draws `n` points uniformly over the mesh surface: faces by area, then
/// uniform barycentric coordinates inside the face.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh);
    }

    let mut rng = rng::seeded(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        // First face whose cumulative area exceeds the target; zero-area faces never win.
        let face = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let [a, b, c] = mesh.faces[face].map(|i| mesh.vertices[i]);
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        points.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    Ok(PointCloud::from_points_unchecked(points))
}
