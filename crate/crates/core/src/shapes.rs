//! Procedural meshes used as fixtures by tests, the CLI and the acceptance suite.

use crate::cloud::{Point, PointCloud};
use crate::harness::normalize_unit_box;
use crate::mesh::{sample_surface, TriangleMesh};

/// Axis-aligned box `[lo, hi]` as 12 outward-facing triangles.
pub fn cuboid(lo: Point, hi: Point) -> TriangleMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point::new(
            if x { hi.x } else { lo.x },
            if y { hi.y } else { lo.y },
            if z { hi.z } else { lo.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [0, 4, 7],
        [0, 7, 3],
    ];
    TriangleMesh::new(vertices, faces).expect("cuboid indices are in range")
}

/// Concatenates meshes.
pub fn merge(parts: &[TriangleMesh]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for part in parts {
        let base = vertices.len();
        vertices.extend_from_slice(part.vertices());
        faces.extend(part.faces().iter().map(|f| f.map(|i| i + base)));
    }
    TriangleMesh::new(vertices, faces).expect("merged indices are in range")
}

/// A slab with an off-corner post and a side fin: no rotational or mirror
/// symmetry and well-separated second-moment eigenvalues.
pub fn asymmetric_mesh() -> TriangleMesh {
    merge(&[
        cuboid(Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.5, 0.1)),
        cuboid(Point::new(0.75, 0.05, 0.1), Point::new(0.95, 0.2, 1.2)),
        cuboid(Point::new(0.0, 0.5, 0.0), Point::new(0.35, 0.65, 0.45)),
    ])
}

/// A box symmetric under reflection in its x and y mid-planes.
pub fn symmetric_mesh() -> TriangleMesh {
    cuboid(Point::new(-0.5, -0.3, -0.1), Point::new(0.5, 0.3, 0.1))
}

/// `n` surface samples of [`asymmetric_mesh`], normalized into the unit box.
pub fn asymmetric_cloud(n: usize, seed: u64) -> PointCloud {
    let raw = sample_surface(&asymmetric_mesh(), n, seed).expect("fixture mesh has area");
    normalize_unit_box(&raw).expect("fixture cloud has extent")
}
