//! Alpha-shape triangulation: keep Delaunay tetrahedra whose circumradius is
//! at most `tau` and return the boundary of their union.
//!
//! A face belongs to the boundary when exactly one kept tetrahedron uses it;
//! faces shared by two kept tetrahedra are interior walls and are dropped.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::delaunay::predicates::orient3d;
use crate::delaunay::{delaunay_complex, DelaunayComplex, Tetrahedron, OPPOSITE_FACE};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, PointCloud, TriangleFace};

/// Thresholds of the "smooth" configuration.
pub const SMOOTH_ACTIONS: [f64; 3] = [0.05, 0.085, 0.11];

/// Thresholds of the "pretty" configuration, `0.15 + i/50` for
/// `i = -12..=11`. Values that are not positive are left out, so 19 of the
/// 24 nominal actions remain.
pub fn pretty_actions() -> Vec<f64> {
    (-12..=11)
        .map(|i| 0.15 + f64::from(i) / 50.0)
        .filter(|&t| t > 0.0)
        .collect()
}

/// Tetrahedra with `circumradius <= tau`, in their original order.
pub fn filter_tetrahedra(complex: &DelaunayComplex, tau: f64) -> Vec<Tetrahedron> {
    complex
        .tetrahedra
        .iter()
        .filter(|t| t.circumradius <= tau)
        .cloned()
        .collect()
}

/// Boundary mesh together with the input index of every output vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub mesh: Mesh,
    /// `source[i]` is the index in the input cloud of mesh vertex `i`.
    pub source: Vec<usize>,
}

/// Faces used by exactly one tetrahedron, each wound so that its normal
/// points away from the tetrahedron's remaining vertex.
///
/// Faces keep the order of first appearance; vertices are renumbered in
/// order of first reference.
pub fn extract_boundary(tets: &[Tetrahedron], points: &PointCloud) -> Result<Surface> {
    if tets.is_empty() {
        return Err(Error::EmptySelection);
    }
    let p = points.points();
    let mut count: HashMap<[usize; 3], usize> = HashMap::with_capacity(tets.len() * 4);
    let mut oriented: Vec<([usize; 3], [usize; 3])> = Vec::with_capacity(tets.len() * 4);
    for t in tets {
        let mut v = t.vertices;
        if v.iter().any(|&i| i >= p.len()) {
            return Err(Error::InvalidMesh("tetrahedron index out of range".into()));
        }
        match orient3d(&p[v[0]], &p[v[1]], &p[v[2]], &p[v[3]]) {
            Ordering::Greater => {}
            Ordering::Less => v.swap(0, 1),
            Ordering::Equal => return Err(Error::DegenerateTetrahedron),
        }
        for face in OPPOSITE_FACE {
            let f = face.map(|k| v[k]);
            let mut key = f;
            key.sort_unstable();
            *count.entry(key).or_insert(0) += 1;
            oriented.push((key, f));
        }
    }
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut source = Vec::new();
    let mut faces = Vec::new();
    for (key, f) in oriented {
        if count[&key] != 1 {
            continue;
        }
        let g = f.map(|i| {
            *remap.entry(i).or_insert_with(|| {
                source.push(i);
                source.len() - 1
            })
        });
        faces.push(TriangleFace(g));
    }
    let vertices = source.iter().map(|&i| p[i]).collect();
    Ok(Surface {
        mesh: Mesh::new(vertices, faces)?,
        source,
    })
}

/// [`extract_boundary`] without the index map.
pub fn extract_boundary_faces(tets: &[Tetrahedron], points: &PointCloud) -> Result<Mesh> {
    extract_boundary(tets, points).map(|s| s.mesh)
}

/// Alpha-shape surface of an already built complex.
pub fn triangulate_complex(complex: &DelaunayComplex, tau: f64) -> Result<Surface> {
    let kept = filter_tetrahedra(complex, tau);
    if kept.is_empty() {
        return Err(Error::EmptyMesh(format!("no tetrahedron has circumradius <= {tau}")));
    }
    extract_boundary(&kept, &complex.points)
}

/// Delaunay complex, circumradius filter and boundary extraction in one call.
pub fn triangulate(points: &PointCloud, tau: f64) -> Result<Mesh> {
    triangulate_with_source(points, tau).map(|s| s.mesh)
}

pub fn triangulate_with_source(points: &PointCloud, tau: f64) -> Result<Surface> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let complex = delaunay_complex(points)?;
    triangulate_complex(&complex, tau)
}
