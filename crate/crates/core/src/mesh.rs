//! Geometric value types and topology diagnostics shared by every module.
//!
//! Faces are wound counter-clockwise when viewed from outside, so
//! `(b - a) x (c - a)` points away from the enclosed volume. Edges are
//! identified by their unordered vertex-index pair; coincident vertices are
//! never merged implicitly.

use std::collections::HashSet;

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Squared-area threshold below which a face has no usable normal.
pub const DEGENERATE_AREA: f64 = 1e-12;

const NORMAL_TOLERANCE: f64 = 1e-9;

/// Ordered points with optional per-point unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        check_finite_points(&points).map_err(Error::InvalidCloud)?;
        Ok(Self { points, normals: None })
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<Vec3>) -> Result<Self> {
        check_finite_points(&points).map_err(Error::InvalidCloud)?;
        if normals.len() != points.len() {
            return Err(Error::InvalidCloud(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        for (i, n) in normals.iter().enumerate() {
            if !n.iter().all(|c| c.is_finite()) || (n.norm() - 1.0).abs() > NORMAL_TOLERANCE {
                return Err(Error::InvalidCloud(format!("normal {i} is not unit length")));
            }
        }
        Ok(Self {
            points,
            normals: Some(normals),
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Drops normals, keeping positions.
    pub fn without_normals(&self) -> Self {
        Self {
            points: self.points.clone(),
            normals: None,
        }
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Point3>, normals: Option<Vec<Vec3>>) -> Self {
        Self { points, normals }
    }

    pub fn into_parts(self) -> (Vec<Point3>, Option<Vec<Vec3>>) {
        (self.points, self.normals)
    }
}

fn check_finite_points(points: &[Point3]) -> std::result::Result<(), String> {
    match points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        Some(i) => Err(format!("point {i} has a non-finite coordinate")),
        None => Ok(()),
    }
}

/// Oriented triangle given by three vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriangleFace(pub [usize; 3]);

impl TriangleFace {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        Self([a, b, c])
    }

    pub fn a(&self) -> usize {
        self.0[0]
    }

    pub fn b(&self) -> usize {
        self.0[1]
    }

    pub fn c(&self) -> usize {
        self.0[2]
    }

    /// The three directed edges `(a,b), (b,c), (c,a)`.
    pub fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.0;
        [(a, b), (b, c), (c, a)]
    }

    /// Index triple sorted ascending; identifies the face regardless of winding.
    pub fn sorted(&self) -> [usize; 3] {
        let mut k = self.0;
        k.sort_unstable();
        k
    }

    pub fn flipped(&self) -> Self {
        let [a, b, c] = self.0;
        Self([a, c, b])
    }
}

/// Unordered edge key with the smaller index first.
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    vertices: Vec<Point3>,
    faces: Vec<TriangleFace>,
}

impl Mesh {
    /// Builds a mesh after checking index bounds, distinct corners, duplicate
    /// faces and finite coordinates. Zero-area faces are allowed here; see
    /// [`Mesh::degenerate_faces`].
    pub fn new(vertices: Vec<Point3>, faces: Vec<TriangleFace>) -> Result<Self> {
        check_finite_points(&vertices).map_err(Error::InvalidMesh)?;
        let n = vertices.len();
        let mut seen = HashSet::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            let [a, b, c] = f.0;
            if a >= n || b >= n || c >= n {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references a vertex out of range ({n} vertices)"
                )));
            }
            if a == b || b == c || a == c {
                return Err(Error::InvalidMesh(format!("face {i} repeats a vertex")));
            }
            if !seen.insert(f.sorted()) {
                return Err(Error::InvalidMesh(format!("face {i} duplicates an earlier face")));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Point3>, faces: Vec<TriangleFace>) -> Self {
        Self { vertices, faces }
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[TriangleFace] {
        &self.faces
    }

    pub fn into_parts(self) -> (Vec<Point3>, Vec<TriangleFace>) {
        (self.vertices, self.faces)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.faces.is_empty()
    }

    /// Same connectivity, new vertex positions.
    pub fn with_positions(&self, vertices: Vec<Point3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::VertexCountMismatch {
                left: self.vertices.len(),
                right: vertices.len(),
            });
        }
        check_finite_points(&vertices).map_err(Error::InvalidMesh)?;
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
        })
    }

    /// Applies `f` to every vertex, keeping connectivity.
    pub fn map_vertices(&self, f: impl Fn(&Point3) -> Point3) -> Result<Self> {
        self.with_positions(self.vertices.iter().map(f).collect())
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[face].0;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized `(b - a) x (c - a)`; its norm is twice the face area.
    pub fn face_cross(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Faces whose squared area falls below [`DEGENERATE_AREA`].
    pub fn degenerate_faces(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.face_area(f).powi(2) < DEGENERATE_AREA)
            .collect()
    }

    /// Sorted list of unique unordered edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .faces
            .iter()
            .flat_map(|f| f.edges().map(|(a, b)| edge_key(a, b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// `(edge, faces)` for every unique edge, sorted by edge.
    pub fn edge_faces(&self) -> Vec<((usize, usize), Vec<usize>)> {
        let mut incidences: Vec<((usize, usize), usize)> = self
            .faces
            .iter()
            .enumerate()
            .flat_map(|(i, f)| f.edges().map(move |(a, b)| (edge_key(a, b), i)))
            .collect();
        incidences.sort_unstable();
        let mut out: Vec<((usize, usize), Vec<usize>)> = Vec::new();
        for (e, f) in incidences {
            match out.last_mut() {
                Some((last, faces)) if *last == e => faces.push(f),
                _ => out.push((e, vec![f])),
            }
        }
        out
    }

    /// Number of faces incident to each vertex.
    pub fn vertex_valence(&self) -> Vec<usize> {
        let mut count = vec![0; self.vertices.len()];
        for f in &self.faces {
            for &v in &f.0 {
                count[v] += 1;
            }
        }
        count
    }

    /// Sorted neighbor lists (vertices sharing an edge).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        for n in &mut nbrs {
            n.sort_unstable();
        }
        nbrs
    }

    /// Signed enclosed volume by the divergence theorem; positive for a closed
    /// outward-oriented surface.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.0;
                let (a, b, c) = (
                    self.vertices[a].coords,
                    self.vertices[b].coords,
                    self.vertices[c].coords,
                );
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Axis-aligned bounding box of the vertices, `None` when there are none.
    pub fn bounding_box(&self) -> Option<(Point3, Point3)> {
        bounding_box(&self.vertices)
    }
}

pub fn bounding_box(points: &[Point3]) -> Option<(Point3, Point3)> {
    let first = points.first()?;
    let mut lo = *first;
    let mut hi = *first;
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

/// `V - E + F`, with `E` the number of unique unordered edges.
pub fn euler_characteristic(mesh: &Mesh) -> i64 {
    mesh.vertices.len() as i64 - mesh.edges().len() as i64 + mesh.faces.len() as i64
}

/// Edges incident to exactly one face. Empty iff the mesh is closed.
pub fn boundary_edges(mesh: &Mesh) -> Vec<(usize, usize)> {
    mesh.edge_faces()
        .into_iter()
        .filter(|(_, faces)| faces.len() == 1)
        .map(|(e, _)| e)
        .collect()
}

/// Edges incident to more than two faces.
pub fn nonmanifold_edges(mesh: &Mesh) -> Vec<(usize, usize)> {
    mesh.edge_faces()
        .into_iter()
        .filter(|(_, faces)| faces.len() > 2)
        .map(|(e, _)| e)
        .collect()
}

/// Unit normal of every face.
pub fn face_normals(mesh: &Mesh) -> Result<Vec<Vec3>> {
    (0..mesh.faces.len())
        .map(|f| {
            let cross = mesh.face_cross(f);
            let area = 0.5 * cross.norm();
            if area * area < DEGENERATE_AREA {
                Err(Error::DegenerateFace(f))
            } else {
                Ok(cross / cross.norm())
            }
        })
        .collect()
}
