//! Area-uniform random points on a triangle mesh.
//!
//! A face is drawn with probability proportional to its area by binary
//! search over cumulative areas, then a point inside it by
//! `P = (1 - sqrt(r1)) A + sqrt(r1) (1 - r2) B + sqrt(r1) r2 C`.
//! Every sample consumes exactly three draws `r0, r1, r2` from a ChaCha8
//! stream seeded with the caller's seed, so output depends only on
//! `(mesh, n, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point3, PointCloud, Vec3, DEGENERATE_AREA};

/// Sample count used for rewards.
pub const REWARD_SAMPLES: usize = 3000;
/// Sample count used for evaluation metrics.
pub const METRIC_SAMPLES: usize = 10_000;

/// Samples with the face and barycentric weights that produced each point.
///
/// `cloud.points()[i] == bary[i][0] * A + bary[i][1] * B + bary[i][2] * C`
/// for face `faces[i] = (A, B, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSamples {
    pub cloud: PointCloud,
    pub faces: Vec<usize>,
    pub bary: Vec<[f64; 3]>,
}

impl SurfaceSamples {
    /// The same faces and barycentric weights evaluated on `mesh`, which
    /// must share the connectivity of the mesh these samples came from.
    pub fn reposition(&self, mesh: &Mesh) -> Result<SurfaceSamples> {
        let mut normals: Vec<Option<Vec3>> = vec![None; mesh.faces().len()];
        let mut points = Vec::with_capacity(self.faces.len());
        let mut point_normals = Vec::with_capacity(self.faces.len());
        for (&f, w) in self.faces.iter().zip(&self.bary) {
            let [a, b, c] = mesh.triangle(f);
            points.push(Point3::from(a.coords * w[0] + b.coords * w[1] + c.coords * w[2]));
            let normal = match normals[f] {
                Some(n) => n,
                None => {
                    let cross = mesh.face_cross(f);
                    let len = cross.norm();
                    if !(len > 0.0) {
                        return Err(Error::DegenerateFace(f));
                    }
                    *normals[f].insert(cross / len)
                }
            };
            point_normals.push(normal);
        }
        Ok(SurfaceSamples {
            cloud: PointCloud::from_parts_unchecked(points, Some(point_normals)),
            faces: self.faces.clone(),
            bary: self.bary.clone(),
        })
    }
}

pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud> {
    sample_surface_traced(mesh, n, seed).map(|s| s.cloud)
}

pub fn sample_surface_traced(mesh: &Mesh, n: usize, seed: u64) -> Result<SurfaceSamples> {
    let mut cumulative = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for f in 0..mesh.faces().len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total >= DEGENERATE_AREA) {
        return Err(Error::NoSurface);
    }
    let mut normals: Vec<Option<Vec3>> = vec![None; mesh.faces().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut point_normals = Vec::with_capacity(n);
    let mut faces = Vec::with_capacity(n);
    let mut bary = Vec::with_capacity(n);
    let last = cumulative.len() - 1;
    for _ in 0..n {
        let r0: f64 = rng.gen();
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let target = r0 * total;
        let f = cumulative.partition_point(|&c| c <= target).min(last);
        let s = r1.sqrt();
        let w = [1.0 - s, s * (1.0 - r2), s * r2];
        let [a, b, c] = mesh.triangle(f);
        points.push(Point3::from(a.coords * w[0] + b.coords * w[1] + c.coords * w[2]));
        let normal = *normals[f].get_or_insert_with(|| {
            let cross = mesh.face_cross(f);
            cross / cross.norm()
        });
        point_normals.push(normal);
        faces.push(f);
        bary.push(w);
    }
    Ok(SurfaceSamples {
        cloud: PointCloud::from_parts_unchecked(points, Some(point_normals)),
        faces,
        bary,
    })
}
