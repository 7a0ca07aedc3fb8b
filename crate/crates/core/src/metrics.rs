//! Evaluation metrics and the four benchmark protocols.
//!
//! | protocol     | scaling                          | F1 radii        | alignment |
//! |--------------|----------------------------------|-----------------|-----------|
//! | `pixel2mesh` | coordinates x 0.57               | 0.1, 0.2        | none      |
//! | `meshrcnn`   | longest bounding-box edge = 10   | 0.1, 0.3, 0.5   | none      |
//! | `tmnet`      | none                             | 0.1, 0.2        | ICP       |
//! | `skeleton`   | none                             | 0.1, 0.2        | none      |
//!
//! F1 scores are percentages. Chamfer values are the symmetric mean of
//! squared nearest distances, as in the training loss.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{chamfer, Matching};
use crate::mesh::{bounding_box, Mesh, Point3, PointCloud, Vec3};
use crate::sampling::sample_surface;
use crate::spatial::NearestIndex;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn fraction_within(from: &[Point3], to: &NearestIndex<'_>, r: f64) -> f64 {
    let hits = to.nearest_all(from).iter().filter(|&&(_, d)| d <= r * r).count();
    100.0 * hits as f64 / from.len() as f64
}

/// Precision is the share of `p` within `r` of some point of `q`, recall
/// the share of `q` within `r` of `p`; all three values are percentages.
pub fn f1_score(p: &PointCloud, q: &PointCloud, r: f64) -> Result<F1> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(r > 0.0) {
        return Err(Error::Config(format!("F1 radius must be positive, got {r}")));
    }
    let precision = fraction_within(p.points(), &NearestIndex::new(q.points()), r);
    let recall = fraction_within(q.points(), &NearestIndex::new(p.points()), r);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(F1 { precision, recall, f1 })
}

/// Average over both matching directions of `|cos|` between each point's
/// normal and its nearest neighbor's normal.
pub fn normal_cosine(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let np = p.normals().ok_or(Error::MissingNormals)?;
    let nq = q.normals().ok_or(Error::MissingNormals)?;
    let m = Matching::new(p.points(), q.points())?;
    let a: f64 = np.iter().zip(&m.pq).map(|(n, &(j, _))| n.dot(&nq[j]).abs()).sum();
    let b: f64 = nq.iter().zip(&m.qp).map(|(n, &(i, _))| n.dot(&np[i]).abs()).sum();
    Ok(0.5 * (a / np.len() as f64 + b / nq.len() as f64))
}

/// `x -> rotation * x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_all(&self, pts: &[Point3]) -> Vec<Point3> {
        pts.iter().map(|p| self.apply(p)).collect()
    }

    /// Rotates normals; translation does not affect them.
    pub fn apply_cloud(&self, c: &PointCloud) -> PointCloud {
        let points = self.apply_all(c.points());
        let normals = c
            .normals()
            .map(|n| n.iter().map(|v| (self.rotation * v).normalize()).collect());
        PointCloud::from_parts_unchecked(points, normals)
    }

    /// Angle in radians of the relative rotation between `self` and `other`.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        Rotation3::from_matrix(&rel).angle()
    }

    /// Whether `R^T R = I` within `tol` and `det R > 0`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let e = self.rotation.transpose() * self.rotation - Matrix3::identity();
        e.iter().all(|x| x.abs() <= tol) && self.rotation.determinant() > 0.0
    }
}

/// Least-squares rigid motion taking `src[i]` to `dst[i]` (Kabsch).
pub fn best_rigid_transform(src: &[Point3], dst: &[Point3]) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least 3 paired points, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len() as f64;
    let cs: Vec3 = src.iter().map(|p| p.coords).sum::<Vec3>() / n;
    let cd: Vec3 = dst.iter().map(|p| p.coords).sum::<Vec3>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s.coords - cs) * (d.coords - cd).transpose();
    }
    let svd = h.svd(true, true);
    let mut sv = svd.singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(sv[1] > 1e-12 * sv[0]) {
        return Err(Error::DegenerateConfiguration(
            "cross-covariance has rank below 2".into(),
        ));
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let rotation = v * fix * u.transpose();
    let translation = cd - rotation * cs;
    Ok(RigidTransform { rotation, translation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps `p` onto `q`.
    pub transform: RigidTransform,
    /// Chamfer distance between the aligned `p` and `q`.
    pub chamfer: f64,
    /// Mean squared nearest distance from aligned `p` to `q`, starting with
    /// the identity; non-increasing.
    pub mse_history: Vec<f64>,
}

/// Iterative closest point from the identity. A step is kept only if it
/// does not increase the mean squared error; iteration stops when the
/// improvement drops below `tol` or after `max_iters` steps.
pub fn icp_align(p: &PointCloud, q: &PointCloud, max_iters: usize, tol: f64) -> Result<IcpResult> {
    if p.len() < 3 || q.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!(
            "ICP needs at least 3 points per cloud, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    let src = p.points();
    let q_index = NearestIndex::new(q.points());
    let mse_of = |t: &RigidTransform| -> (f64, Vec<Point3>) {
        let moved = t.apply_all(src);
        let nn = q_index.nearest_all(&moved);
        let mse = nn.iter().map(|&(_, d)| d).sum::<f64>() / nn.len() as f64;
        (mse, nn.iter().map(|&(j, _)| q.points()[j]).collect())
    };
    let mut transform = RigidTransform::identity();
    let (mut mse, mut targets) = mse_of(&transform);
    let mut mse_history = vec![mse];
    for _ in 0..max_iters {
        let candidate = best_rigid_transform(src, &targets)?;
        let (next, next_targets) = mse_of(&candidate);
        if !(next <= mse) {
            break;
        }
        let gain = mse - next;
        transform = candidate;
        mse = next;
        targets = next_targets;
        mse_history.push(mse);
        if gain < tol {
            break;
        }
    }
    let aligned = transform.apply_cloud(p);
    Ok(IcpResult {
        transform,
        chamfer: chamfer(&aligned, q)?,
        mse_history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Pixel2mesh,
    Meshrcnn,
    Tmnet,
    Skeleton,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Pixel2mesh,
        Protocol::Meshrcnn,
        Protocol::Tmnet,
        Protocol::Skeleton,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Pixel2mesh => "pixel2mesh",
            Protocol::Meshrcnn => "meshrcnn",
            Protocol::Tmnet => "tmnet",
            Protocol::Skeleton => "skeleton",
        }
    }

    pub fn f1_radii(&self) -> &'static [f64] {
        match self {
            Protocol::Meshrcnn => &[0.1, 0.3, 0.5],
            _ => &[0.1, 0.2],
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownProtocol(s.to_string()))
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const PIXEL2MESH_SCALE: f64 = 0.57;
pub const MESHRCNN_EXTENT: f64 = 10.0;

/// Rescales a mesh as the protocol prescribes (about the origin).
pub fn apply_protocol_scaling(mesh: &Mesh, protocol: Protocol) -> Result<Mesh> {
    if mesh.vertices().is_empty() {
        return Err(Error::EmptyMesh("nothing to scale".into()));
    }
    match protocol {
        Protocol::Pixel2mesh => mesh.map_vertices(|p| p * PIXEL2MESH_SCALE),
        Protocol::Meshrcnn => {
            let (lo, hi) = bounding_box(mesh.vertices()).expect("non-empty");
            let longest = (hi - lo).max();
            if longest == MESHRCNN_EXTENT {
                return Ok(mesh.clone());
            }
            if !(longest > 0.0) {
                return Err(Error::DegenerateConfiguration("bounding box has zero extent".into()));
            }
            let s = MESHRCNN_EXTENT / longest;
            mesh.map_vertices(|p| p * s)
        }
        Protocol::Tmnet | Protocol::Skeleton => Ok(mesh.clone()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub protocol: Protocol,
    pub chamfer: f64,
    /// F1 percentage per radius; keys are radii in shortest decimal form.
    pub f1: BTreeMap<String, f64>,
    pub normal_cosine: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub icp: Option<RigidTransform>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_class: Option<BTreeMap<String, f64>>,
}

/// Scales both meshes, samples `n_samples` points from each with the same
/// `seed`, aligns by ICP under `tmnet`, then computes every metric.
pub fn evaluate(pred: &Mesh, gt: &Mesh, protocol: Protocol, n_samples: usize, seed: u64) -> Result<EvalReport> {
    let pred = apply_protocol_scaling(pred, protocol)?;
    let gt = apply_protocol_scaling(gt, protocol)?;
    let mut p = sample_surface(&pred, n_samples, seed)?;
    let q = sample_surface(&gt, n_samples, seed)?;
    let mut icp = None;
    if protocol == Protocol::Tmnet {
        let r = icp_align(&p, &q, 50, 1e-12)?;
        p = r.transform.apply_cloud(&p);
        icp = Some(r.transform);
    }
    let mut f1 = BTreeMap::new();
    for &r in protocol.f1_radii() {
        f1.insert(format!("{r}"), f1_score(&p, &q, r)?.f1);
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        protocol,
        chamfer: chamfer(&p, &q)?,
        f1,
        normal_cosine: normal_cosine(&p, &q)?,
        icp,
        per_class: None,
    })
}

/// Evaluates labelled pairs; the summary averages every metric over
/// instances and `per_class` holds the mean chamfer of each label.
pub fn evaluate_classes(
    items: &[(String, Mesh, Mesh)],
    protocol: Protocol,
    n_samples: usize,
    seed: u64,
) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::Config("no instances to evaluate".into()));
    }
    let reports: Vec<EvalReport> = items
        .par_iter()
        .map(|(_, p, g)| evaluate(p, g, protocol, n_samples, seed))
        .collect::<Result<_>>()?;
    let n = reports.len() as f64;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for ((label, _, _), r) in items.iter().zip(&reports) {
        let e = sums.entry(label.clone()).or_insert((0.0, 0));
        e.0 += r.chamfer;
        e.1 += 1;
    }
    let mut f1 = BTreeMap::new();
    for key in reports[0].f1.keys() {
        f1.insert(key.clone(), reports.iter().map(|r| r.f1[key]).sum::<f64>() / n);
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        protocol,
        chamfer: reports.iter().map(|r| r.chamfer).sum::<f64>() / n,
        f1,
        normal_cosine: reports.iter().map(|r| r.normal_cosine).sum::<f64>() / n,
        icp: None,
        per_class: Some(sums.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()),
    })
}
