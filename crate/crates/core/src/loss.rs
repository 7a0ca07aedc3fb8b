//! Reconstruction losses and their analytic gradients.
//!
//! Point terms (Chamfer, log-Chamfer, normal loss) compare a cloud sampled
//! from the mesh with ground-truth samples; mesh terms (Laplacian
//! regularizer, edge length, normal consistency) depend on vertex positions
//! directly. Gradients treat nearest-neighbor assignments as fixed, which
//! makes them exact away from ties. Ties resolve to the lowest index.
//!
//! Sums over points are accumulated sequentially in index order, so values
//! do not depend on how many threads answered the neighbor queries.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point3, PointCloud, Vec3};
use crate::sampling::{sample_surface_traced, SurfaceSamples};
use crate::spatial::NearestIndex;

/// Cotangent weights are clamped to `[-COT_CLAMP, COT_CLAMP]`.
pub const COT_CLAMP: f64 = 50.0;

/// Weights of the combined loss:
/// `l1 logCMD + l2 CMD + l3 LR + l4 EL + l5 NC + l6 NL`.
///
/// `mu` offsets the squared distances inside the log-Chamfer term; `nu` is
/// the F1 radius used for rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub lambda5: f64,
    pub lambda6: f64,
    pub mu: f64,
    pub nu: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::smooth()
    }
}

impl LossWeights {
    pub fn smooth() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 0.5,
            lambda4: 0.15,
            lambda5: 1e-3,
            lambda6: 1e-4,
            mu: 1e-4,
            nu: 1e-4,
        }
    }

    pub fn pretty() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 0.0,
            lambda4: 0.2,
            lambda5: 0.0,
            lambda6: 0.0,
            mu: 1e-4,
            nu: 1e-4,
        }
    }

    /// All weights zero; `mu` and `nu` keep their defaults.
    pub fn zero() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            lambda5: 0.0,
            lambda6: 0.0,
            mu: 1e-4,
            nu: 1e-4,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "smooth" => Some(Self::smooth()),
            "pretty" => Some(Self::pretty()),
            _ => None,
        }
    }

    pub fn lambdas(&self) -> [f64; 6] {
        [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.lambda5,
            self.lambda6,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.lambdas().iter().enumerate() {
            if !(l.is_finite() && *l >= 0.0) {
                return Err(Error::Config(format!(
                    "lambda{} must be finite and >= 0, got {l}",
                    i + 1
                )));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        Ok(())
    }
}

/// Unweighted term values and their weighted total. Skipped terms are 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub logcmd: f64,
    pub cmd: f64,
    pub laplacian_reg: f64,
    pub edge_len: f64,
    pub normal_consistency: f64,
    pub normal_loss: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn terms(&self) -> [f64; 6] {
        [
            self.logcmd,
            self.cmd,
            self.laplacian_reg,
            self.edge_len,
            self.normal_consistency,
            self.normal_loss,
        ]
    }

    pub const TERM_NAMES: [&'static str; 6] = [
        "logcmd",
        "cmd",
        "laplacian_reg",
        "edge_len",
        "normal_consistency",
        "normal_loss",
    ];
}

/// Nearest neighbors in both directions: `pq[i]` is the index in `q`
/// nearest to `p[i]` with its squared distance, and symmetrically for `qp`.
#[derive(Debug, Clone)]
pub struct Matching {
    pub pq: Vec<(usize, f64)>,
    pub qp: Vec<(usize, f64)>,
}

impl Matching {
    pub fn new(p: &[Point3], q: &[Point3]) -> Result<Self> {
        if p.is_empty() || q.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let q_index = NearestIndex::new(q);
        Ok(Self::with_index(p, &q_index))
    }

    /// Reuses a prebuilt index over `q`.
    pub fn with_index(p: &[Point3], q_index: &NearestIndex<'_>) -> Self {
        let pq = q_index.nearest_all(p);
        let qp = NearestIndex::new(p).nearest_all(q_index.points());
        Self { pq, qp }
    }
}

fn check_clouds(p: &PointCloud, q: &PointCloud) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(())
}

fn chamfer_matched(m: &Matching) -> f64 {
    let a: f64 = m.pq.iter().map(|&(_, d)| d).sum();
    let b: f64 = m.qp.iter().map(|&(_, d)| d).sum();
    a / m.pq.len() as f64 + b / m.qp.len() as f64
}

fn chamfer_grad_matched(p: &[Point3], q: &[Point3], m: &Matching) -> Vec<Vec3> {
    let np = p.len() as f64;
    let nq = q.len() as f64;
    let mut g: Vec<Vec3> = p
        .iter()
        .zip(&m.pq)
        .map(|(pi, &(j, _))| (pi - q[j]) * (2.0 / np))
        .collect();
    for (qj, &(i, _)) in q.iter().zip(&m.qp) {
        g[i] += (p[i] - qj) * (2.0 / nq);
    }
    g
}

fn log_chamfer_matched(m: &Matching, mu: f64) -> f64 {
    let a: f64 = m.pq.iter().map(|&(_, d)| (d + mu).log10()).sum();
    let b: f64 = m.qp.iter().map(|&(_, d)| (d + mu).log10()).sum();
    a + b
}

fn log_chamfer_grad_matched(p: &[Point3], q: &[Point3], m: &Matching, mu: f64) -> Vec<Vec3> {
    let mut g: Vec<Vec3> = p
        .iter()
        .zip(&m.pq)
        .map(|(pi, &(j, d))| (pi - q[j]) * (2.0 / ((d + mu) * LN_10)))
        .collect();
    for (qj, &(i, d)) in q.iter().zip(&m.qp) {
        g[i] += (p[i] - qj) * (2.0 / ((d + mu) * LN_10));
    }
    g
}

/// Mean nearest squared distance from `p` to `q` plus the same from `q`
/// to `p`.
pub fn chamfer(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    check_clouds(p, q)?;
    Ok(chamfer_matched(&Matching::new(p.points(), q.points())?))
}

/// Gradient of [`chamfer`] with respect to every point of `p`.
pub fn chamfer_grad(p: &PointCloud, q: &PointCloud) -> Result<Vec<Vec3>> {
    check_clouds(p, q)?;
    let m = Matching::new(p.points(), q.points())?;
    Ok(chamfer_grad_matched(p.points(), q.points(), &m))
}

/// Sum over both directions of `log10(d^2 + mu)`; may be negative.
pub fn log_chamfer(p: &PointCloud, q: &PointCloud, mu: f64) -> Result<f64> {
    check_clouds(p, q)?;
    Ok(log_chamfer_matched(&Matching::new(p.points(), q.points())?, mu))
}

/// Gradient of [`log_chamfer`]; each matched pair contributes
/// `2 (p - q) / ((d^2 + mu) ln 10)`.
pub fn log_chamfer_grad(p: &PointCloud, q: &PointCloud, mu: f64) -> Result<Vec<Vec3>> {
    check_clouds(p, q)?;
    let m = Matching::new(p.points(), q.points())?;
    Ok(log_chamfer_grad_matched(p.points(), q.points(), &m, mu))
}

/// Per-edge cotangent weights `w_ij = (cot a + cot b) / 2`, clamped, keyed
/// by the sorted edge. Also returns, per edge, the faces' opposite corners
/// so gradients can revisit the angles.
struct CotWeights {
    edges: Vec<(usize, usize)>,
    opposite: Vec<Vec<usize>>,
    raw: Vec<f64>,
}

impl CotWeights {
    fn new(mesh: &Mesh) -> Self {
        let v = mesh.vertices();
        let mut edges = Vec::new();
        let mut opposite = Vec::new();
        let mut raw = Vec::new();
        for ((i, j), faces) in mesh.edge_faces() {
            let mut w = 0.0;
            let mut corners = Vec::with_capacity(faces.len());
            for f in faces {
                let k = mesh.faces()[f]
                    .0
                    .into_iter()
                    .find(|&x| x != i && x != j)
                    .expect("triangle has a third corner");
                w += 0.5 * cot(&(v[i] - v[k]), &(v[j] - v[k]));
                corners.push(k);
            }
            edges.push((i, j));
            opposite.push(corners);
            raw.push(w);
        }
        Self { edges, opposite, raw }
    }

    fn weight(&self, e: usize) -> f64 {
        self.raw[e].clamp(-COT_CLAMP, COT_CLAMP)
    }

    fn clamped(&self, e: usize) -> bool {
        !(self.raw[e] > -COT_CLAMP && self.raw[e] < COT_CLAMP)
    }
}

/// Cotangent of the angle between `u` and `w`. Zero-area corners give a
/// value beyond the clamp so the weight saturates.
fn cot(u: &Vec3, w: &Vec3) -> f64 {
    let d = u.dot(w);
    let n = u.cross(w).norm();
    if n > 0.0 {
        d / n
    } else if d > 0.0 {
        f64::INFINITY
    } else if d < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Derivatives of `cot(u, w)` with respect to `u` and `w`.
fn cot_grad(u: &Vec3, w: &Vec3) -> (Vec3, Vec3) {
    let d = u.dot(w);
    let n = u.cross(w).norm();
    let n3 = n * n * n;
    let du = w / n - (u * w.norm_squared() - w * d) * (d / n3);
    let dw = u / n - (w * u.norm_squared() - u * d) * (d / n3);
    (du, dw)
}

fn laplacian_with(mesh: &Mesh, cw: &CotWeights) -> Vec<Vec3> {
    let v = mesh.vertices();
    let mut lo = vec![Vec3::zeros(); v.len()];
    for (e, &(i, j)) in cw.edges.iter().enumerate() {
        let d = (v[i] - v[j]) * cw.weight(e);
        lo[i] += d;
        lo[j] -= d;
    }
    lo
}

fn first_isolated(mesh: &Mesh) -> Option<usize> {
    mesh.vertex_valence().iter().position(|&k| k == 0)
}

/// Cotangent Laplacian coordinates `LO(i) = sum_j w_ij (v_i - v_j)`.
pub fn laplacian_coords(mesh: &Mesh) -> Result<Vec<Vec3>> {
    if let Some(i) = first_isolated(mesh) {
        return Err(Error::IsolatedVertex(i));
    }
    Ok(laplacian_with(mesh, &CotWeights::new(mesh)))
}

/// As [`laplacian_coords`] but isolated vertices get the zero vector.
pub fn laplacian_coords_lenient(mesh: &Mesh) -> Vec<Vec3> {
    laplacian_with(mesh, &CotWeights::new(mesh))
}

fn check_counts(m: &Mesh, t: &Mesh) -> Result<()> {
    if m.vertices().len() != t.vertices().len() {
        return Err(Error::VertexCountMismatch {
            left: m.vertices().len(),
            right: t.vertices().len(),
        });
    }
    Ok(())
}

fn laplacian_reg_target(m: &Mesh, target: &[Vec3]) -> Result<(f64, Vec<Vec3>, CotWeights)> {
    if let Some(i) = first_isolated(m) {
        return Err(Error::IsolatedVertex(i));
    }
    let cw = CotWeights::new(m);
    let lo = laplacian_with(m, &cw);
    let r: Vec<Vec3> = lo.iter().zip(target).map(|(a, b)| a - b).collect();
    let value = if r.is_empty() {
        0.0
    } else {
        r.iter().map(|x| x.norm_squared()).sum::<f64>() / r.len() as f64
    };
    Ok((value, r, cw))
}

fn laplacian_reg_grad_target(m: &Mesh, target: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    let (value, r, cw) = laplacian_reg_target(m, target)?;
    let v = m.vertices();
    let mut g = vec![Vec3::zeros(); v.len()];
    if v.is_empty() {
        return Ok((value, g));
    }
    let scale = 2.0 / v.len() as f64;
    for (e, &(i, j)) in cw.edges.iter().enumerate() {
        let dr = r[i] - r[j];
        let dv = v[i] - v[j];
        let w = cw.weight(e);
        g[i] += dr * (scale * w);
        g[j] -= dr * (scale * w);
        if cw.clamped(e) {
            continue;
        }
        // weight changes move LO(i) and LO(j) by dw (v_i - v_j) and its negative
        let s = scale * dr.dot(&dv) * 0.5;
        for &k in &cw.opposite[e] {
            let u = v[i] - v[k];
            let w2 = v[j] - v[k];
            let (du, dw) = cot_grad(&u, &w2);
            g[i] += du * s;
            g[j] += dw * s;
            g[k] -= (du + dw) * s;
        }
    }
    Ok((value, g))
}

/// Mean over vertices of `|LO_m(i) - LO_t(i)|^2`, each Laplacian using its
/// own mesh's connectivity. Isolated vertices of `t` have target zero;
/// isolated vertices of `m` are an error.
pub fn laplacian_reg(m: &Mesh, t: &Mesh) -> Result<f64> {
    check_counts(m, t)?;
    laplacian_reg_target(m, &laplacian_coords_lenient(t)).map(|x| x.0)
}

/// Gradient of [`laplacian_reg`] with respect to the vertices of `m`,
/// including the dependence of the cotangent weights on position.
pub fn laplacian_reg_grad(m: &Mesh, t: &Mesh) -> Result<Vec<Vec3>> {
    check_counts(m, t)?;
    laplacian_reg_grad_target(m, &laplacian_coords_lenient(t)).map(|x| x.1)
}

/// Mean squared length over unique edges.
pub fn edge_length_reg(m: &Mesh) -> Result<f64> {
    let edges = m.edges();
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    let v = m.vertices();
    let s: f64 = edges.iter().map(|&(i, j)| (v[i] - v[j]).norm_squared()).sum();
    Ok(s / edges.len() as f64)
}

pub fn edge_length_reg_grad(m: &Mesh) -> Result<Vec<Vec3>> {
    let edges = m.edges();
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    let v = m.vertices();
    let scale = 2.0 / edges.len() as f64;
    let mut g = vec![Vec3::zeros(); v.len()];
    for (i, j) in edges {
        let d = (v[i] - v[j]) * scale;
        g[i] += d;
        g[j] -= d;
    }
    Ok(g)
}

/// Unit normal of `cross`, or zero for a degenerate face.
fn unit(cross: &Vec3) -> Vec3 {
    let n = cross.norm();
    if n > 0.0 {
        cross / n
    } else {
        Vec3::zeros()
    }
}

/// Pushes a gradient `gn` on a face's unit normal back to its corners.
fn normal_backprop(mesh: &Mesh, face: usize, gn: &Vec3, g: &mut [Vec3]) {
    let [a, b, c] = mesh.faces()[face].0;
    let v = mesh.vertices();
    let e1 = v[b] - v[a];
    let e2 = v[c] - v[a];
    let cross = e1.cross(&e2);
    let len = cross.norm();
    if len == 0.0 {
        return;
    }
    let n = cross / len;
    // d(cross / |cross|) = (I - n n^T) d(cross) / |cross|
    let gc = (gn - n * n.dot(gn)) / len;
    let gb = e2.cross(&gc);
    let gcc = gc.cross(&e1);
    g[b] += gb;
    g[c] += gcc;
    g[a] -= gb + gcc;
}

fn adjacent_pairs(m: &Mesh) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (_, faces) in m.edge_faces() {
        for x in 0..faces.len() {
            for y in x + 1..faces.len() {
                pairs.push((faces[x], faces[y]));
            }
        }
    }
    pairs
}

/// Sum over face pairs sharing an edge of `1 - n1 . n2`.
pub fn normal_consistency(m: &Mesh) -> f64 {
    let normals: Vec<Vec3> = (0..m.faces().len()).map(|f| unit(&m.face_cross(f))).collect();
    adjacent_pairs(m)
        .iter()
        .map(|&(a, b)| 1.0 - normals[a].dot(&normals[b]))
        .sum()
}

pub fn normal_consistency_grad(m: &Mesh) -> Vec<Vec3> {
    let normals: Vec<Vec3> = (0..m.faces().len()).map(|f| unit(&m.face_cross(f))).collect();
    let mut gn = vec![Vec3::zeros(); normals.len()];
    for (a, b) in adjacent_pairs(m) {
        gn[a] -= normals[b];
        gn[b] -= normals[a];
    }
    let mut g = vec![Vec3::zeros(); m.vertices().len()];
    for (f, gf) in gn.iter().enumerate() {
        normal_backprop(m, f, gf, &mut g);
    }
    g
}

fn normal_loss_matched(np: &[Vec3], nq: &[Vec3], m: &Matching) -> f64 {
    let a: f64 = np.iter().zip(&m.pq).map(|(n, &(j, _))| 1.0 - n.dot(&nq[j]).abs()).sum();
    let b: f64 = nq.iter().zip(&m.qp).map(|(n, &(i, _))| 1.0 - n.dot(&np[i]).abs()).sum();
    0.5 * (a / np.len() as f64 + b / nq.len() as f64)
}

/// Gradient of the normal loss with respect to the normals of `p`.
fn normal_loss_grad_matched(np: &[Vec3], nq: &[Vec3], m: &Matching) -> Vec<Vec3> {
    let sp = 0.5 / np.len() as f64;
    let sq = 0.5 / nq.len() as f64;
    let mut g: Vec<Vec3> = np
        .iter()
        .zip(&m.pq)
        .map(|(n, &(j, _))| -nq[j] * (n.dot(&nq[j]).signum() * sp))
        .collect();
    for (n, &(i, _)) in nq.iter().zip(&m.qp) {
        g[i] -= n * (n.dot(&np[i]).signum() * sq);
    }
    g
}

fn normals_of(c: &PointCloud) -> Result<&[Vec3]> {
    c.normals().ok_or(Error::MissingNormals)
}

/// Half the sum of the two directional means of `1 - |cos|` between each
/// point's normal and its nearest neighbor's normal.
pub fn normal_loss(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    check_clouds(p, q)?;
    let (np, nq) = (normals_of(p)?, normals_of(q)?);
    let m = Matching::new(p.points(), q.points())?;
    Ok(normal_loss_matched(np, nq, &m))
}

/// Ground truth, regularization target and weights for repeated loss
/// evaluation on meshes sharing one connectivity.
pub struct Objective<'a> {
    gt: &'a PointCloud,
    gt_index: NearestIndex<'a>,
    target_laplacian: Option<Vec<Vec3>>,
    weights: LossWeights,
    n_samples: usize,
}

impl<'a> Objective<'a> {
    pub fn new(gt: &'a PointCloud, baseline: &Mesh, weights: LossWeights, n_samples: usize) -> Result<Self> {
        weights.validate()?;
        if n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        let uses_points = weights.lambda1 > 0.0 || weights.lambda2 > 0.0 || weights.lambda6 > 0.0;
        if uses_points && gt.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if weights.lambda6 > 0.0 {
            normals_of(gt)?;
        }
        let target_laplacian = (weights.lambda3 > 0.0).then(|| laplacian_coords_lenient(baseline));
        Ok(Self {
            gt,
            gt_index: NearestIndex::new(gt.points()),
            target_laplacian,
            weights,
            n_samples,
        })
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    pub fn value(&self, mesh: &Mesh, seed: u64) -> Result<LossBreakdown> {
        self.run(mesh, Samples::Seed(seed), false).map(|x| x.0)
    }

    pub fn value_and_grad(&self, mesh: &Mesh, seed: u64) -> Result<(LossBreakdown, Vec<Vec3>)> {
        self.run(mesh, Samples::Seed(seed), true)
            .map(|(b, g)| (b, g.expect("gradient requested")))
    }

    /// Like [`Objective::value`] but with the sample faces and barycentric
    /// weights of `layout` instead of a fresh draw.
    pub fn value_at(&self, mesh: &Mesh, layout: &SurfaceSamples) -> Result<LossBreakdown> {
        self.run(mesh, Samples::Layout(layout), false).map(|x| x.0)
    }

    /// Like [`Objective::value_and_grad`] but with a fixed sample layout,
    /// which makes the loss a continuous function of the vertices.
    pub fn value_and_grad_at(&self, mesh: &Mesh, layout: &SurfaceSamples) -> Result<(LossBreakdown, Vec<Vec3>)> {
        self.run(mesh, Samples::Layout(layout), true)
            .map(|(b, g)| (b, g.expect("gradient requested")))
    }

    fn run(&self, mesh: &Mesh, source: Samples<'_>, want_grad: bool) -> Result<(LossBreakdown, Option<Vec<Vec3>>)> {
        let w = &self.weights;
        let mut out = LossBreakdown::default();
        let nv = mesh.vertices().len();
        let mut grad = vec![Vec3::zeros(); nv];

        if w.lambda1 > 0.0 || w.lambda2 > 0.0 || w.lambda6 > 0.0 {
            let samples = match source {
                Samples::Seed(seed) => sample_surface_traced(mesh, self.n_samples, seed)?,
                Samples::Layout(layout) => layout.reposition(mesh)?,
            };
            let p = samples.cloud.points();
            let q = self.gt.points();
            let m = Matching::with_index(p, &self.gt_index);
            let mut gp = vec![Vec3::zeros(); p.len()];
            if w.lambda1 > 0.0 {
                out.logcmd = log_chamfer_matched(&m, w.mu);
                if want_grad {
                    for (a, b) in gp.iter_mut().zip(log_chamfer_grad_matched(p, q, &m, w.mu)) {
                        *a += b * w.lambda1;
                    }
                }
            }
            if w.lambda2 > 0.0 {
                out.cmd = chamfer_matched(&m);
                if want_grad {
                    for (a, b) in gp.iter_mut().zip(chamfer_grad_matched(p, q, &m)) {
                        *a += b * w.lambda2;
                    }
                }
            }
            if want_grad {
                scatter_positions(mesh, &samples, &gp, &mut grad);
            }
            if w.lambda6 > 0.0 {
                let np = samples.cloud.normals().expect("sampler attaches normals");
                let nq = normals_of(self.gt)?;
                out.normal_loss = normal_loss_matched(np, nq, &m);
                if want_grad {
                    let gn = normal_loss_grad_matched(np, nq, &m);
                    let mut per_face = vec![Vec3::zeros(); mesh.faces().len()];
                    for (g, &f) in gn.iter().zip(&samples.faces) {
                        per_face[f] += g * w.lambda6;
                    }
                    for (f, gf) in per_face.iter().enumerate() {
                        normal_backprop(mesh, f, gf, &mut grad);
                    }
                }
            }
        }
        if w.lambda3 > 0.0 {
            let target = self
                .target_laplacian
                .as_ref()
                .expect("target computed when lambda3 > 0");
            if target.len() != nv {
                return Err(Error::VertexCountMismatch {
                    left: nv,
                    right: target.len(),
                });
            }
            if want_grad {
                let (value, g) = laplacian_reg_grad_target(mesh, target)?;
                out.laplacian_reg = value;
                add_scaled(&mut grad, &g, w.lambda3);
            } else {
                out.laplacian_reg = laplacian_reg_target(mesh, target)?.0;
            }
        }
        if w.lambda4 > 0.0 {
            out.edge_len = edge_length_reg(mesh)?;
            if want_grad {
                add_scaled(&mut grad, &edge_length_reg_grad(mesh)?, w.lambda4);
            }
        }
        if w.lambda5 > 0.0 {
            out.normal_consistency = normal_consistency(mesh);
            if want_grad {
                add_scaled(&mut grad, &normal_consistency_grad(mesh), w.lambda5);
            }
        }
        out.total = w
            .lambdas()
            .iter()
            .zip(out.terms())
            .map(|(l, t)| if *l > 0.0 { l * t } else { 0.0 })
            .sum();
        Ok((out, want_grad.then_some(grad)))
    }
}

#[derive(Clone, Copy)]
enum Samples<'a> {
    Seed(u64),
    Layout(&'a SurfaceSamples),
}

fn add_scaled(acc: &mut [Vec3], g: &[Vec3], s: f64) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b * s;
    }
}

/// Chains per-sample position gradients to vertices through the fixed
/// barycentric weights.
fn scatter_positions(mesh: &Mesh, samples: &SurfaceSamples, gp: &[Vec3], grad: &mut [Vec3]) {
    for ((g, &f), w) in gp.iter().zip(&samples.faces).zip(&samples.bary) {
        let [a, b, c] = mesh.faces()[f].0;
        grad[a] += g * w[0];
        grad[b] += g * w[1];
        grad[c] += g * w[2];
    }
}

/// Combined loss of `m`, sampling `n_samples` points from it with `seed`.
pub fn total_loss(
    m: &Mesh,
    gt: &PointCloud,
    baseline: &Mesh,
    w: &LossWeights,
    n_samples: usize,
    seed: u64,
) -> Result<LossBreakdown> {
    if w.lambda3 > 0.0 {
        check_counts(m, baseline)?;
    }
    Objective::new(gt, baseline, *w, n_samples)?.value(m, seed)
}

/// Gradient of [`total_loss`] with respect to the vertices of `m`.
pub fn total_loss_grad(
    m: &Mesh,
    gt: &PointCloud,
    baseline: &Mesh,
    w: &LossWeights,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec3>> {
    if w.lambda3 > 0.0 {
        check_counts(m, baseline)?;
    }
    Objective::new(gt, baseline, *w, n_samples)?
        .value_and_grad(m, seed)
        .map(|x| x.1)
}
