//! Smoothing, subdivision, baseline construction and mesh refinement.
//!
//! Refinement moves every vertex to `v + tanh(o_v)`, where the offsets
//! `o_v` are free variables optimized by plain gradient descent on the
//! combined loss. This stands in for a learned offset predictor: the update
//! has the same bounded-residual form, but the offsets are fitted per shape
//! instead of being predicted from image features. Each stage starts from
//! zero offsets and bakes its result into the vertices when it ends, so no
//! vertex moves by one unit or more along any axis within a stage.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::alphashape::{triangulate_complex, triangulate_with_source, Surface};
use crate::delaunay::delaunay_complex;
use crate::error::{Error, Result};
use crate::loss::{LossBreakdown, LossWeights, Objective};
use crate::mesh::{Mesh, Point3, PointCloud, TriangleFace, Vec3};
use crate::sampling::sample_surface_traced;

/// Offsets are kept within this magnitude so `tanh` stays below
/// `1 - 1e-12`.
pub const OFFSET_LIMIT: f64 = 13.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaubinConfig {
    pub lambda: f64,
    pub mu_shrink: f64,
    pub iterations: usize,
}

impl Default for TaubinConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            mu_shrink: -0.53,
            iterations: 10,
        }
    }
}

impl TaubinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!(
                "taubin lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if !(self.mu_shrink < 0.0 && -self.mu_shrink > self.lambda) {
            return Err(Error::Config(format!(
                "taubin mu must be negative with |mu| > lambda, got {}",
                self.mu_shrink
            )));
        }
        Ok(())
    }
}

/// Uniform umbrella operator: neighbor mean minus the vertex; zero for
/// isolated vertices.
fn umbrella(v: &[Point3], neighbors: &[Vec<usize>]) -> Vec<Vec3> {
    v.iter()
        .zip(neighbors)
        .map(|(p, nb)| {
            if nb.is_empty() {
                return Vec3::zeros();
            }
            let sum: Vec3 = nb.iter().map(|&j| v[j].coords).sum();
            sum / nb.len() as f64 - p.coords
        })
        .collect()
}

fn umbrella_step(v: &mut [Point3], neighbors: &[Vec<usize>], factor: f64) {
    let d = umbrella(v, neighbors);
    for (p, di) in v.iter_mut().zip(d) {
        *p += di * factor;
    }
}

/// Alternating `+lambda` / `mu_shrink` umbrella passes.
pub fn taubin_smooth(mesh: &Mesh, cfg: &TaubinConfig) -> Result<Mesh> {
    cfg.validate()?;
    let neighbors = mesh.vertex_neighbors();
    let mut v = mesh.vertices().to_vec();
    for _ in 0..cfg.iterations {
        umbrella_step(&mut v, &neighbors, cfg.lambda);
        umbrella_step(&mut v, &neighbors, cfg.mu_shrink);
    }
    mesh.with_positions(v)
}

/// Plain umbrella smoothing with a single positive factor.
pub fn laplacian_smooth(mesh: &Mesh, lambda: f64, iterations: usize) -> Result<Mesh> {
    let neighbors = mesh.vertex_neighbors();
    let mut v = mesh.vertices().to_vec();
    for _ in 0..iterations {
        umbrella_step(&mut v, &neighbors, lambda);
    }
    mesh.with_positions(v)
}

/// Midpoint subdivision: one new vertex per edge (appended in sorted edge
/// order), every face split into four.
pub fn subdivide(mesh: &Mesh) -> Mesh {
    let v = mesh.vertices();
    let edges = mesh.edges();
    let mut vertices = v.to_vec();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
    for &(i, j) in &edges {
        mid.insert((i, j), vertices.len());
        vertices.push(Point3::from((v[i].coords + v[j].coords) * 0.5));
    }
    let m = |a: usize, b: usize| mid[&crate::mesh::edge_key(a, b)];
    let mut faces = Vec::with_capacity(mesh.faces().len() * 4);
    for f in mesh.faces() {
        let [a, b, c] = f.0;
        let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
        faces.push(TriangleFace([a, ab, ca]));
        faces.push(TriangleFace([ab, b, bc]));
        faces.push(TriangleFace([ca, bc, c]));
        faces.push(TriangleFace([ab, bc, ca]));
    }
    Mesh::from_parts_unchecked(vertices, faces)
}

/// Baseline mesh and, for each of its vertices, the input point it came
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub mesh: Mesh,
    pub source: Vec<usize>,
}

impl Baseline {
    /// The baseline's connectivity carrying the unsmoothed input positions;
    /// vertex-compatible with the baseline by construction.
    pub fn coarse_mesh(&self, points: &PointCloud) -> Result<Mesh> {
        let p = points.points();
        self.mesh.with_positions(self.source.iter().map(|&i| p[i]).collect())
    }
}

/// Triangulate, Taubin-smooth the surface, then triangulate again.
///
/// The second triangulation runs on the full input set with every surface
/// vertex moved to its smoothed position; points that were not on the
/// first surface keep their place. With zero smoothing iterations the
/// result therefore equals [`crate::alphashape::triangulate`].
pub fn build_baseline(points: &PointCloud, tau: f64, taubin: &TaubinConfig) -> Result<Mesh> {
    build_baseline_with_source(points, tau, taubin).map(|b| b.mesh)
}

pub fn build_baseline_with_source(points: &PointCloud, tau: f64, taubin: &TaubinConfig) -> Result<Baseline> {
    taubin.validate()?;
    let first: Surface = triangulate_with_source(points, tau)?;
    if taubin.iterations == 0 {
        return Ok(Baseline {
            mesh: first.mesh,
            source: first.source,
        });
    }
    let smoothed = taubin_smooth(&first.mesh, taubin)?;
    let mut moved = points.points().to_vec();
    for (k, &i) in first.source.iter().enumerate() {
        moved[i] = smoothed.vertices()[k];
    }
    let complex = delaunay_complex(&PointCloud::new(moved)?)?;
    let second = triangulate_complex(&complex, tau)?;
    Ok(Baseline {
        mesh: second.mesh,
        source: second.source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub stages: usize,
    pub iters_per_stage: usize,
    pub step_size: f64,
    pub weights: LossWeights,
    pub subdivide_between_stages: bool,
    /// Points sampled from the mesh at every iteration.
    pub n_samples: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            stages: 2,
            iters_per_stage: 100,
            step_size: 1e-5,
            weights: LossWeights::smooth(),
            subdivide_between_stages: false,
            n_samples: 3000,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::Config("stages must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: usize,
    pub iteration: usize,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub mesh: Mesh,
    /// Loss before each update, in order.
    pub trace: Vec<TraceRow>,
    /// Largest per-axis displacement applied in each stage.
    pub stage_displacement: Vec<f64>,
}

/// Optimizes per-vertex offsets stage by stage. Stage `s` draws its surface
/// samples once, with seed `seed + s` on the mesh entering the stage, and
/// keeps their faces and barycentric weights for every iteration, so each
/// stage minimizes one fixed continuous function.
pub fn refine_mesh(
    initial: &Mesh,
    gt_samples: &PointCloud,
    baseline: &Mesh,
    cfg: &RefineConfig,
    seed: u64,
) -> Result<RefineOutcome> {
    cfg.validate()?;
    if cfg.weights.lambda3 > 0.0 && initial.vertices().len() != baseline.vertices().len() {
        return Err(Error::VertexCountMismatch {
            left: initial.vertices().len(),
            right: baseline.vertices().len(),
        });
    }
    let mut mesh = initial.clone();
    let mut target = baseline.clone();
    let mut trace = Vec::new();
    let mut stage_displacement = Vec::new();
    for stage in 0..cfg.stages {
        if stage > 0 && cfg.subdivide_between_stages {
            mesh = subdivide(&mesh);
            target = subdivide(&target);
        }
        if cfg.iters_per_stage == 0 {
            stage_displacement.push(0.0);
            continue;
        }
        let objective = Objective::new(gt_samples, &target, cfg.weights, cfg.n_samples)?;
        let layout = sample_surface_traced(&mesh, cfg.n_samples, seed.wrapping_add(stage as u64))?;
        let base = mesh.vertices().to_vec();
        let mut offsets = vec![Vec3::zeros(); base.len()];
        for iteration in 0..cfg.iters_per_stage {
            let current = mesh.with_positions(displaced(&base, &offsets))?;
            let (loss, grad) = objective.value_and_grad_at(&current, &layout)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss at stage {stage}, iteration {iteration}"
                )));
            }
            if grad.iter().any(|g| !g.iter().all(|x| x.is_finite())) {
                return Err(Error::NonFinite(format!(
                    "gradient at stage {stage}, iteration {iteration}"
                )));
            }
            trace.push(TraceRow { stage, iteration, loss });
            for (o, g) in offsets.iter_mut().zip(&grad) {
                for k in 0..3 {
                    let t = o[k].tanh();
                    o[k] = (o[k] - cfg.step_size * g[k] * (1.0 - t * t)).clamp(-OFFSET_LIMIT, OFFSET_LIMIT);
                }
            }
        }
        let moved = displaced(&base, &offsets);
        stage_displacement.push(
            offsets
                .iter()
                .flat_map(|o| o.iter().map(|x| x.tanh().abs()))
                .fold(0.0, f64::max),
        );
        mesh = mesh
            .with_positions(moved)
            .map_err(|_| Error::NonFinite(format!("vertex positions after stage {stage}")))?;
    }
    Ok(RefineOutcome {
        mesh,
        trace,
        stage_displacement,
    })
}

fn displaced(base: &[Point3], offsets: &[Vec3]) -> Vec<Point3> {
    base.iter().zip(offsets).map(|(p, o)| p + o.map(f64::tanh)).collect()
}

/// Writes the trace as CSV: stage, iteration, every term, total.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut out: W) -> std::io::Result<()> {
    write!(out, "stage,iteration")?;
    for name in LossBreakdown::TERM_NAMES {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",total")?;
    for row in trace {
        write!(out, "{},{}", row.stage, row.iteration)?;
        for t in row.loss.terms() {
            write!(out, ",{t}")?;
        }
        writeln!(out, ",{}", row.loss.total)?;
    }
    Ok(())
}
