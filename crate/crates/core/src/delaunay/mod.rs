//! 3D Delaunay tetrahedralization by incremental (Bowyer-Watson) insertion.
//!
//! Points are inserted in input order. The enclosing simplex is symbolic: a
//! single vertex at infinity joined to every convex-hull face ("ghost"
//! tetrahedra), so after construction the finite tetrahedra cover exactly the
//! convex hull and nothing needs to be carved away. Predicates are exact and
//! cospherical ties are resolved by index-based symbolic perturbation (see
//! [`predicates`]), which makes the output unique for a given input order.
//!
//! Exact duplicate points are skipped; they appear in no tetrahedron.

pub mod predicates;

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{Point3, PointCloud, Vec3};
use predicates::{insphere_sos, orient3d};

/// Tetrahedron with its cached circumsphere.
///
/// Vertices are stored positively oriented (see [`predicates::orient3d`]).
/// `circumradius` is `+inf` for slivers whose circumsphere does not fit in
/// a double.
#[derive(Debug, Clone, PartialEq)]
pub struct Tetrahedron {
    pub vertices: [usize; 4],
    pub circumcenter: Point3,
    pub circumradius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaunayComplex {
    pub points: PointCloud,
    pub tetrahedra: Vec<Tetrahedron>,
}

impl DelaunayComplex {
    pub fn max_circumradius(&self) -> f64 {
        self.tetrahedra.iter().map(|t| t.circumradius).fold(0.0, f64::max)
    }

    /// Sum of tetrahedron volumes.
    pub fn volume(&self) -> f64 {
        let p = self.points.points();
        self.tetrahedra
            .iter()
            .map(|t| {
                let [a, b, c, d] = t.vertices;
                tet_volume(&p[a], &p[b], &p[c], &p[d])
            })
            .sum()
    }
}

/// Unsigned volume of a tetrahedron.
pub fn tet_volume(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> f64 {
    ((b - a).dot(&(c - a).cross(&(d - a))) / 6.0).abs()
}

/// Center and radius of the sphere through four points.
pub fn circumsphere(p0: &Point3, p1: &Point3, p2: &Point3, p3: &Point3) -> Result<(Point3, f64)> {
    let u = p1 - p0;
    let v = p2 - p0;
    let w = p3 - p0;
    let det = u.dot(&v.cross(&w));
    let scale = [
        u.norm(),
        v.norm(),
        w.norm(),
        (v - u).norm(),
        (w - u).norm(),
        (w - v).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if !(det.abs() > 1e-12 * scale.powi(3)) {
        return Err(Error::DegenerateTetrahedron);
    }
    let (center, radius) = circumsphere_raw(p0, u, v, w, det);
    if !radius.is_finite() {
        return Err(Error::DegenerateTetrahedron);
    }
    Ok((center, radius))
}

fn circumsphere_raw(p0: &Point3, u: Vec3, v: Vec3, w: Vec3, det: f64) -> (Point3, f64) {
    let offset = (u.norm_squared() * v.cross(&w) + v.norm_squared() * w.cross(&u) + w.norm_squared() * u.cross(&v))
        / (2.0 * det);
    (p0 + offset, offset.norm())
}

fn tetrahedron_record(points: &[Point3], vertices: [usize; 4]) -> Tetrahedron {
    let [a, b, c, d] = vertices.map(|i| points[i]);
    let (u, v, w) = (b - a, c - a, d - a);
    let det = u.dot(&v.cross(&w));
    let (center, radius) = circumsphere_raw(&a, u, v, w, det);
    if radius.is_finite() && center.iter().all(|c| c.is_finite()) {
        Tetrahedron {
            vertices,
            circumcenter: center,
            circumradius: radius,
        }
    } else {
        Tetrahedron {
            vertices,
            circumcenter: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            circumradius: f64::INFINITY,
        }
    }
}

/// Builds the Delaunay complex of `points` (normals are ignored).
pub fn delaunay_complex(points: &PointCloud) -> Result<DelaunayComplex> {
    let pts = points.points();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: pts.len(),
        });
    }
    check_spread(pts)?;
    let seed = initial_simplex(pts)?;
    let mut tds = Tds::new(pts, seed);
    let mut used = vec![false; pts.len()];
    for &s in &seed {
        used[s] = true;
    }
    for i in 0..pts.len() {
        if !used[i] {
            tds.insert(i);
        }
    }
    let mut tets: Vec<[usize; 4]> = tds.finite_tets().collect();
    tets.sort_by_key(|t| {
        let mut k = *t;
        k.sort_unstable();
        k
    });
    let tetrahedra = tets.into_iter().map(|t| tetrahedron_record(pts, t)).collect();
    Ok(DelaunayComplex {
        points: PointCloud::from_parts_unchecked(pts.to_vec(), None),
        tetrahedra,
    })
}

/// Rejects clouds that are coplanar within a relative tolerance, judged on a
/// well-spread quadruple.
fn check_spread(pts: &[Point3]) -> Result<()> {
    let a = (0..pts.len())
        .min_by(|&i, &j| pts[i].x.total_cmp(&pts[j].x))
        .unwrap_or(0);
    let farthest = |f: &dyn Fn(&Point3) -> f64| -> (usize, f64) {
        pts.iter()
            .enumerate()
            .map(|(i, p)| (i, f(p)))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    };
    let (b, diam) = farthest(&|p| (p - pts[a]).norm());
    if diam <= 0.0 {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let axis = (pts[b] - pts[a]) / diam;
    let (c, line_dist) = farthest(&|p| {
        let r = p - pts[a];
        (r - axis * r.dot(&axis)).norm()
    });
    if line_dist <= 1e-12 * diam {
        return Err(Error::DegenerateInput("all points are collinear".into()));
    }
    let normal = (pts[b] - pts[a]).cross(&(pts[c] - pts[a])).normalize();
    let (_, plane_dist) = farthest(&|p| (p - pts[a]).dot(&normal).abs());
    if plane_dist <= 1e-12 * diam {
        return Err(Error::DegenerateInput("all points are coplanar".into()));
    }
    Ok(())
}

/// First affinely independent quadruple in input order, positively oriented.
fn initial_simplex(pts: &[Point3]) -> Result<[usize; 4]> {
    let a = 0;
    let b = (1..pts.len())
        .find(|&i| pts[i] != pts[a])
        .ok_or_else(|| Error::DegenerateInput("all points coincide".into()))?;
    // exact test: collinear iff all three planar projections have zero area
    let collinear = |i: usize| {
        [(0, 1), (1, 2), (0, 2)].iter().all(|&(x, y)| {
            robust::orient2d(
                robust::Coord {
                    x: pts[a][x],
                    y: pts[a][y],
                },
                robust::Coord {
                    x: pts[b][x],
                    y: pts[b][y],
                },
                robust::Coord {
                    x: pts[i][x],
                    y: pts[i][y],
                },
            ) == 0.0
        })
    };
    let c = (b + 1..pts.len())
        .find(|&i| !collinear(i))
        .ok_or_else(|| Error::DegenerateInput("all points are collinear".into()))?;
    let d = (c + 1..pts.len())
        .find(|&i| orient3d(&pts[a], &pts[b], &pts[c], &pts[i]) != Ordering::Equal)
        .ok_or_else(|| Error::DegenerateInput("all points are coplanar".into()))?;
    if orient3d(&pts[a], &pts[b], &pts[c], &pts[d]) == Ordering::Greater {
        Ok([a, b, c, d])
    } else {
        Ok([b, a, c, d])
    }
}

const INF: usize = usize::MAX;
const NONE: usize = usize::MAX;

/// Face opposite vertex `k`, wound so that its normal points away from `k`
/// when the tetrahedron is positively oriented.
pub(crate) const OPPOSITE_FACE: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];

/// Tetrahedral data structure: vertices plus the neighbor across each face.
struct Tds<'a> {
    pts: &'a [Point3],
    verts: Vec<[usize; 4]>,
    nbrs: Vec<[usize; 4]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    last: usize,
    walk_counter: usize,
    mark: Vec<u32>,
    epoch: u32,
}

impl<'a> Tds<'a> {
    fn new(pts: &'a [Point3], seed: [usize; 4]) -> Self {
        let mut tds = Tds {
            pts,
            verts: Vec::with_capacity(pts.len() * 8),
            nbrs: Vec::with_capacity(pts.len() * 8),
            alive: Vec::new(),
            free: Vec::new(),
            last: 0,
            walk_counter: 0,
            mark: Vec::new(),
            epoch: 0,
        };
        // finite seed tetrahedron at slot 0, ghost across each of its faces
        tds.push(seed, [NONE; 4]);
        for k in 0..4 {
            let [x, y, z] = OPPOSITE_FACE[k].map(|i| seed[i]);
            // swapping two corners turns the outward face into a ghost whose
            // infinite vertex sits on the outside
            let g = tds.push([y, x, z, INF], [NONE; 4]);
            tds.nbrs[0][k] = g;
            tds.nbrs[g][3] = 0;
        }
        // ghost-ghost adjacency across faces containing the infinite vertex
        tds.link_by_faces(&[1, 2, 3, 4]);
        tds
    }

    fn push(&mut self, v: [usize; 4], n: [usize; 4]) -> usize {
        if let Some(slot) = self.free.pop() {
            self.verts[slot] = v;
            self.nbrs[slot] = n;
            self.alive[slot] = true;
            self.mark[slot] = 0;
            slot
        } else {
            self.verts.push(v);
            self.nbrs.push(n);
            self.alive.push(true);
            self.mark.push(0);
            self.verts.len() - 1
        }
    }

    /// Connects the given tetrahedra to each other across shared faces that
    /// are not yet linked.
    fn link_by_faces(&mut self, tets: &[usize]) {
        let mut open: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        for &t in tets {
            for k in 0..4 {
                if self.nbrs[t][k] != NONE {
                    continue;
                }
                let mut key = OPPOSITE_FACE[k].map(|i| self.verts[t][i]);
                key.sort_unstable();
                if let Some((u, j)) = open.remove(&key) {
                    self.nbrs[t][k] = u;
                    self.nbrs[u][j] = t;
                } else {
                    open.insert(key, (t, k));
                }
            }
        }
        debug_assert!(open.is_empty(), "unmatched faces after linking");
    }

    fn point(&self, v: usize) -> &Point3 {
        &self.pts[v]
    }

    fn ghost_slot(&self, t: usize) -> Option<usize> {
        self.verts[t].iter().position(|&v| v == INF)
    }

    /// Orientation of tetrahedron `t` with vertex `k` replaced by point `p`.
    fn orient_replaced(&self, t: usize, k: usize, p: usize) -> Ordering {
        let mut v = self.verts[t];
        v[k] = p;
        orient3d(self.point(v[0]), self.point(v[1]), self.point(v[2]), self.point(v[3]))
    }

    fn in_circumsphere(&self, t: usize, p: usize) -> bool {
        let v = self.verts[t];
        let pts = [
            self.point(v[0]),
            self.point(v[1]),
            self.point(v[2]),
            self.point(v[3]),
            self.point(p),
        ];
        insphere_sos(pts, [v[0], v[1], v[2], v[3], p]) == Ordering::Greater
    }

    fn in_conflict(&self, t: usize, p: usize) -> bool {
        match self.ghost_slot(t) {
            None => self.in_circumsphere(t, p),
            Some(k) => match self.orient_replaced(t, k, p) {
                Ordering::Greater => true,
                Ordering::Less => false,
                // on the hull plane: conflict iff inside the circumcircle of
                // the hull face, i.e. inside the finite neighbor's sphere
                Ordering::Equal => self.in_circumsphere(self.nbrs[t][k], p),
            },
        }
    }

    /// Visibility walk from the last created tetrahedron. Returns a
    /// tetrahedron in conflict with `p`, or `None` if `p` duplicates a vertex.
    fn locate(&mut self, p: usize) -> Option<usize> {
        let mut t = self.last;
        if !self.alive[t] {
            t = self.alive.iter().position(|&a| a).expect("live tetrahedron");
        }
        if let Some(k) = self.ghost_slot(t) {
            t = self.nbrs[t][k];
        }
        let max_steps = 4 * self.verts.len() + 16;
        for _ in 0..max_steps {
            if self.ghost_slot(t).is_some() {
                if self.in_conflict(t, p) {
                    return Some(t);
                }
                break;
            }
            self.walk_counter = self.walk_counter.wrapping_add(1);
            let start = self.walk_counter % 4;
            let mut moved = false;
            for j in 0..4 {
                let k = (start + j) % 4;
                if self.orient_replaced(t, k, p) == Ordering::Less {
                    t = self.nbrs[t][k];
                    moved = true;
                    break;
                }
            }
            if !moved {
                let q = self.point(p);
                if self.verts[t].iter().any(|&v| self.point(v) == q) {
                    return None;
                }
                return Some(t);
            }
        }
        // the walk cannot cycle in a Delaunay triangulation; scan as a fallback
        let q = self.point(p);
        if (0..self.verts.len())
            .filter(|&t| self.alive[t])
            .any(|t| self.verts[t].iter().any(|&v| v != INF && self.point(v) == q))
        {
            return None;
        }
        (0..self.verts.len()).find(|&t| self.alive[t] && self.in_conflict(t, p))
    }

    fn insert(&mut self, p: usize) {
        let Some(seed) = self.locate(p) else {
            return;
        };
        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![seed];
        self.mark[seed] = epoch;
        // boundary faces: (cavity tet, face index, outside neighbor)
        let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
        let mut i = 0;
        while i < cavity.len() {
            let t = cavity[i];
            i += 1;
            for k in 0..4 {
                let n = self.nbrs[t][k];
                if self.mark[n] == epoch {
                    continue;
                }
                if self.in_conflict(n, p) {
                    self.mark[n] = epoch;
                    cavity.push(n);
                } else {
                    boundary.push((t, k, n));
                }
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
        }
        let mut created = Vec::with_capacity(boundary.len());
        for &(t, k, n) in &boundary {
            let mut v = self.verts[t];
            v[k] = p;
            let mut nb = [NONE; 4];
            nb[k] = n;
            // the outside neighbor pointed at `t`; redirect it
            let back = self.nbrs[n].iter().position(|&x| x == t).expect("mutual adjacency");
            created.push((v, nb, n, back));
        }
        // free cavity slots only after reading all cavity data
        self.free.extend(cavity.iter().rev().copied());
        let mut new_tets = Vec::with_capacity(created.len());
        for (v, nb, n, back) in created {
            let slot = self.push(v, nb);
            self.nbrs[n][back] = slot;
            new_tets.push(slot);
        }
        self.link_by_faces(&new_tets);
        self.last = *new_tets.last().expect("non-empty cavity boundary");
    }

    fn finite_tets(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        (0..self.verts.len())
            .filter(|&t| self.alive[t] && !self.verts[t].contains(&INF))
            .map(|t| self.verts[t])
    }
}
