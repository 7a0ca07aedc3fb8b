//! Exact nearest-neighbor queries over a fixed point set.
//!
//! Below [`BRUTE_FORCE_LIMIT`] points a linear scan is used; above it a
//! kd-tree with median splits. Both return identical answers: the closest
//! point by squared distance, ties going to the lowest index.

use rayon::prelude::*;

use crate::mesh::Point3;

pub const BRUTE_FORCE_LIMIT: usize = 64;
const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Nearest-neighbor index borrowing its points.
#[derive(Debug, Clone)]
pub struct NearestIndex<'a> {
    points: &'a [Point3],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
fn better(d: f64, i: usize, best_d: f64, best_i: usize) -> bool {
    d < best_d || (d == best_d && i < best_i)
}

impl<'a> NearestIndex<'a> {
    pub fn new(points: &'a [Point3]) -> Self {
        let mut index = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if points.len() > BRUTE_FORCE_LIMIT {
            index.build(0, points.len());
        }
        index
    }

    pub fn points(&self) -> &'a [Point3] {
        self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for k in 0..3 {
                lo[k] = lo[k].min(self.points[i][k]);
                hi[k] = hi[k].max(self.points[i][k]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        let value = pts[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Index and squared distance of the nearest point; `None` when empty.
    pub fn nearest(&self, q: &Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        if self.nodes.is_empty() {
            for (i, p) in self.points.iter().enumerate() {
                let d = (p - q).norm_squared();
                if better(d, i, best.1, best.0) {
                    best = (i, d);
                }
            }
        } else {
            self.nearest_in(0, q, &mut best);
        }
        Some(best)
    }

    fn nearest_in(&self, node: usize, q: &Point3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = (self.points[i] - q).norm_squared();
                    if better(d, i, best.1, best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                // `<=` keeps equidistant points with lower indices reachable
                if diff * diff <= best.1 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest points as `(index, squared distance)`, closest first.
    pub fn k_nearest(&self, q: &Point3, k: usize) -> Vec<(usize, f64)> {
        let mut found: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k == 0 {
            return found;
        }
        if self.nodes.is_empty() {
            for (i, p) in self.points.iter().enumerate() {
                push_candidate(&mut found, k, i, (p - q).norm_squared());
            }
        } else {
            self.k_nearest_in(0, q, k, &mut found);
        }
        found
    }

    fn k_nearest_in(&self, node: usize, q: &Point3, k: usize, found: &mut Vec<(usize, f64)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    push_candidate(found, k, i, (self.points[i] - q).norm_squared());
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.k_nearest_in(near, q, k, found);
                let bound = if found.len() < k {
                    f64::INFINITY
                } else {
                    found[found.len() - 1].1
                };
                if diff * diff <= bound {
                    self.k_nearest_in(far, q, k, found);
                }
            }
        }
    }

    /// Whether any point lies within distance `r` (inclusive) of `q`.
    pub fn any_within(&self, q: &Point3, r: f64) -> bool {
        self.nearest(q).is_some_and(|(_, d)| d <= r * r)
    }

    /// Nearest neighbor of each query point, computed in parallel; order of
    /// the result follows `queries`.
    pub fn nearest_all(&self, queries: &[Point3]) -> Vec<(usize, f64)> {
        queries
            .par_iter()
            .map(|q| self.nearest(q).expect("non-empty index"))
            .collect()
    }
}

fn push_candidate(found: &mut Vec<(usize, f64)>, k: usize, i: usize, d: f64) {
    let pos = found.partition_point(|&(j, e)| e < d || (e == d && j < i));
    if pos >= k {
        return;
    }
    found.insert(pos, (i, d));
    found.truncate(k);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen())).collect()
    }

    fn brute(points: &[Point3], q: &Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = (p - q).norm_squared();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn tree_matches_scan() {
        let pts = random_points(2000, 3);
        let index = NearestIndex::new(&pts);
        for q in random_points(500, 4) {
            assert_eq!(index.nearest(&q).unwrap(), brute(&pts, &q));
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        // many copies of the same grid make every query a tie
        let mut pts = Vec::new();
        for _ in 0..4 {
            for i in 0..5 {
                for j in 0..5 {
                    pts.push(Point3::new(i as f64, j as f64, 0.0));
                }
            }
        }
        let index = NearestIndex::new(&pts);
        for (i, p) in pts.iter().enumerate().skip(25) {
            assert_eq!(index.nearest(p).unwrap(), (i % 25, 0.0));
        }
        let q = Point3::new(0.5, 0.0, 0.0);
        assert_eq!(index.nearest(&q).unwrap().0, 0);
    }

    #[test]
    fn k_nearest_matches_sorting() {
        let pts = random_points(700, 5);
        let index = NearestIndex::new(&pts);
        for q in random_points(50, 6) {
            let mut all: Vec<(usize, f64)> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - q).norm_squared()))
                .collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            assert_eq!(index.k_nearest(&q, 9), all[..9].to_vec());
        }
    }

    #[test]
    fn empty_index() {
        let pts: Vec<Point3> = Vec::new();
        assert!(NearestIndex::new(&pts).nearest(&Point3::origin()).is_none());
    }
}
