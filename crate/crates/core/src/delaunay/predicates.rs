//! Exact orientation and in-sphere tests.
//!
//! Both predicates are evaluated with adaptive-precision arithmetic (a
//! floating-point filter with a static error bound, falling back to exact
//! expansions), so their signs are always correct for the given doubles.
//! Cospherical ties are broken by a symbolic perturbation of the lifted
//! coordinate `|p|^2 - eps_i`, where lower point indices carry the dominant
//! perturbation. A point with a lower index is therefore infinitesimally
//! "more inside" every sphere.

use std::cmp::Ordering;

use robust::Coord3D;

use crate::mesh::Point3;

#[inline]
fn coord(p: &Point3) -> Coord3D<f64> {
    Coord3D { x: p.x, y: p.y, z: p.z }
}

/// Sign of `det[a - d; b - d; c - d]`. Positive when `d` lies on the side of
/// plane `abc` opposite to the normal `(b - a) x (c - a)`.
#[inline]
pub fn orient3d(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> Ordering {
    let v = robust::orient3d(coord(a), coord(b), coord(c), coord(d));
    v.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

/// Unperturbed in-sphere sign. Positive when `e` lies strictly inside the
/// sphere through `a, b, c, d`, which must be positively oriented.
#[inline]
pub fn insphere_exact(a: &Point3, b: &Point3, c: &Point3, d: &Point3, e: &Point3) -> Ordering {
    let v = robust::insphere(coord(a), coord(b), coord(c), coord(d), coord(e));
    v.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

/// In-sphere test with symbolic perturbation; never returns `Equal` for five
/// distinct points of which the first four are affinely independent.
///
/// `ids` are the input indices of `pts` (same order: the tetrahedron's four
/// vertices, then the query point).
pub fn insphere_sos(pts: [&Point3; 5], ids: [usize; 5]) -> Ordering {
    let s = insphere_exact(pts[0], pts[1], pts[2], pts[3], pts[4]);
    if s != Ordering::Equal {
        return s;
    }
    // The 5x5 lifted determinant is linear in each lifted coordinate; the
    // coefficient of row r is (-1)^(r+4) times the orientation of the other
    // four rows (rows counted from 1). With lifts |p|^2 - eps_i the
    // perturbed sign is that of -coefficient for the first row, in index
    // order, whose coefficient is non-zero.
    let mut rows = [0usize, 1, 2, 3, 4];
    rows.sort_by_key(|&r| ids[r]);
    for r in rows {
        let others: Vec<&Point3> = (0..5).filter(|&k| k != r).map(|k| pts[k]).collect();
        let o = orient3d(others[0], others[1], others[2], others[3]);
        if o == Ordering::Equal {
            continue;
        }
        // row number (1-based) is r + 1; cofactor sign (-1)^(r + 1 + 4)
        let cofactor = if (r + 5) % 2 == 0 { o } else { o.reverse() };
        return cofactor.reverse();
    }
    Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    /// Exact 5x5 lifted determinant for integer points with integer lifts.
    fn lifted_det(pts: &[[i128; 3]; 5], lifts: &[i128; 5]) -> i128 {
        let m: Vec<[i128; 5]> = (0..5).map(|i| [pts[i][0], pts[i][1], pts[i][2], lifts[i], 1]).collect();
        det(&m)
    }

    fn det(m: &[[i128; 5]]) -> i128 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut total = 0;
        for col in 0..n {
            let minor: Vec<[i128; 5]> = m[1..]
                .iter()
                .map(|row| {
                    let mut r = [0; 5];
                    let mut k = 0;
                    for (j, &v) in row.iter().enumerate().take(n) {
                        if j != col {
                            r[k] = v;
                            k += 1;
                        }
                    }
                    r
                })
                .collect();
            let sign = if col % 2 == 0 { 1 } else { -1 };
            total += sign * m[0][col] * det(&minor);
        }
        total
    }

    #[test]
    fn unperturbed_sign_matches_lifted_determinant() {
        let pts = [[0, 0, 0], [3, 0, 0], [0, 3, 0], [0, 0, 3], [1, 1, 1]];
        let f: Vec<Point3> = pts.iter().map(|q| p(q[0] as f64, q[1] as f64, q[2] as f64)).collect();
        // make the tetrahedron positively oriented
        let (a, b) = if orient3d(&f[0], &f[1], &f[2], &f[3]) == Ordering::Greater {
            (0, 1)
        } else {
            (1, 0)
        };
        let order = [a, b, 2, 3, 4];
        let q: [[i128; 3]; 5] = std::array::from_fn(|i| pts[order[i]]);
        let lifts: [i128; 5] = std::array::from_fn(|i| q[i].iter().map(|c| c * c).sum());
        let exact = lifted_det(&q, &lifts).cmp(&0);
        let got = insphere_exact(&f[order[0]], &f[order[1]], &f[order[2]], &f[order[3]], &f[4]);
        assert_eq!(got, exact);
        assert_eq!(got, Ordering::Greater);
    }

    #[test]
    fn perturbation_matches_first_nonzero_lift_coefficient() {
        // cube corners are cospherical; every 5-subset is a tie
        let corners: Vec<[i128; 3]> = (0..8)
            .map(|i| [(i & 1) as i128, ((i >> 1) & 1) as i128, ((i >> 2) & 1) as i128])
            .collect();
        let mut checked = 0;
        for combo in 0..(1u32 << 8) {
            if combo.count_ones() != 5 {
                continue;
            }
            let idx: Vec<usize> = (0..8).filter(|i| combo & (1 << i) != 0).collect();
            for query in 0..5 {
                let mut order: Vec<usize> = idx.iter().copied().filter(|&i| i != idx[query]).collect();
                let fp = |i: usize| p(corners[i][0] as f64, corners[i][1] as f64, corners[i][2] as f64);
                let o = orient3d(&fp(order[0]), &fp(order[1]), &fp(order[2]), &fp(order[3]));
                if o == Ordering::Equal {
                    continue;
                }
                if o == Ordering::Less {
                    order.swap(0, 1);
                }
                order.push(idx[query]);
                let q: [[i128; 3]; 5] = std::array::from_fn(|i| corners[order[i]]);
                let base: [i128; 5] = std::array::from_fn(|i| q[i].iter().map(|c| c * c).sum());
                assert_eq!(lifted_det(&q, &base), 0);
                // Independent route: lift each point down by one in turn, in
                // index order, and read the sign of the determinant change.
                let mut by_index: Vec<usize> = (0..5).collect();
                by_index.sort_by_key(|&r| order[r]);
                let mut expected = Ordering::Equal;
                for r in by_index {
                    let mut lifts = base;
                    lifts[r] -= 1;
                    let d = lifted_det(&q, &lifts);
                    if d != 0 {
                        expected = d.cmp(&0);
                        break;
                    }
                }
                let fpts: Vec<Point3> = order.iter().map(|&i| fp(i)).collect();
                let got = insphere_sos(
                    [&fpts[0], &fpts[1], &fpts[2], &fpts[3], &fpts[4]],
                    [order[0], order[1], order[2], order[3], order[4]],
                );
                assert_eq!(got, expected, "order {order:?}");
                assert_ne!(got, Ordering::Equal);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }
}
