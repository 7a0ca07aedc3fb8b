use std::collections::BTreeSet;

use alphaforge_core::alphashape::{filter_tetrahedra, triangulate, triangulate_complex};
use alphaforge_core::delaunay::{delaunay_complex, tet_volume};
use alphaforge_core::mesh::{boundary_edges, euler_characteristic, face_normals, nonmanifold_edges};
use alphaforge_core::refine::subdivide;
use alphaforge_core::synth::{icosphere, rotation, stacked_mesh, synth, torus_mesh, Shape, SyntheticSpec};
use alphaforge_core::{Mesh, Point3, PointCloud, Vec3};
use proptest::prelude::*;

fn cloud_strategy(min: usize, max: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), min..max)
        .prop_map(|v| v.into_iter().map(|a| Point3::new(a[0], a[1], a[2])).collect())
}

/// Squared circumradius and centre from the normal equations, solved with
/// nalgebra's LU rather than the library's closed form.
fn circumsphere(p: [Point3; 4]) -> (Point3, f64) {
    let m = nalgebra::Matrix3::from_rows(&[
        (p[1] - p[0]).transpose(),
        (p[2] - p[0]).transpose(),
        (p[3] - p[0]).transpose(),
    ]);
    let rhs = Vec3::new(
        (p[1] - p[0]).norm_squared(),
        (p[2] - p[0]).norm_squared(),
        (p[3] - p[0]).norm_squared(),
    ) * 0.5;
    let x = m.lu().solve(&rhs).expect("non-degenerate tetrahedron");
    (p[0] + x, x.norm_squared())
}

fn tet_sets(points: &[Point3]) -> BTreeSet<[usize; 4]> {
    delaunay_complex(&PointCloud::new(points.to_vec()).unwrap())
        .unwrap()
        .tetrahedra
        .iter()
        .map(|t| {
            let mut v = t.vertices;
            v.sort();
            v
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delaunay_spheres_are_empty(points in cloud_strategy(5, 40)) {
        let dc = delaunay_complex(&PointCloud::new(points.clone()).unwrap()).unwrap();
        prop_assert!(!dc.tetrahedra.is_empty());
        for t in &dc.tetrahedra {
            let corners = t.vertices.map(|i| points[i]);
            prop_assert!(tet_volume(&corners[0], &corners[1], &corners[2], &corners[3]) > 0.0);
            let (c, r2) = circumsphere(corners);
            for (k, q) in points.iter().enumerate() {
                if !t.vertices.contains(&k) {
                    prop_assert!((q - c).norm_squared() >= r2 * (1.0 - 1e-9));
                }
            }
        }
        // Every face is shared by at most two tetrahedra.
        let mut faces = std::collections::HashMap::new();
        for t in &dc.tetrahedra {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| t.vertices[k]).collect();
                f.sort();
                *faces.entry(f).or_insert(0) += 1;
            }
        }
        prop_assert!(faces.values().all(|&c| c <= 2));
    }

    #[test]
    fn delaunay_is_translation_invariant(
        grid in prop::collection::vec(prop::array::uniform3(-(1i32 << 20)..(1 << 20)), 5..30),
        t in prop::array::uniform3(-8i32..8),
    ) {
        // Multiples of 2^-20 in [-1, 1] shifted by small integers stay exact
        // in binary, so the predicates see the same configuration.
        let s = (-20f64).exp2();
        let points: Vec<Point3> = grid.iter().map(|g| Point3::new(g[0] as f64 * s, g[1] as f64 * s, g[2] as f64 * s)).collect();
        let shift = Vec3::new(t[0] as f64, t[1] as f64, t[2] as f64);
        let moved: Vec<Point3> = points.iter().map(|p| p + shift).collect();
        prop_assert_eq!(tet_sets(&points), tet_sets(&moved));
    }

    #[test]
    fn alpha_complex_grows_with_tau(points in cloud_strategy(8, 40), a in 0.05..2.0f64, b in 0.05..2.0f64) {
        let dc = delaunay_complex(&PointCloud::new(points).unwrap()).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let small = filter_tetrahedra(&dc, lo);
        let large = filter_tetrahedra(&dc, hi);
        prop_assert!(small.len() <= large.len());
        prop_assert!(small.iter().all(|t| large.contains(t) && t.circumradius <= lo));
    }

    #[test]
    fn large_tau_gives_convex_hull(points in cloud_strategy(8, 40)) {
        let dc = delaunay_complex(&PointCloud::new(points).unwrap()).unwrap();
        let surface = triangulate_complex(&dc, dc.max_circumradius() * 2.0).unwrap();
        prop_assert_eq!(euler_characteristic(&surface.mesh), 2);
        prop_assert!(boundary_edges(&surface.mesh).is_empty());
        prop_assert!((surface.mesh.signed_volume() - dc.volume()).abs() <= 1e-9 * dc.volume());
    }

    #[test]
    fn face_normals_follow_rigid_motions(
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in -3.0..3.0f64,
        t in prop::array::uniform3(-5.0..5.0f64),
    ) {
        prop_assume!(Vec3::from(axis).norm() > 1e-3);
        let r = rotation(Vec3::from(axis), angle);
        let mesh = torus_mesh(1.0, 0.4, 12, 8);
        let moved = mesh.map_vertices(|p| r * p + Vec3::from(t)).unwrap();
        for (a, b) in face_normals(&mesh).unwrap().iter().zip(face_normals(&moved).unwrap()) {
            prop_assert!((r * a - b).norm() < 1e-9);
        }
        prop_assert!((mesh.signed_volume() - moved.signed_volume()).abs() < 1e-9);
    }
}

#[test]
fn cospherical_lattice_is_resolved() {
    let mut points = Vec::new();
    for x in 0..3 {
        for y in 0..3 {
            for z in 0..3 {
                points.push(Point3::new(x as f64, y as f64, z as f64));
            }
        }
    }
    let dc = delaunay_complex(&PointCloud::new(points.clone()).unwrap()).unwrap();
    assert!((dc.volume() - 8.0).abs() < 1e-12);
    for t in &dc.tetrahedra {
        let c = t.vertices.map(|i| points[i]);
        assert!(tet_volume(&c[0], &c[1], &c[2], &c[3]) > 0.0);
        let (centre, r2) = circumsphere(c);
        assert!(points.iter().all(|q| (q - centre).norm_squared() >= r2 * (1.0 - 1e-12)));
    }
}

fn closed_with_characteristic(mesh: &Mesh, chi: i64) {
    assert_eq!(euler_characteristic(mesh), chi);
    assert!(boundary_edges(mesh).is_empty());
    assert!(nonmanifold_edges(mesh).is_empty());
}

#[test]
fn subdivision_preserves_topology() {
    for (mesh, chi) in [
        (icosphere(1), 2),
        (torus_mesh(1.0, 0.3, 10, 6), 0),
        (stacked_mesh(), -2),
    ] {
        let fine = subdivide(&mesh);
        closed_with_characteristic(&fine, chi);
        assert_eq!(fine.faces().len(), 4 * mesh.faces().len());
        assert_eq!(fine.vertices().len(), mesh.vertices().len() + mesh.edges().len());
        assert!((fine.signed_volume() - mesh.signed_volume()).abs() <= 0.5 * mesh.signed_volume().abs());
    }
}

#[test]
fn synthetic_shapes_reconstruct_with_their_genus() {
    for shape in Shape::ALL {
        let s = synth(&SyntheticSpec::new(shape, 3000, 17)).unwrap();
        closed_with_characteristic(&s.reference, shape.euler_characteristic());
        let mesh = triangulate(&s.cloud, shape.recommended_tau()).unwrap();
        closed_with_characteristic(&mesh, shape.euler_characteristic());
        // Outward orientation: positive enclosed volume.
        assert!(mesh.signed_volume() > 0.0, "{shape}");
    }
}

#[test]
fn too_small_tau_removes_surface() {
    let s = synth(&SyntheticSpec::new(Shape::Sphere, 500, 2)).unwrap();
    assert!(triangulate(&s.cloud, 1e-3).is_err());
}
