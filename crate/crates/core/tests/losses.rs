use alphaforge_core::loss::{
    chamfer, edge_length_reg, laplacian_reg, log_chamfer, normal_consistency, normal_loss, total_loss, LossWeights,
    Objective,
};
use alphaforge_core::metrics::{f1_score, icp_align, normal_cosine, RigidTransform};
use alphaforge_core::sampling::{sample_surface, sample_surface_traced};
use alphaforge_core::synth::{icosphere, rotation, synth, Shape, SyntheticSpec};
use alphaforge_core::{Mesh, Point3, PointCloud, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn jittered_sphere(seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ico = icosphere(1);
    let v = ico
        .vertices()
        .iter()
        .map(|p| {
            p + Vec3::new(
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
            )
        })
        .collect();
    ico.with_positions(v).unwrap()
}

fn weights_only(k: usize) -> LossWeights {
    let mut w = LossWeights::zero();
    match k {
        0 => w.lambda1 = 1.0,
        1 => w.lambda2 = 1.0,
        2 => w.lambda3 = 1.0,
        3 => w.lambda4 = 1.0,
        4 => w.lambda5 = 1.0,
        _ => w.lambda6 = 1.0,
    }
    w
}

/// Central differences of the objective at a fixed sample layout against
/// its analytic gradient, relative to the largest numerical component.
fn objective_fd_error(mesh: &Mesh, gt: &PointCloud, baseline: &Mesh, w: LossWeights) -> f64 {
    let objective = Objective::new(gt, baseline, w, 400).unwrap();
    let layout = sample_surface_traced(mesh, 400, 3).unwrap();
    let (_, grad) = objective.value_and_grad_at(mesh, &layout).unwrap();
    let h = 1e-6;
    let mut v = mesh.vertices().to_vec();
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for i in 0..v.len() {
        for k in 0..3 {
            let x = v[i][k];
            v[i][k] = x + h;
            let up = objective
                .value_at(&mesh.with_positions(v.clone()).unwrap(), &layout)
                .unwrap()
                .total;
            v[i][k] = x - h;
            let down = objective
                .value_at(&mesh.with_positions(v.clone()).unwrap(), &layout)
                .unwrap()
                .total;
            v[i][k] = x;
            let numeric = (up - down) / (2.0 * h);
            err = err.max((numeric - grad[i][k]).abs());
            scale = scale.max(numeric.abs());
        }
    }
    err / scale.max(1e-12)
}

#[test]
fn objective_gradient_matches_differences_per_term_and_combined() {
    let gt = synth(&SyntheticSpec::new(Shape::Sphere, 300, 9)).unwrap().cloud;
    let baseline = icosphere(1);
    for seed in 0..3 {
        let mesh = jittered_sphere(seed);
        for k in 0..6 {
            let e = objective_fd_error(&mesh, &gt, &baseline, weights_only(k));
            assert!(e < 1e-4, "term {k} seed {seed}: {e}");
        }
        for w in [LossWeights::smooth(), LossWeights::pretty()] {
            let e = objective_fd_error(&mesh, &gt, &baseline, w);
            assert!(e < 1e-4, "combined seed {seed}: {e}");
        }
    }
}

#[test]
fn objective_terms_agree_with_free_functions() {
    let gt = synth(&SyntheticSpec::new(Shape::Sphere, 300, 9)).unwrap().cloud;
    let baseline = icosphere(1);
    let mesh = jittered_sphere(4);
    let mut w = LossWeights::smooth();
    w.lambda1 = 0.7;
    let b = total_loss(&mesh, &gt, &baseline, &w, 500, 8).unwrap();
    let samples = sample_surface(&mesh, 500, 8).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    assert!(close(b.logcmd, log_chamfer(&samples, &gt, w.mu).unwrap()));
    assert!(close(b.cmd, chamfer(&samples, &gt).unwrap()));
    assert!(close(b.laplacian_reg, laplacian_reg(&mesh, &baseline).unwrap()));
    assert!(close(b.edge_len, edge_length_reg(&mesh).unwrap()));
    assert!(close(b.normal_consistency, normal_consistency(&mesh)));
    assert!(close(b.normal_loss, normal_loss(&samples, &gt).unwrap()));
    let expected: f64 = w.lambdas().iter().zip(b.terms()).map(|(l, t)| l * t).sum();
    assert!(close(b.total, expected));
}

#[test]
fn regularizers_vanish_at_their_minimizers() {
    let m = icosphere(2);
    assert!(laplacian_reg(&m, &m).unwrap().abs() < 1e-24);
    assert!(
        normal_consistency(
            &Mesh::new(
                vec![
                    Point3::origin(),
                    Point3::new(1.0, 0.0, 0.0),
                    Point3::new(0.0, 1.0, 0.0),
                    Point3::new(1.0, 1.0, 0.0)
                ],
                vec![
                    alphaforge_core::TriangleFace::new(0, 1, 2),
                    alphaforge_core::TriangleFace::new(1, 3, 2)
                ],
            )
            .unwrap()
        )
        .abs()
            < 1e-15
    );
}

fn cloud(points: &[[f64; 3]]) -> PointCloud {
    PointCloud::new(points.iter().map(|a| Point3::new(a[0], a[1], a[2])).collect()).unwrap()
}

fn arb_cloud(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chamfer_and_f1_are_symmetric(a in arb_cloud(60), b in arb_cloud(60), r in 0.01..1.0f64) {
        let (p, q) = (cloud(&a), cloud(&b));
        prop_assert!((chamfer(&p, &q).unwrap() - chamfer(&q, &p).unwrap()).abs() <= 1e-12);
        prop_assert!(chamfer(&p, &q).unwrap() >= 0.0);
        prop_assert_eq!(chamfer(&p, &p).unwrap(), 0.0);
        let pq = f1_score(&p, &q, r).unwrap();
        let qp = f1_score(&q, &p, r).unwrap();
        prop_assert_eq!(pq.precision, qp.recall);
        prop_assert_eq!(pq.recall, qp.precision);
        prop_assert!((pq.f1 - qp.f1).abs() <= 1e-12);
        prop_assert!((0.0..=100.0).contains(&pq.f1));
        prop_assert_eq!(f1_score(&p, &p, r).unwrap().f1, 100.0);
    }

    #[test]
    fn metrics_invariant_under_rigid_motion(
        a in arb_cloud(40),
        b in arb_cloud(40),
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in -3.0..3.0f64,
    ) {
        prop_assume!(Vec3::from(axis).norm() > 1e-3);
        let t = RigidTransform {
            rotation: *rotation(Vec3::from(axis), angle).matrix(),
            translation: Vec3::new(0.3, -1.0, 2.0),
        };
        let (p, q) = (cloud(&a), cloud(&b));
        let (tp, tq) = (t.apply_cloud(&p), t.apply_cloud(&q));
        let c = chamfer(&p, &q).unwrap();
        prop_assert!((chamfer(&tp, &tq).unwrap() - c).abs() <= 1e-9 * c.max(1.0));
    }

    #[test]
    fn icp_never_increases_error(a in prop::collection::vec(prop::array::uniform3(-1.0..1.0f64), 3..60), angle in -0.8..0.8f64) {
        let p = cloud(&a);
        let t = RigidTransform {
            rotation: *rotation(Vec3::new(0.2, 1.0, -0.4), angle).matrix(),
            translation: Vec3::new(0.1, 0.0, -0.2),
        };
        let q = t.apply_cloud(&p);
        let r = icp_align(&p, &q, 30, 0.0).unwrap();
        prop_assert!(r.mse_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.transform.is_proper(1e-9));
    }
}

#[test]
fn normal_cosine_of_identical_samples_is_one() {
    let s = synth(&SyntheticSpec::new(Shape::Torus, 500, 1)).unwrap().cloud;
    assert!((normal_cosine(&s, &s).unwrap() - 1.0).abs() < 1e-12);
    assert!(normal_loss(&s, &s).unwrap().abs() < 1e-12);
}
