use pnsm_core::generators::{generate, ScenarioCase, ScenarioSpec};
use pnsm_core::metrics::{avg_silhouette, geodesic_variation, knn_graph, mse};
use pnsm_core::{precompute_frames, project_point, EmbeddingSpec, FieldParams, FitConfig, LocalField, PointCloud};
use pnsm_testkit as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rows(cloud: &PointCloud) -> Vec<Vec<f64>> {
    cloud.points().map(|p| p.to_vec()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn noiseless_line(n: usize) -> PointCloud {
    let mut spec = ScenarioSpec::new(ScenarioCase::EuclidLine, 11).with_n(n);
    spec.sigma1 = 0.0;
    spec.sigma2 = 0.0;
    generate(&spec).unwrap().cloud
}

fn noisy_curve(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let t: f64 = rng.random_range(0.0..2.0);
            vec![
                t,
                (1.3 * t).sin() + 0.08 * rng.random_range(-1.0..1.0),
                0.3 * t * t + 0.05 * rng.random_range(-1.0..1.0),
            ]
        })
        .collect()
}

fn main_bias(cloud: &PointCloud, r: f64, z: &[f64], k: usize) -> pnsm_core::Result<Vec<f64>> {
    let frames = precompute_frames(cloud, r)?;
    let field = LocalField::new(cloud, &frames, FieldParams::new(r))?;
    field.evaluate(z, k).map(|e| e.bias_sum)
}

#[test]
fn bias_sum_vanishes_at_own_mean() {
    let pts = vec![
        vec![1.0, 0.2, 0.0],
        vec![-1.0, -0.2, 0.0],
        vec![0.3, -0.5, 0.1],
        vec![-0.3, 0.5, -0.1],
    ];
    let cloud = PointCloud::from_rows(&pts).unwrap();
    let z = [0.0, 0.0, 0.0];
    for k in 1..=2 {
        let main = main_bias(&cloud, 3.0, &z, k).unwrap();
        let reference = oracle::bias_sum(&z, &pts, 3.0, 3, k).unwrap();
        assert!(max_abs_diff(&main, &reference) < 1e-8);
        assert!(main.iter().all(|x| x.abs() < 1e-14), "{main:?}");
    }
}

#[test]
fn full_codimension_on_shared_basis() {
    // Points on the coordinate axes: every local frame is the standard basis.
    let pts = vec![
        vec![4.0, 0.0, 0.0],
        vec![-4.0, 0.0, 0.0],
        vec![0.0, 1.5, 0.0],
        vec![0.0, -1.5, 0.0],
        vec![0.0, 0.0, 0.3],
        vec![0.0, 0.0, -0.3],
        vec![0.0, 0.0, 0.0],
    ];
    let cloud = PointCloud::from_rows(&pts).unwrap();
    let z = [0.7, -0.2, 0.4];
    let frames = precompute_frames(&cloud, 50.0).unwrap();
    let field = LocalField::new(&cloud, &frames, FieldParams::new(50.0)).unwrap();
    let eval = field.evaluate(&z, 3).unwrap();
    let reference = oracle::bias_sum(&z, &pts, 50.0, 3, 3).unwrap();
    assert!(max_abs_diff(&eval.bias_sum, &reference) < 1e-8);
    let resid: Vec<f64> = z.iter().zip(&eval.mu).map(|(a, m)| a - m).collect();
    assert!(max_abs_diff(&eval.bias_sum, &resid) < 1e-12);
}

#[test]
fn line_offset_is_captured_by_normal_directions() {
    let cloud = noiseless_line(64);
    let z = [0.5, 0.1, 0.0];
    let main = main_bias(&cloud, 0.5, &z, 2).unwrap();
    let reference = oracle::bias_sum(&z, &rows(&cloud), 0.5, 3, 2).unwrap();
    assert!(max_abs_diff(&main, &reference) < 1e-8);
    assert!(max_abs_diff(&main, &[0.0, 0.1, 0.0]) < 0.02, "{main:?}");
}

#[test]
fn random_clouds_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(10..=64);
        let pts = noisy_curve(&mut rng, n);
        let cloud = PointCloud::from_rows(&pts).unwrap();
        let r = rng.random_range(0.6..1.5);
        let z = pts[rng.random_range(0..n)]
            .iter()
            .map(|x| x + rng.random_range(-0.1..0.1))
            .collect::<Vec<_>>();
        for k in 1..=2 {
            match (main_bias(&cloud, r, &z, k), oracle::bias_sum(&z, &pts, r, 3, k)) {
                (Ok(a), Ok(b)) => assert!(max_abs_diff(&a, &b) < 1e-8, "{a:?} vs {b:?}"),
                (Err(pnsm_core::Error::AmbiguousDirection { .. }), Err(oracle::OracleError::AmbiguousDirection)) => {}
                (a, b) => panic!("disagreement: {a:?} vs {b:?}"),
            }
        }
    }
}

#[test]
fn empty_ball_is_reported_by_both() {
    let cloud = noiseless_line(32);
    let z = [0.5, 3.0, 0.0];
    assert!(matches!(main_bias(&cloud, 0.5, &z, 1), Err(pnsm_core::Error::EmptyNeighborhood)));
    assert_eq!(oracle::bias_sum(&z, &rows(&cloud), 0.5, 3, 1), Err(oracle::OracleError::EmptyBall));
}

#[test]
fn projection_examples_on_noiseless_line() {
    let cloud = noiseless_line(2000);
    let frames = precompute_frames(&cloud, 0.5).unwrap();
    let field = LocalField::new(&cloud, &frames, FieldParams::new(0.5)).unwrap();
    let config = FitConfig::new(0.5, vec![1], EmbeddingSpec::Euclidean { dim: 3 });

    let on = project_point(&[0.5, 0.0, 0.0], &field, &config, 1).unwrap();
    assert!(on.converged());
    assert!(on.iterations <= 2);
    assert!(max_abs_diff(&on.point, &[0.5, 0.0, 0.0]) < 1e-6);

    let off = project_point(&[0.5, 0.08, 0.03], &field, &config, 1).unwrap();
    assert!(off.converged());
    let dist: f64 = off.point.iter().zip([0.5, 0.0, 0.0]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    assert!(dist < 0.02, "{:?}", off.point);

    assert!(project_point(&[0.5, 0.0, 0.0], &field, &config, 3).is_err());
}

#[test]
fn fixed_point_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts = noisy_curve(&mut rng, 60);
    let cloud = PointCloud::from_rows(&pts).unwrap();
    let r = 0.9;
    let frames = precompute_frames(&cloud, r).unwrap();
    let field = LocalField::new(&cloud, &frames, FieldParams::new(r)).unwrap();
    let config = FitConfig::new(r, vec![1], EmbeddingSpec::Euclidean { dim: 3 });
    let eps = config.epsilon;

    let mut outputs = Vec::new();
    for p in &pts {
        let proj = project_point(p, &field, &config, 1).unwrap();
        if proj.converged() {
            outputs.push(proj.point);
        }
    }
    assert!(outputs.len() > 50);
    let residuals = oracle::fixed_point_check(&outputs, &pts, r, 3, 2);
    for res in &residuals {
        assert!(*res <= eps, "residual {res}");
    }

    // Nudge along the least-variance aggregated direction.
    for z in outputs.iter().take(20) {
        let u = field.evaluate(z, 1).unwrap().directions[0].clone();
        let moved: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + 10.0 * eps * b).collect();
        let res = oracle::fixed_point_check(&[moved], &pts, r, 3, 2)[0];
        assert!(res > eps, "residual {res}");
    }
}

#[test]
fn huge_radius_matches_linear_residual() {
    // Axis-symmetric cloud whose local frames all equal the global axes.
    let mut pts = Vec::new();
    for (axis, mags) in [(0, [0.3, 0.2]), (1, [1.5, 1.0]), (2, [5.0, 4.0])] {
        for m in mags {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; 3];
                p[axis] = s * m;
                pts.push(p);
            }
        }
    }
    let n = pts.len() as f64;
    let mean: Vec<f64> = (0..3).map(|a| pts.iter().map(|p| p[a]).sum::<f64>() / n).collect();
    let cov: Vec<Vec<f64>> = (0..3)
        .map(|a| (0..3).map(|b| pts.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / n).collect())
        .collect();
    let (_, axes) = oracle::jacobi_eigen(&cov);

    let r = 1e4;
    let cloud = PointCloud::from_rows(&pts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..25 {
        let z: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        for k in 1..=2 {
            let mut linear = vec![0.0; 3];
            for v in axes.iter().take(k) {
                let c: f64 = (0..3).map(|a| v[a] * (z[a] - mean[a])).sum();
                for a in 0..3 {
                    linear[a] += c * v[a];
                }
            }
            let reference = oracle::bias_sum(&z, &pts, r, 3, k).unwrap();
            let main = main_bias(&cloud, r, &z, k).unwrap();
            assert!(max_abs_diff(&reference, &linear) < 1e-6);
            assert!(max_abs_diff(&main, &linear) < 1e-6);
        }
    }
}

#[test]
fn silhouette_matches_definition_on_all_labelings() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 2..=6usize {
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-5.0..5.0)]).collect();
        let total = 3usize.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let labels: Vec<i64> = (0..n)
                .map(|_| {
                    let l = (c % 3) as i64;
                    c /= 3;
                    l
                })
                .collect();
            let distinct = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
            let cloud = PointCloud::from_rows(&xs).unwrap().with_labels(labels.clone()).unwrap();
            if distinct < 2 {
                assert!(avg_silhouette(&cloud).is_err());
                continue;
            }
            let main = avg_silhouette(&cloud).unwrap();
            assert!((main - oracle::silhouette(&xs, &labels)).abs() < 1e-12);
        }
    }
}

#[test]
fn geodesic_variation_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let n = rng.random_range(2..=32);
        let dim = rng.random_range(1..=4);
        let k = rng.random_range(1..=6);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let cloud = PointCloud::from_rows(&pts).unwrap();
        let main = geodesic_variation(&cloud, k).unwrap().value;
        let reference = oracle::geodesic_variation(&pts, k);
        assert!((main - reference).abs() <= 1e-10 * reference.max(1.0), "{main} vs {reference}");
    }
}

#[test]
fn graph_edges_are_euclidean() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts: Vec<Vec<f64>> = (0..30).map(|_| (0..2).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let cloud = PointCloud::from_rows(&pts).unwrap();
    for (i, edges) in knn_graph(&cloud, 4).iter().enumerate() {
        for &(j, w) in edges {
            assert!((w - oracle::distance(&pts[i], &pts[j])).abs() < 1e-15);
        }
    }
}

#[test]
fn mse_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let n = rng.random_range(1..40);
        let a: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let main = mse(&PointCloud::from_rows(&a).unwrap(), &PointCloud::from_rows(&b).unwrap()).unwrap();
        assert!((main - oracle::mse(&a, &b)).abs() < 1e-12);
    }
}
