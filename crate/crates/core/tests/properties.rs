use pnsm_core::field::bump_weight;
use pnsm_core::generators::{generate, ScenarioCase, ScenarioSpec};
use pnsm_core::metrics::{mse, silhouette_scores};
use pnsm_core::{fit_nested, precompute_frames, FieldParams, FitConfig, LocalField, PointCloud};
use pnsm_testkit as oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let (w, x, y, z) = loop {
        let q: [f64; 4] = [0.0; 4].map(|_| rng.random_range(-1.0..1.0));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            break (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        }
    };
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn apply(q: &[[f64; 3]; 3], shift: &[f64; 3], p: &[f64]) -> Vec<f64> {
    (0..3).map(|a| (0..3).map(|b| q[a][b] * p[b]).sum::<f64>() + shift[a]).collect()
}

fn curve_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let t: f64 = rng.random_range(0.0..2.0);
            vec![t, t.sin() + 0.1 * rng.random_range(-1.0..1.0), 0.2 * t * t + 0.05 * rng.random_range(-1.0..1.0)]
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn weights_are_c2_across_the_boundary() {
    for r in [0.5, 1.0, 6.0] {
        let f = |d: f64| bump_weight(d * d, r, 3);
        let h = 1e-4;
        let inside = oracle::one_sided_derivatives(f, r, -h);
        let outside = oracle::one_sided_derivatives(f, r, h);
        for (a, b) in inside.iter().zip(&outside) {
            assert!((a - b).abs() <= 1e-6, "r={r}: {inside:?} vs {outside:?}");
        }
        // The same stencil recovers the analytic derivatives in the interior.
        let d0 = r / 2.0;
        let u = 1.0 - d0 * d0 / (r * r);
        let du = -2.0 * d0 / (r * r);
        let exact = [u * u * u, 3.0 * u * u * du, 6.0 * u * du * du - 6.0 * u * u / (r * r)];
        let est = oracle::one_sided_derivatives(f, d0, -h);
        for (a, b) in est.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{est:?} vs {exact:?}");
        }
        // A squared bump is only C¹, and the check notices.
        let g = |d: f64| bump_weight(d * d, r, 2);
        let gin = oracle::one_sided_derivatives(g, r, -h);
        assert!(gin[2].abs() > 1e-3);
    }
}

#[test]
fn bias_sum_is_rigid_motion_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pts = curve_cloud(&mut rng, 80);
    let r = 0.8;
    let cloud = PointCloud::from_rows(&pts).unwrap();
    let frames = precompute_frames(&cloud, r).unwrap();
    let field = LocalField::new(&cloud, &frames, FieldParams::new(r)).unwrap();
    let queries: Vec<Vec<f64>> = (0..5)
        .map(|i| pts[i * 7].iter().map(|x| x + rng.random_range(-0.05..0.05)).collect())
        .collect();

    for _ in 0..100 {
        let q = random_rotation(&mut rng);
        let shift = [0.0; 3].map(|_: f64| rng.random_range(-5.0..5.0));
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| apply(&q, &shift, p)).collect();
        let mcloud = PointCloud::from_rows(&moved).unwrap();
        let mframes = precompute_frames(&mcloud, r).unwrap();
        let mfield = LocalField::new(&mcloud, &mframes, FieldParams::new(r)).unwrap();
        for z in &queries {
            for k in 1..=2 {
                let base = field.evaluate(z, k).unwrap();
                let image = mfield.evaluate(&apply(&q, &shift, z), k).unwrap();
                let rotated = apply(&q, &[0.0; 3], &base.bias_sum);
                assert!(max_abs_diff(&rotated, &image.bias_sum) < 1e-8);
                assert!(max_abs_diff(&apply(&q, &shift, &base.mu), &image.mu) < 1e-8);
                for (u, v) in base.directions.iter().zip(&image.directions) {
                    let qu = apply(&q, &[0.0; 3], u);
                    let same = max_abs_diff(&qu, v);
                    let flipped = qu.iter().zip(v).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
                    assert!(same.min(flipped) < 1e-8);
                }
                for ((i, a), (j, b)) in base.weights.iter().zip(&image.weights) {
                    assert_eq!(i, j);
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn frame_signs_do_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pts = curve_cloud(&mut rng, 60);
    let r = 0.9;
    let cloud = PointCloud::from_rows(&pts).unwrap();
    let frames = precompute_frames(&cloud, r).unwrap();
    let mut flipped = frames.clone();
    for f in flipped.iter_mut() {
        for k in 0..3 {
            if rng.random_bool(0.5) {
                f.flip_sign(k);
            }
        }
    }
    let a = LocalField::new(&cloud, &frames, FieldParams::new(r)).unwrap();
    let b = LocalField::new(&cloud, &flipped, FieldParams::new(r)).unwrap();
    for p in pts.iter().take(30) {
        for k in 1..=2 {
            let ea = a.evaluate(p, k).unwrap();
            let eb = b.evaluate(p, k).unwrap();
            assert!(max_abs_diff(&ea.bias_sum, &eb.bias_sum) < 1e-12);
            assert!(max_abs_diff(&ea.mu, &eb.mu) < 1e-12);
        }
    }
}

fn small_fit(case: ScenarioCase, n: usize) -> (FitConfig, pnsm_core::NestedResult) {
    let spec = ScenarioSpec::new(case, 3).with_n(n);
    let sample = generate(&spec).unwrap();
    let config = FitConfig::all_dims(0.5, case.embedding());
    let result = fit_nested(&sample.cloud, &config).unwrap();
    (config, result)
}

#[test]
fn fit_is_deterministic() {
    let (_, a) = small_fit(ScenarioCase::EuclidCircle, 300);
    let (_, b) = small_fit(ScenarioCase::EuclidCircle, 300);
    assert_eq!(a, b);
}

#[test]
fn lower_levels_stay_on_higher_levels() {
    for case in [ScenarioCase::EuclidCircle, ScenarioCase::TorusCircleMajor] {
        let (config, result) = small_fit(case, 400);
        let emb: Vec<Vec<f64>> = result.embedded.points().map(|p| p.to_vec()).collect();
        let dprime = config.embedding.ambient_dim();
        for (pos, level) in result.levels.iter().enumerate() {
            let fixed: Vec<Vec<f64>> = level.fixed_points.points().map(|p| p.to_vec()).collect();
            for coarser in &result.levels[..pos] {
                let res = oracle::fixed_point_check(&fixed, &emb, 0.5, 3, dprime - coarser.d);
                for (i, v) in res.iter().enumerate() {
                    if level.converged(i) {
                        assert!(*v <= 2.0 * config.epsilon, "{case:?} d={} vs {}: {v}", level.d, coarser.d);
                    }
                }
            }
        }
    }
}

#[test]
fn residual_grows_as_dimension_drops() {
    let (_, result) = small_fit(ScenarioCase::EuclidLine, 400);
    let errs: Vec<f64> = result
        .levels
        .iter()
        .map(|l| mse(&result.embedded, &l.projected).unwrap())
        .collect();
    assert!(errs.windows(2).all(|w| w[0] <= w[1]), "{errs:?}");
}

proptest! {
    #[test]
    fn weights_form_a_convex_combination(
        xs in prop::collection::vec(-1.0f64..1.0, 1..30),
        z in -0.5f64..0.5,
        r in 0.6f64..3.0,
    ) {
        let cloud = PointCloud::new(xs.clone(), 1).unwrap();
        let frames = precompute_frames(&cloud, r).unwrap();
        let field = LocalField::new(&cloud, &frames, FieldParams::new(r)).unwrap();
        if let Ok(w) = field.weights_at(&[z]) {
            let total: f64 = w.iter().map(|(_, a)| a).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|(_, a)| *a >= 0.0));
            let mu: f64 = w.iter().map(|(i, a)| a * xs[*i]).sum();
            let lo = w.iter().map(|(i, _)| xs[*i]).fold(f64::INFINITY, f64::min);
            let hi = w.iter().map(|(i, _)| xs[*i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mu >= lo - 1e-12 && mu <= hi + 1e-12);
        }
    }

    #[test]
    fn silhouette_is_bounded_and_order_free(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0i64..3), 3..25),
        seed in any::<u64>(),
    ) {
        let labels: Vec<i64> = pts.iter().map(|p| p.2).collect();
        prop_assume!(labels.iter().any(|&l| l != labels[0]));
        let coords: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).collect();
        let cloud = PointCloud::new(coords, 2).unwrap();
        let scores = silhouette_scores(&cloud, &labels).unwrap();
        prop_assert!(scores.iter().all(|s| (-1.0..=1.0).contains(s)));

        let mut order: Vec<usize> = (0..pts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled = cloud.select(&order);
        let shuffled_labels: Vec<i64> = order.iter().map(|&i| labels[i]).collect();
        let again = silhouette_scores(&shuffled, &shuffled_labels).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!((mean(&scores) - mean(&again)).abs() < 1e-12);
    }

    #[test]
    fn mse_is_zero_only_for_equal_clouds(
        a in prop::collection::vec(-1.0f64..1.0, 3..30),
        idx in any::<prop::sample::Index>(),
        delta in 1e-6f64..1.0,
    ) {
        let n = a.len() / 3 * 3;
        prop_assume!(n >= 3);
        let a = PointCloud::new(a[..n].to_vec(), 3).unwrap();
        prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let mut moved = a.as_slice().to_vec();
        moved[idx.index(n)] += delta;
        let b = PointCloud::new(moved, 3).unwrap();
        prop_assert!(mse(&a, &b).unwrap() > 0.0);
    }
}
