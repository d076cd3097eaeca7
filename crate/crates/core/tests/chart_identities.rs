//! Cross-checks of the chart pipeline: background independence, coordinate
//! invariance, vanishing scalar-curvature Laplacian on homogeneous examples,
//! and the contracted Bianchi identity on random metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ricscan_core::catalog;
use ricscan_core::chart::{self, ChartMetric, SymTensorField};
use ricscan_core::expr::{parse_expression, Expr};
use ricscan_core::verify::{random_point_in, random_polynomial_metric};

#[test]
fn background_independence_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let dim = 2 + case % 2;
        let g = random_polynomial_metric(&mut rng, dim, 0.12, 3);
        let g_bar = random_polynomial_metric(&mut rng, dim, 0.12, 3);
        let point = random_point_in(&mut rng, &g);
        let via = chart::ricci_via_background(&g, &g_bar, &point).unwrap();
        let direct = g.curvature_report(&point, false).unwrap().ricci;
        worst = worst.max((via - direct).abs().max());
    }
    assert!(worst < 1e-7, "worst deviation {worst}");
}

#[test]
fn coordinate_invariance_between_opposite_stereographic_charts() {
    // the same geometric point of the round 3-sphere seen from charts at
    // opposite poles: chart coordinates are related by inversion
    let comp = parse_expression("4/(1+x1^2+x2^2+x3^2)^2", 3).unwrap();
    let wide_chart = ChartMetric::new(
        3,
        vec![(-4.0, 4.0); 3],
        SymTensorField::from_fn(3, |i, j| {
            if i == j {
                comp.clone()
            } else {
                Expr::Number(0.0)
            }
        }),
    )
    .unwrap();

    let y = [0.3, 0.2, 0.1];
    let norm_sq: f64 = y.iter().map(|v| v * v).sum();
    let inverted: Vec<f64> = y.iter().map(|v| v / norm_sq).collect();

    let north = wide_chart.curvature_report(&y, true).unwrap();
    let south = wide_chart.curvature_report(&inverted, true).unwrap();
    assert!((north.scalar - south.scalar).abs() < 1e-8);
    for (a, b) in north.ricci_eigs.iter().zip(&south.ricci_eigs) {
        assert!((a - b).abs() < 1e-8);
    }
    assert!((north.traceless_norm_sq - south.traceless_norm_sq).abs() < 1e-8);
    assert!(north.laplacian_scalar.unwrap().abs() < 1e-8);
    assert!(south.laplacian_scalar.unwrap().abs() < 1e-8);
}

#[test]
fn laplacian_of_scalar_curvature_vanishes_on_catalog_charts() {
    let charts = [
        catalog::sphere_chart(2),
        catalog::sphere_chart(3),
        catalog::sphere_chart(4),
        catalog::hyperbolic_chart(2, 1.0),
        catalog::hyperbolic_chart(3, 2.0),
        catalog::product_space_form(2, 2, 1.0).unwrap().0,
        catalog::product_space_form(2, 2, 5.0).unwrap().0,
        catalog::product_space_form(3, 2, 1.0).unwrap().0,
        catalog::flat_torus_chart(),
    ];
    for metric in &charts {
        for point in catalog::halton_points(metric.domain(), 5, 0.8) {
            let report = metric.curvature_report(&point, true).unwrap();
            let lap = report.laplacian_scalar.unwrap();
            assert!(
                lap.abs() < 1e-8,
                "dim {} at {:?}: lap {lap}",
                metric.dim(),
                point
            );
        }
    }
}

#[test]
fn contracted_bianchi_on_random_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let dim = 2 + case % 3;
        let metric = random_polynomial_metric(&mut rng, dim, 0.12, 3);
        let point = random_point_in(&mut rng, &metric);
        worst = worst.max(chart::bianchi_residual(&metric, &point).unwrap());
    }
    assert!(worst < 1e-6, "worst residual {worst}");
}

#[test]
fn report_consistency_on_random_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let metric = random_polynomial_metric(&mut rng, 3, 0.12, 3);
        let point = random_point_in(&mut rng, &metric);
        let report = metric.curvature_report(&point, true).unwrap();
        assert!(report.consistency_residual() < 1e-9);
    }
}
