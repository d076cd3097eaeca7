//! Property checks of the comparison norms, the hypothesis implications
//! between the four comparison forms, and the first-order structure of the
//! deformed tensor inequalities.

use nalgebra::DMatrix;
use proptest::prelude::*;

use ricscan_core::deform::{
    self, assumption_margin, conclusion_margin, norm1, norm2, norm2_bruteforce,
    rigidity_hypothesis, CurvatureBackend, FrameBackend, HypothesisKind, PointState, Theorem,
    VariationBackend,
};
use ricscan_core::frame::berger_metric;
use ricscan_core::submersion::CanonicalVariationModel;

fn spd_from_entries(dim: usize, entries: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
    &a * a.transpose() + DMatrix::<f64>::identity(dim, dim).scale(0.4)
}

fn entry_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, dim * dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm1_reciprocity(dim in 2..=5usize, ea in entry_vec(5), eb in entry_vec(5)) {
        let a = spd_from_entries(dim, &ea);
        let b = spd_from_entries(dim, &eb);
        let product = norm1(&a, &b).unwrap() * norm1(&b, &a).unwrap();
        prop_assert!(product >= 1.0 - 1e-10, "product {product}");
    }

    #[test]
    fn norm1_reciprocity_saturates_for_homotheties(dim in 2..=5usize, ea in entry_vec(5), c in 0.2..4.0f64) {
        let a = spd_from_entries(dim, &ea);
        let b = a.scale(c);
        let product = norm1(&a, &b).unwrap() * norm1(&b, &a).unwrap();
        prop_assert!((product - 1.0).abs() < 1e-10, "product {product}");
    }

    #[test]
    fn norm2_shortcut_matches_gram_pencil(dim in 2..=6usize, ea in entry_vec(6), eb in entry_vec(6)) {
        let a = spd_from_entries(dim, &ea);
        let b = spd_from_entries(dim, &eb);
        let fast = norm2(&a, &b).unwrap();
        let slow = norm2_bruteforce(&a, &b).unwrap();
        prop_assert!((fast - slow).abs() < 1e-10, "fast {fast} slow {slow}");
    }

    #[test]
    fn tangent_comparison_implies_norm_comparison(
        dim in 2..=4usize,
        e0 in entry_vec(4),
        e1 in entry_vec(4),
        r0 in -3.0..3.0f64,
        r1 in -3.0..3.0f64,
    ) {
        // a state whose Ricci is irrelevant here; only metric and scalar enter
        let g0 = spd_from_entries(dim, &e0);
        let g1 = spd_from_entries(dim, &e1);
        let s0 = PointState::new(g0.clone(), g0.scale(r0 / dim as f64), r0, 0.0).unwrap();
        let s1 = PointState::new(g1.clone(), g1.scale(r1 / dim as f64), r1, 0.0).unwrap();
        let d3 = rigidity_hypothesis(std::slice::from_ref(&s0), std::slice::from_ref(&s1), HypothesisKind::D3).unwrap();
        let d1 = rigidity_hypothesis(&[s0], &[s1], HypothesisKind::D1).unwrap();
        if d3[0].holds {
            prop_assert!(d1[0].holds, "D3 margin {} but D1 margin {}", d3[0].margin, d1[0].margin);
        }
    }

    #[test]
    fn two_vector_hypotheses_coincide_for_positive_scalars(
        dim in 2..=4usize,
        e0 in entry_vec(4),
        e1 in entry_vec(4),
        r0 in 0.1..3.0f64,
        r1 in 0.1..3.0f64,
    ) {
        let g0 = spd_from_entries(dim, &e0);
        let g1 = spd_from_entries(dim, &e1);
        let s0 = PointState::new(g0.clone(), g0.scale(r0 / dim as f64), r0, 0.0).unwrap();
        let s1 = PointState::new(g1.clone(), g1.scale(r1 / dim as f64), r1, 0.0).unwrap();
        let d2 = rigidity_hypothesis(std::slice::from_ref(&s0), std::slice::from_ref(&s1), HypothesisKind::D2).unwrap();
        let d4 = rigidity_hypothesis(&[s0], &[s1], HypothesisKind::D4).unwrap();
        prop_assert_eq!(d2[0].holds, d4[0].holds,
            "D2 margin {} vs D4 margin {}", d2[0].margin, d4[0].margin);
    }
}

/// Scanning a chart metric over several sample points: the equal-factor
/// product satisfies the first comparison inequality on an initial parameter
/// interval at every point, and its positive-cone limit is finite.
#[test]
fn scan_product_chart_over_points() {
    use ricscan_core::catalog;
    use ricscan_core::deform::ChartBackend;

    let (metric, _) = catalog::product_space_form(2, 2, 1.0).unwrap();
    let points = catalog::halton_points(metric.domain(), 3, 0.7);
    let backend = ChartBackend::new(metric, points, "product");
    let scan =
        deform::scan_s(&backend, Theorem::T1, deform::Direction::Positive, 0.5, 5).unwrap();
    assert!(!scan.degenerate);
    // traceless eigenvalues are ±1, so the cone closes at s = 1
    let limit = scan.spd_limit.unwrap();
    assert!((limit - 1.0).abs() < 1e-6, "spd limit {limit}");
    let (lo, hi) = scan.admissible.expect("admissible interval");
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0);
    assert_eq!(scan.samples.len(), 15);
    // the first-order margin is 4 at every point of this product
    for check in &scan.slope_checks {
        assert!(
            (check.slope - 4.0).abs() < 0.04,
            "slope {} at {}",
            check.slope,
            check.point_id
        );
    }
}

#[test]
fn conclusion_margins_vanish_at_zero_for_all_theorems() {
    let backend = FrameBackend::new(berger_metric(1.0, 3.5).unwrap(), "squashed");
    for theorem in [Theorem::T1, Theorem::T2, Theorem::T3, Theorem::T4] {
        assert_eq!(conclusion_margin(&backend, 0, 0.0, theorem).unwrap(), 0.0);
    }
}

/// The one-parameter squashed-sphere family `(p, q) = (1, 4 − e/2)` sweeps
/// the scalar curvature through zero at `e = 0` (where `R = e`): all four
/// assumptions hold for `0 < e < 4`, while at `e <= 0` the fourth one fails
/// (its margin carries a factor of `R`) and the first three survive.
#[test]
fn squashed_sphere_family_assumption_pattern() {
    let state_for = |eps: f64| {
        FrameBackend::new(berger_metric(1.0, 4.0 - eps / 2.0).unwrap(), "family")
            .state(0)
            .unwrap()
    };

    let positive = state_for(1.0);
    assert!((positive.scalar - 1.0).abs() < 1e-10);
    for theorem in [Theorem::T1, Theorem::T2, Theorem::T3, Theorem::T4] {
        let m = assumption_margin(&positive, theorem);
        assert!(m.best() > 0.0, "{theorem:?}: {m:?}");
    }

    let flat = state_for(0.0);
    assert!(flat.scalar.abs() < 1e-10);
    for theorem in [Theorem::T1, Theorem::T2, Theorem::T3] {
        let m = assumption_margin(&flat, theorem);
        assert!(m.best() > 0.0, "{theorem:?}: {m:?}");
    }
    let t4 = assumption_margin(&flat, Theorem::T4);
    assert!(t4.best().abs() < 1e-9, "T4 at zero scalar: {t4:?}");

    let negative = state_for(-1.0);
    assert!((negative.scalar + 1.0).abs() < 1e-10);
    for theorem in [Theorem::T1, Theorem::T2, Theorem::T3] {
        let m = assumption_margin(&negative, theorem);
        assert!(m.best() > 0.0, "{theorem:?}: {m:?}");
    }
    let t4 = assumption_margin(&negative, Theorem::T4);
    assert!(t4.best() < 0.0, "T4 with negative scalar: {t4:?}");
}

#[test]
fn point_state_consistency_relations() {
    for backend in [
        FrameBackend::new(berger_metric(1.0, 3.5).unwrap(), "squashed"),
        FrameBackend::new(berger_metric(1.3, 2.2).unwrap(), "generic"),
    ] {
        let state = backend.state(0).unwrap();
        assert!(state.consistency_residual() < 1e-9);
    }
}

/// Bracketing scan of the first comparison margin over the fiber-scaling
/// family: the positive-branch margin is negative near both Einstein
/// parameters, while far outside them some branch is positive.
#[test]
fn variation_margins_bracket_einstein_parameters() {
    let family = CanonicalVariationModel::hopf_family(1, 1.0).unwrap();
    let einstein = family.einstein_parameters();
    assert_eq!(einstein.len(), 2);

    for t_star in &einstein {
        for factor in [0.9, 1.1] {
            let model = family.with_t(t_star * factor).unwrap();
            let margins = deform::variation_assumption_margins(&model).unwrap();
            assert!(
                margins[0].pos_s < 0.0,
                "t = {}: pos-branch margin {}",
                t_star * factor,
                margins[0].pos_s
            );
        }
        // at the Einstein parameter itself both branches degenerate to zero
        let model = family.with_t(*t_star).unwrap();
        let margins = deform::variation_assumption_margins(&model).unwrap();
        assert!(margins[0].pos_s.abs() < 1e-9);
        assert!(margins[0].neg_s.abs() < 1e-9);
    }

    for t in [0.01, 100.0] {
        let model = family.with_t(t).unwrap();
        let margins = deform::variation_assumption_margins(&model).unwrap();
        assert!(margins[0].best() > 0.0, "t = {t}: {:?}", margins[0]);
    }
}

/// The matrix first-order term of `R_{g_s} g_s − R_g g` on homogeneous
/// states equals `(‖ric0‖² + R²/n) g − R Ric`, checked entrywise by
/// Richardson-extrapolated central differences in `s`.
#[test]
fn tensor_comparison_first_order_term_entrywise() {
    let backends: Vec<Box<dyn CurvatureBackend>> = vec![
        Box::new(FrameBackend::new(
            berger_metric(1.0, 3.5).unwrap(),
            "squashed",
        )),
        Box::new(FrameBackend::new(
            berger_metric(1.2, 2.0).unwrap(),
            "generic",
        )),
        Box::new(VariationBackend::new(
            CanonicalVariationModel::hopf_family(1, 0.3).unwrap(),
            "hopf",
        )),
        Box::new(VariationBackend::new(
            CanonicalVariationModel::cp_family(1, 2.5).unwrap(),
            "cp",
        )),
    ];
    for backend in &backends {
        let state = backend.state(0).unwrap();
        let n = state.dim as f64;
        let expected = state
            .metric
            .scale(state.traceless_norm_sq + state.scalar * state.scalar / n)
            - state.ricci.scale(state.scalar);

        let tensor_at = |s: f64| -> DMatrix<f64> {
            let moved = backend.deformed(0, s).unwrap();
            moved.metric.scale(moved.scalar) - state.metric.scale(state.scalar)
        };
        let central = |h: f64| (tensor_at(h) - tensor_at(-h)).scale(1.0 / (2.0 * h));
        let derivative = (central(1e-5).scale(100.0) - central(1e-4)).scale(1.0 / 99.0);

        let scale = expected.abs().max().max(1.0);
        let deviation = (&derivative - &expected).abs().max() / scale;
        assert!(
            deviation < 1e-5,
            "{}: relative entrywise deviation {deviation}",
            backend.label()
        );
    }
}

/// Slope of the comparison margin at zero against the first-order margin on
/// homogeneous states. The two coincide for T1 (both branches) and for the
/// positive branches of T3/T4; elsewhere the margin is the derivative of a
/// one-sided bound, so the slope must respect the corresponding inequality.
#[test]
fn margin_slopes_match_first_order_margins() {
    use deform::Direction;
    let backends: Vec<Box<dyn CurvatureBackend>> = vec![
        Box::new(FrameBackend::new(
            berger_metric(1.0, 3.5).unwrap(),
            "squashed",
        )),
        Box::new(VariationBackend::new(
            CanonicalVariationModel::hopf_family(1, 0.01).unwrap(),
            "hopf",
        )),
        Box::new(VariationBackend::new(
            CanonicalVariationModel::cp_family(1, 0.01).unwrap(),
            "cp",
        )),
    ];
    let exact = [
        (Theorem::T1, Direction::Positive),
        (Theorem::T1, Direction::Negative),
        (Theorem::T3, Direction::Positive),
        (Theorem::T4, Direction::Positive),
    ];
    for backend in &backends {
        let state = backend.state(0).unwrap();
        assert!(state.scalar > 0.0, "states here have positive scalar");
        for (theorem, direction) in exact {
            let slope =
                deform::conclusion_margin_slope(backend.as_ref(), 0, theorem, direction).unwrap();
            let expected = assumption_margin(&state, theorem).branch(direction);
            let deviation = (slope - expected).abs() / expected.abs().max(1e-9);
            assert!(
                deviation < 0.01,
                "{} {:?} {:?}: slope {slope} vs {expected}",
                backend.label(),
                theorem,
                direction
            );
        }
        // one-sided cases: the margin under- or over-estimates the slope
        for (theorem, direction, slope_at_least) in [
            (Theorem::T2, Direction::Positive, true),
            (Theorem::T2, Direction::Negative, false),
            (Theorem::T3, Direction::Negative, true),
            (Theorem::T4, Direction::Negative, true),
        ] {
            let slope =
                deform::conclusion_margin_slope(backend.as_ref(), 0, theorem, direction).unwrap();
            let bound = assumption_margin(&state, theorem).branch(direction);
            let tol = 1e-6 * (1.0 + bound.abs());
            if slope_at_least {
                assert!(
                    slope >= bound - tol,
                    "{} {:?} {:?}: slope {slope} below bound {bound}",
                    backend.label(),
                    theorem,
                    direction
                );
            } else {
                assert!(
                    slope <= bound + tol,
                    "{} {:?} {:?}: slope {slope} above bound {bound}",
                    backend.label(),
                    theorem,
                    direction
                );
            }
        }
    }
}
