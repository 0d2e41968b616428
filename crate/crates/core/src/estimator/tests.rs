use super::*;
use crate::metrics::kob_royden_closed;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn affine_seed_examples() {
    let m = 1e-3;
    let disc = Domain::unit_disc();
    let s = seed_affine_disc(&disc, &CPoint::origin(1), &TVector::real(&[1.0]).unwrap(), m).unwrap();
    assert_eq!(s.degree, 1);
    assert!((s.coeffs[1][0] - c(1.0 - m, 0.0)).norm() < 1e-15);
    assert!((s.radius_for(&TVector::real(&[1.0]).unwrap()) - 1.0 / (1.0 - m)).abs() < 1e-12);

    let ball = Domain::centered_ball(2, 1.0).unwrap();
    let v = TVector::real(&[0.0, 2.0]).unwrap();
    let s = seed_affine_disc(&ball, &CPoint::origin(2), &v, m).unwrap();
    assert!((s.coeffs[1][1] - c(1.0 - m, 0.0)).norm() < 1e-15);
    assert!((s.radius_for(&v) - 2.0 / (1.0 - m)).abs() < 1e-12);

    let ann = Domain::annulus(1.0, 4.0).unwrap();
    let v = TVector::real(&[1.0]).unwrap();
    let s = seed_affine_disc(&ann, &CPoint::real(&[2.0]).unwrap(), &v, m).unwrap();
    assert!((s.radius_for(&v) - 1.0 / (1.0 - m)).abs() < 1e-12);
}

#[test]
fn identity_disc_is_found_exactly() {
    let est = estimate_kob_royden(
        &Domain::unit_disc(),
        &CPoint::origin(1),
        &TVector::real(&[1.0]).unwrap(),
        &OptimizerBudget::with_degree(1),
    )
    .unwrap();
    assert_eq!(est.value, 1.0);
    assert_eq!(est.source, MetricSource::EstimatedUpperBound);
}

#[test]
fn ball_off_center_within_two_percent() {
    let ball = Domain::centered_ball(2, 1.0).unwrap();
    let p = CPoint::real(&[0.3, 0.0]).unwrap();
    let v = TVector::real(&[1.0, 0.0]).unwrap();
    let exact = kob_royden_closed(&ball, &p, &v).unwrap().value;
    assert!((exact - 1.0 / 0.91).abs() < 1e-12);
    let est = estimate_kob_royden(&ball, &p, &v, &OptimizerBudget::with_degree(4)).unwrap().value;
    assert!(est >= exact - 1e-9 && est <= 1.02 * exact, "{est} vs {exact}");
}

#[test]
fn annulus_estimate_against_true_metric() {
    // A(1, 4) is 2·{1/2 < |z| < 2}; at |z| = 1 that annulus has density
    // (π/(2 ln 2))/2 in this normalization, so F(2, 1) = π/(8 ln 2)
    let truth = std::f64::consts::PI / (8.0 * std::f64::consts::LN_2);
    let from_formula = crate::metrics::annulus_canonical_density(c(1.0, 0.0), 2.0, 1.0).unwrap().value / 2.0;
    assert!((truth - from_formula).abs() < 1e-14);
    let ann = Domain::annulus(1.0, 4.0).unwrap();
    let p = CPoint::real(&[2.0]).unwrap();
    let v = TVector::real(&[1.0]).unwrap();
    let run = |m| {
        let budget = OptimizerBudget { restarts: 4, ..OptimizerBudget::with_degree(m) };
        estimate_kob_royden(&ann, &p, &v, &budget).unwrap().value
    };
    // best degree-6 polynomial disc (independent SQP solve): f′(0) = 1.67849
    let six = run(6);
    assert!(six >= truth && six <= 1.0 / 1.67849 * 1.002, "{six}");
    let eight = run(8);
    assert!(eight >= truth - 1e-9 && eight <= 1.05 * truth, "{eight} vs {truth}");
}

#[test]
fn polydisc_estimate_matches_product_oracle() {
    let poly = Domain::polydisc(vec![1.0, 2.0]).unwrap();
    let v = TVector::real(&[1.0, 1.0]).unwrap();
    let est = estimate_kob_royden(&poly, &CPoint::origin(2), &v, &OptimizerBudget::with_degree(2)).unwrap().value;
    assert!((est - 1.0).abs() < 1e-9, "{est}");
}

#[test]
fn homogeneity_is_exact() {
    let tube = Domain::tube_sphere(1, 0.3).unwrap();
    let p = CPoint::new(vec![c(0.9, 0.05), c(0.2, -0.1)]).unwrap();
    let v = TVector::new(vec![c(0.3, 0.1), c(-0.2, 0.5)]).unwrap();
    let budget = OptimizerBudget { max_degree: 3, restarts: 2, max_iters: 200, boundary_angles: 48, ..Default::default() };
    let base = estimate_kob_royden(&tube, &p, &v, &budget).unwrap().value;
    let lambda = c(-1.5, 2.0);
    let scaled = estimate_kob_royden(&tube, &p, &v.scaled(lambda), &budget).unwrap().value;
    assert!((scaled - lambda.norm() * base).abs() <= 1e-12 * scaled, "{scaled} vs {}", lambda.norm() * base);
}

#[test]
fn degree_ladder_is_monotone() {
    let ball = Domain::centered_ball(2, 1.0).unwrap();
    let p = CPoint::new(vec![c(0.2, 0.3), c(-0.1, 0.2)]).unwrap();
    let v = TVector::new(vec![c(1.0, 0.0), c(0.0, 0.4)]).unwrap();
    let mut prev = f64::INFINITY;
    for m in [2, 4, 6] {
        let budget = OptimizerBudget { max_degree: m, max_iters: 400, ..Default::default() };
        let est = estimate_kob_royden(&ball, &p, &v, &budget).unwrap().value;
        assert!(est <= prev, "degree {m}: {est} > {prev}");
        prev = est;
    }
}

#[test]
fn seeded_search_never_loses_to_its_seed() {
    let inner = Domain::tube_sphere(1, 0.2).unwrap();
    let outer = Domain::tube_sphere(1, 0.3).unwrap();
    let p = CPoint::real(&[1.0, 0.0]).unwrap();
    let v = TVector::real(&[0.0, 1.0]).unwrap();
    let budget = OptimizerBudget { max_degree: 3, restarts: 2, max_iters: 300, boundary_angles: 64, ..Default::default() };
    let h = estimate_disc(&inner, &p, &v, &budget, &[]).unwrap();
    let seed = enlarge_disc(&h.candidate, 0.1 * 0.99);
    let out = estimate_disc(&outer, &p, &v, &budget, &[seed.clone()]).unwrap();
    assert!(out.value.value <= seed.radius_for(&v) + 1e-12);
    assert!(out.value.value < h.value.value);
}

#[test]
fn rejects_bad_inputs() {
    let disc = Domain::unit_disc();
    let b = OptimizerBudget::default();
    assert!(matches!(
        estimate_kob_royden(&disc, &CPoint::real(&[1.5]).unwrap(), &TVector::real(&[1.0]).unwrap(), &b),
        Err(Error::NotInDomain)
    ));
    assert!(estimate_kob_royden(&disc, &CPoint::origin(1), &TVector::real(&[0.0]).unwrap(), &b).is_err());
    let bad = OptimizerBudget { max_degree: 0, ..Default::default() };
    assert!(estimate_kob_royden(&disc, &CPoint::origin(1), &TVector::real(&[1.0]).unwrap(), &bad).is_err());
}

#[test]
fn budget_json_roundtrip() {
    let b: OptimizerBudget =
        serde_json::from_str(r#"{"max_degree": 6, "restarts": 8, "max_iters": 2000, "boundary_angles": 256}"#).unwrap();
    assert_eq!(b, OptimizerBudget::default());
    assert!(serde_json::from_str::<OptimizerBudget>(r#"{"max_degre": 6}"#).is_err());
}

#[test]
fn lemma_examples() {
    let b = OptimizerBudget::default();
    let r = lemma_compare_bound(&Domain::unit_disc(), &Domain::disc(c(0.0, 0.0), 2.0).unwrap(), &CPoint::origin(1), 4, &b)
        .unwrap();
    assert!((r.delta - 1.0).abs() < 1e-15 && (r.b_lower - 1.0).abs() < 1e-15);
    assert!((r.c_bound - 0.5).abs() < 1e-15);
    assert!((r.observed_ratio - r.c_bound).abs() < 1e-6);

    let r = lemma_compare_bound(
        &Domain::centered_ball(2, 1.0).unwrap(),
        &Domain::centered_ball(2, 1.25).unwrap(),
        &CPoint::origin(2),
        6,
        &b,
    )
    .unwrap();
    assert!((r.delta - 0.25).abs() < 1e-15 && (r.c_bound - 0.8).abs() < 1e-12);
    assert!((r.observed_ratio - 0.8).abs() < 1e-6);

    let budget = OptimizerBudget { max_degree: 4, restarts: 3, max_iters: 500, ..Default::default() };
    let r = lemma_compare_bound(
        &Domain::annulus(1.0, 2.0).unwrap(),
        &Domain::annulus(0.5, 4.0).unwrap(),
        &CPoint::real(&[1.5]).unwrap(),
        1,
        &budget,
    )
    .unwrap();
    assert!(r.c_bound < 1.0 && r.observed_ratio <= r.c_bound, "{r:?}");

    assert!(matches!(
        lemma_compare_bound(&Domain::unit_disc(), &Domain::unit_disc(), &CPoint::origin(1), 1, &b),
        Err(Error::NotRelativelyCompact(_))
    ));
}

#[test]
fn uniform_constant_examples() {
    let b = OptimizerBudget::default();
    let r = uniform_monotonicity_constant(&Domain::unit_disc(), &Domain::disc(c(0.0, 0.0), 2.0).unwrap(), 16, &b).unwrap();
    assert!(r.c <= 0.5 + 1e-12 && r.c >= 0.49, "{}", r.c);
    let r = uniform_monotonicity_constant(
        &Domain::centered_ball(2, 1.0).unwrap(),
        &Domain::centered_ball(2, 2.0).unwrap(),
        8,
        &b,
    )
    .unwrap();
    assert!((r.c - 0.5).abs() < 1e-12, "{}", r.c);
}

#[test]
fn canonical_direction_is_phase_free() {
    let v = [c(0.3, 0.4), c(-0.1, 0.2)];
    let u1 = canonical_direction(&v);
    let w: Vec<C64> = v.iter().map(|z| z * C64::from_polar(2.5, 1.1)).collect();
    assert_eq!(u1, canonical_direction(&w));
    assert!(u1[0].im == 0.0 && u1[0].re > 0.0);
}
