use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strong_algebra::calculus::left_inverse;
use strong_algebra::wiener::*;
use strong_algebra::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn scalar() -> Arc<Algebra> {
    Algebra::new(InstanceSpec::scalar()).unwrap()
}

fn two_plus_shift() -> WienerElement {
    WienerElement::from_scalars(&scalar(), 1, &[c(0.0), c(2.0), c(1.0)]).unwrap()
}

fn random_wiener(alg: &Arc<Algebra>, n: usize, rng: &mut impl Rng, scale: f64) -> WienerElement {
    let d = alg.dim();
    let coeffs: Vec<(i64, Element)> = (-(n as i64)..=n as i64)
        .map(|k| {
            let v = (0..d)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
                .collect();
            (k, Element::new(alg, v).unwrap())
        })
        .collect();
    WienerElement::from_coeffs(alg, &coeffs).unwrap()
}

fn scalar_at(e: &Element) -> C64 {
    e.coeffs()[0]
}

#[test]
fn convolution_of_one_plus_shift() {
    let a = WienerElement::from_scalars(&scalar(), 1, &[c(0.0), c(1.0), c(1.0)]).unwrap();
    let sq = a.multiply(&a).unwrap();
    assert_eq!(scalar_at(&sq.coeff(0)), c(1.0));
    assert_eq!(scalar_at(&sq.coeff(1)), c(2.0));
    assert_eq!(scalar_at(&sq.coeff(2)), c(1.0));
    assert_eq!(scalar_at(&sq.coeff(-1)), c(0.0));
}

#[test]
fn evaluation_examples() {
    let a = two_plus_shift();
    assert!((scalar_at(&a.evaluate(0.0)) - c(3.0)).norm() < 1e-15);
    let one = WienerElement::unit(&scalar());
    assert_eq!(scalar_at(&one.evaluate(1.234)), c(1.0));
    let shift = WienerElement::monomial(&Element::unit(&scalar()), 1);
    assert!((scalar_at(&shift.evaluate(PI / 2.0)) - C64::new(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn wiener_strong_inequality_and_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for alg in [scalar(), Algebra::new(InstanceSpec::matrix(2)).unwrap()] {
        let g = Grade::zero();
        for _ in 0..200 {
            let a = random_wiener(&alg, rng.gen_range(0..6), &mut rng, 1.0);
            let b = random_wiener(&alg, rng.gen_range(0..6), &mut rng, 1.0);
            let ab = a.multiply(&b).unwrap();
            assert!(ab.norm(&g).unwrap() <= a.norm(&g).unwrap() * b.norm(&g).unwrap() * (1.0 + 1e-12));
            let t = rng.gen_range(-PI..PI);
            let lhs = ab.evaluate(t);
            let rhs = a.evaluate(t).multiply(&b.evaluate(t)).unwrap();
            assert!(lhs.sub(&rhs).unwrap().norm(&g).unwrap() < 1e-9);
        }
    }
}

#[test]
fn cutoff_shape() {
    assert_eq!(cutoff_omega(0.2, 0.1).unwrap(), 1.0);
    assert!((cutoff_omega(0.2, 0.3).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(cutoff_omega(0.2, 0.5).unwrap(), 0.0);
    assert!((cutoff_omega(0.2, -0.3).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn cutoff_coefficients_match_quadrature() {
    let eps = 0.3;
    let m = 20000;
    for n in [0i64, 1, 2, 5, 17] {
        let mut s = 0.0;
        for j in 0..m {
            let t = -PI + 2.0 * PI * j as f64 / m as f64;
            s += cutoff_omega(eps, t).unwrap() * (n as f64 * t).cos();
        }
        assert!((s / m as f64 - omega_coefficient(eps, n)).abs() < 1e-7, "n = {n}");
    }
}

#[test]
fn localizing_a_constant_is_a_no_op() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let e = Element::new(&alg, vec![c(1.0), c(2.0), c(3.0), c(4.0)]).unwrap();
    let a = WienerElement::constant(&e);
    let b = localize(&a, 0.3).unwrap();
    assert!(b.sub(&a).unwrap().norm(&Grade::zero()).unwrap() < 1e-15);
}

#[test]
fn localization_matches_its_formula_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_wiener(&scalar(), 4, &mut rng, 0.5);
    let a0 = scalar_at(&a.evaluate(0.0));
    for eps in [PI / 2.0 - 1e-3, 0.4, 0.1] {
        let b = localize(&a, eps).unwrap();
        let slack = b.tail_bound(&Grade::zero()) + 1e-8;
        for j in 0..400 {
            let t = -PI + 2.0 * PI * j as f64 / 400.0;
            let w = cutoff_omega(eps, t).unwrap();
            let expect = scalar_at(&a.evaluate(t)) * w + a0 * (1.0 - w);
            assert!((scalar_at(&b.evaluate(t)) - expect).norm() <= slack, "eps {eps} t {t}");
        }
    }
}

#[test]
fn b0_matches_coefficient_zero_of_localization() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    for _ in 0..10 {
        let a = random_wiener(&alg, 6, &mut rng, 1.0);
        for eps in [0.05, 0.3, 1.0] {
            let b0 = b0_of_epsilon(&a, eps).unwrap();
            let coeff = localize(&a, eps).unwrap().coeff(0);
            assert!(b0.sub(&coeff).unwrap().norm(&Grade::zero()).unwrap() < 1e-8);
        }
    }
}

#[test]
fn b0_of_shift_against_quadrature_and_limit() {
    let shift = WienerElement::monomial(&Element::unit(&scalar()), 1);
    let eps = 0.1;
    let m = 10_000;
    let mut s = C64::new(0.0, 0.0);
    for j in 0..m {
        let t = -PI + 2.0 * PI * j as f64 / m as f64;
        let w = cutoff_omega(eps, t).unwrap();
        s += C64::from_polar(1.0, t) * w + c(1.0 - w);
    }
    let quad = s / m as f64;
    let b0 = scalar_at(&b0_of_epsilon(&shift, eps).unwrap());
    assert!((b0 - quad).norm() < 1e-6);

    // b0 -> a(0) monotonically as eps shrinks
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_wiener(&scalar(), 5, &mut rng, 1.0);
    let a0 = scalar_at(&a.evaluate(0.0));
    let mut last = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05, 0.025] {
        let gap = (scalar_at(&b0_of_epsilon(&a, eps).unwrap()) - a0).norm();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 0.1);
}

#[test]
fn choose_localization_examples() {
    let one = WienerElement::unit(&scalar());
    let loc = choose_localization(&one, 0.3, &Element::unit(&scalar()), &LocalizationOptions::default()).unwrap();
    assert_eq!(loc.certificate.contraction, 0.0);
    assert_eq!(loc.certificate.halvings, 0);

    let a = two_plus_shift();
    let (li, _) = left_inverse(&a.evaluate(0.0), 1e-12).unwrap();
    let loc = choose_localization(&a, 0.0, &li, &LocalizationOptions::default()).unwrap();
    assert!(loc.certificate.contraction < 1.0);

    // e^{it} - 1 vanishes at 0; a wrong "left inverse" is rejected up front
    let b = WienerElement::from_scalars(&scalar(), 1, &[c(0.0), c(-1.0), c(1.0)]).unwrap();
    let err = choose_localization(&b, 0.0, &Element::unit(&scalar()), &LocalizationOptions::default()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Precondition);
}

#[test]
fn local_inverse_of_small_perturbation_is_geometric() {
    let delta = 0.2;
    let b = WienerElement::from_scalars(&scalar(), 1, &[c(0.0), c(2.0), c(delta)]).unwrap();
    let (li, _) = left_inverse(&b.evaluate(0.0), 1e-12).unwrap();
    let loc = choose_localization(&b, 0.0, &li, &LocalizationOptions::default()).unwrap();
    let local = local_left_inverse(&loc, 1e-10).unwrap();
    for j in 0..50 {
        let t = loc.certificate.epsilon * (j as f64 / 50.0 - 0.5);
        let expect = c(1.0) / (c(2.0) + C64::from_polar(delta, t));
        assert!((scalar_at(&local.evaluate(t).unwrap()) - expect).norm() < 1e-9);
    }

    let one = WienerElement::unit(&scalar());
    let loc = choose_localization(&one, 0.0, &Element::unit(&scalar()), &LocalizationOptions::default()).unwrap();
    let local = local_left_inverse(&loc, 1e-12).unwrap();
    assert!((scalar_at(&local.evaluate(0.7).unwrap()) - c(1.0)).norm() < 1e-15);
}

#[test]
fn matrix_local_inverse_residual() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c_part = random_wiener(&alg, 2, &mut rng, 0.02);
    let b = WienerElement::unit(&alg).add(&c_part).unwrap();
    let (li, _) = left_inverse(&b.evaluate(0.0), 1e-12).unwrap();
    let loc = choose_localization(&b, 0.0, &li, &LocalizationOptions::default()).unwrap();
    let local = local_left_inverse(&loc, 1e-10).unwrap();
    let g = Grade::zero();
    for j in 0..40 {
        let t = loc.certificate.epsilon * (j as f64 / 40.0 - 0.5);
        let r = local.evaluate(t).unwrap().multiply(&b.evaluate(t)).unwrap();
        assert!(r.sub(&Element::unit(&alg)).unwrap().norm(&g).unwrap() < 1e-8);
    }
}

fn exact_inverse_of_two_plus_shift(n: usize) -> WienerElement {
    let mut vals = vec![c(0.0); 2 * n + 1];
    for k in 0..=n {
        vals[n + k] = c((-1f64).powi(k as i32) / 2f64.powi(k as i32 + 1));
    }
    WienerElement::from_scalars(&scalar(), n, &vals).unwrap()
}

#[test]
fn patching_with_one_global_local() {
    let a = two_plus_shift();
    let inv = exact_inverse_of_two_plus_shift(60);
    let local = LocalInverse::from_coefficients(0.0, 2.0 * PI, inv.clone());
    let out = patch_global_inverse(&a, &[local], &PatchOptions::default()).unwrap();
    assert!(out.inverse.sub(&inv).unwrap().norm(&Grade::zero()).unwrap() < 1e-12);
}

#[test]
fn patching_two_half_circles() {
    let a = two_plus_shift();
    let inv = exact_inverse_of_two_plus_shift(60);
    let locals = [
        LocalInverse::from_coefficients(0.0, 2.0, inv.clone()),
        LocalInverse::from_coefficients(PI, 2.0, inv.clone()),
    ];
    let out = patch_global_inverse(&a, &locals, &PatchOptions::default()).unwrap();
    for n in 0..=40i64 {
        let expect = (-1f64).powi(n as i32) / 2f64.powi(n as i32 + 1);
        assert!((scalar_at(&out.inverse.coeff(n)) - c(expect)).norm() < 1e-6);
    }
    assert!(out.residual <= 1e-6);
}

#[test]
fn patching_reports_gaps() {
    let a = two_plus_shift();
    let inv = exact_inverse_of_two_plus_shift(20);
    let locals = [
        LocalInverse::from_coefficients(0.0, 1.0, inv.clone()),
        LocalInverse::from_coefficients(PI, 1.0, inv),
    ];
    match patch_global_inverse(&a, &locals, &PatchOptions::default()) {
        Err(Error::UncoveredArcs(gaps)) => assert_eq!(gaps.len(), 2),
        other => panic!("expected uncovered arcs, got {other:?}"),
    }
}

#[test]
fn scan_examples() {
    let one = WienerElement::unit(&scalar());
    assert!(wiener_invertibility_scan(&one, 64, Side::Left, 1e-12).unwrap().all_invertible);

    let b = WienerElement::from_scalars(&scalar(), 1, &[c(0.0), c(-1.0), c(1.0)]).unwrap();
    let rep = wiener_invertibility_scan(&b, 64, Side::Left, 1e-12).unwrap();
    assert!(!rep.all_invertible);
    assert!(rep.singular_points.iter().any(|t| t.abs() < 1e-12));

    let rep = wiener_invertibility_scan(&two_plus_shift(), 64, Side::Left, 1e-12).unwrap();
    assert!(rep.all_invertible);
    assert!((rep.min_margin - 1.0).abs() < 1e-12);
    assert!((rep.argmin_t.abs() - PI).abs() < 1e-12);
}

#[test]
fn right_inverse_of_a_matrix_symbol() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let a = WienerElement::unit(&alg).add(&random_wiener(&alg, 2, &mut rng, 0.1)).unwrap();
    let rep = wiener_right_inverse(&a, &LocalizationOptions::default(), &PatchOptions::default()).unwrap();
    let r = a.multiply(&rep.inverse).unwrap().sub(&WienerElement::unit(&alg)).unwrap();
    assert!(r.norm_bound(&Grade::zero()).unwrap() < 1e-6);
}

#[test]
fn wiener_json_roundtrip() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a = random_wiener(&alg, 3, &mut rng, 1.0);
    let back = WienerElement::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back.data(), a.data());
    assert_eq!(back.half_width(), a.half_width());
}
