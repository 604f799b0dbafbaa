use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strong_algebra::calculus::*;
use strong_algebra::validate::random_element;
use strong_algebra::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn mat(alg: &std::sync::Arc<Algebra>, rows: usize, vals: &[f64]) -> Element {
    let m = DMatrix::from_row_slice(rows, rows, &vals.iter().map(|v| c(*v)).collect::<Vec<_>>());
    Element::from_matrix(alg, &m).unwrap()
}

fn g0() -> Grade {
    Grade::zero()
}

#[test]
fn exp_of_zero_is_unit() {
    let alg = Algebra::new(InstanceSpec::germs(6, vec![Grade::new(1, 2)])).unwrap();
    let r = Grade::new(1, 2);
    let out = eval_power_series(&Exponential, &Element::zero(&alg), &r, &r, 1e-12).unwrap();
    assert_eq!(out.value.coeffs(), Element::unit(&alg).coeffs());
    assert!((out.certificate.bound - Element::unit(&alg).norm(&r).unwrap()).abs() < 1e-15);
}

#[test]
fn geometric_series_scalar_half() {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let a = Element::scalar(&alg, c(0.5));
    let out = eval_power_series(&Geometric, &a, &g0(), &g0(), 1e-12).unwrap();
    assert!((out.value.coeffs()[0] - c(2.0)).norm() < 1e-11);
}

#[test]
fn exp_of_nilpotent() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let n = mat(&alg, 2, &[0.0, 1.0, 0.0, 0.0]);
    let out = eval_power_series(&Exponential, &n, &g0(), &g0(), 1e-14).unwrap();
    let expect = mat(&alg, 2, &[1.0, 1.0, 0.0, 1.0]);
    assert!(out.value.sub(&expect).unwrap().norm(&g0()).unwrap() < 1e-13);
}

#[test]
fn power_series_outside_radius_is_rejected() {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let a = Element::scalar(&alg, c(1.5));
    let err = eval_power_series(&Geometric, &a, &g0(), &g0(), 1e-10).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Precondition);
}

#[test]
fn neumann_scalar_half_is_tight() {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let a = Element::scalar(&alg, c(0.5));
    let inv = neumann_inverse(&a, &g0(), &g0(), 1e-12).unwrap();
    assert!((inv.inverse.coeffs()[0] - c(2.0)).norm() < 1e-11);
    assert!((inv.bound.bound - 2.0).abs() < 1e-15);
    assert_eq!(inv.bound.formula, FormulaTag::Inverse);
}

#[test]
fn neumann_of_zero() {
    let alg = Algebra::new(InstanceSpec::matrix(3)).unwrap();
    let inv = neumann_inverse(&Element::zero(&alg), &g0(), &g0(), 1e-12).unwrap();
    assert_eq!(inv.inverse.coeffs(), Element::unit(&alg).coeffs());
    assert!((inv.bound.bound - 1.0).abs() < 1e-15);
    assert_eq!(inv.distance.bound, 0.0);
}

#[test]
fn neumann_nilpotent_matches_dense() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let a = mat(&alg, 2, &[0.0, 0.5, 0.0, 0.0]);
    let inv = neumann_inverse(&a, &g0(), &g0(), 1e-12).unwrap();
    let expect = mat(&alg, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert!(inv.inverse.sub(&expect).unwrap().norm(&g0()).unwrap() < 1e-12);
}

#[test]
fn neumann_contraction_error_carries_ratio() {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    match neumann_inverse(&Element::scalar(&alg, c(1.25)), &g0(), &g0(), 1e-10) {
        Err(Error::Contraction { value, .. }) => assert!((value - 1.25).abs() < 1e-15),
        other => panic!("expected contraction error, got {other:?}"),
    }
}

#[test]
fn neumann_kondratiev_certificates_hold() {
    let spec = InstanceSpec::kondratiev(2, 3, vec![Grade::integer(0), Grade::integer(2)]);
    let alg = Algebra::new(spec).unwrap();
    let (p, q) = (Grade::integer(0), Grade::integer(2));
    let constant = alg.ladder().constant(&q, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let one = Element::unit(&alg);
    let mut done = 0;
    while done < 50 {
        let a = random_element(&alg, &mut rng);
        let s = a.norm(&p).unwrap() * constant;
        if s == 0.0 {
            continue;
        }
        let a = a.scaled(c(rng.gen_range(0.05..0.9) / s));
        let inv = neumann_inverse(&a, &p, &q, 1e-8).unwrap();
        assert!(inv.inverse.norm_bound(&q).unwrap() <= inv.bound.bound * (1.0 + 1e-12));
        assert!(one.sub(&inv.inverse).unwrap().norm_bound(&q).unwrap() <= inv.distance.bound * (1.0 + 1e-12));
        done += 1;
    }
}

#[test]
fn perturb_scalar_reciprocal() {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let chain = GradeChain::from_alpha(alg.ladder(), g0());
    let one = Element::unit(&alg);
    let out = perturb_left_inverse(&one, &one, &Element::scalar(&alg, c(0.25)), &chain, 1e-12).unwrap();
    assert!((out.inverse.coeffs()[0] - c(4.0 / 3.0)).norm() < 1e-12);
}

#[test]
fn perturb_with_zero_returns_left_inverse() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let chain = GradeChain::from_alpha(alg.ladder(), g0());
    let a = mat(&alg, 2, &[2.0, 1.0, 0.0, 1.0]);
    let (li, _) = left_inverse(&a, 1e-12).unwrap();
    let out = perturb_left_inverse(&a, &li, &Element::zero(&alg), &chain, 1e-10).unwrap();
    assert_eq!(out.inverse.coeffs(), li.coeffs());
    assert_eq!(out.certificate.bound, 0.0);
}

/// The column `[1, 0]^T` with left inverse `[1, 0]`, embedded as the first
/// column of a 2x2 matrix whose second column is `[0, 1]^T`.
#[test]
fn perturbed_left_inverse_of_embedded_column() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let chain = GradeChain::from_alpha(alg.ladder(), g0());
    let a = Element::unit(&alg);
    let b = mat(&alg, 2, &[0.05, 0.0, -0.1, 0.0]);
    let out = perturb_left_inverse(&a, &a, &b, &chain, 1e-12).unwrap();
    let ab = a.sub(&b).unwrap().to_matrix().unwrap();
    // least-squares oracle on the 2x1 column a - b applied to e_1
    let col = ab.column(0).into_owned();
    let gram = col.adjoint() * &col;
    let row = (col.adjoint() / gram[(0, 0)]).into_owned();
    let got = out.inverse.to_matrix().unwrap();
    let recovered: DVector<C64> = (&got * &col).into_owned();
    assert!((recovered[0] - c(1.0)).norm() < 1e-12 && recovered[1].norm() < 1e-12);
    assert!(((row * &col)[(0, 0)] - c(1.0)).norm() < 1e-12);
    assert!((got * ab - DMatrix::identity(2, 2)).norm() < 1e-12);
}

#[test]
fn perturb_rejects_bad_left_inverse() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let chain = GradeChain::from_alpha(alg.ladder(), g0());
    let a = Element::unit(&alg);
    let wrong = Element::scalar(&alg, c(2.0));
    let err = perturb_left_inverse(&a, &wrong, &Element::zero(&alg), &chain, 1e-10).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Precondition);
}

#[test]
fn operator_norm_examples() {
    let alg = Algebra::new(InstanceSpec::germs(5, vec![Grade::new(1, 2)])).unwrap();
    let r = Grade::new(1, 2);
    assert!((operator_norm(&AdmissibleOperator::identity(&alg), &r, &r) - 1.0).abs() < 1e-8);
    assert_eq!(operator_norm(&AdmissibleOperator::zero(&alg), &r, &r), 0.0);
    let s = AdmissibleOperator::scaling(&alg, C64::new(0.3, -0.4));
    assert!((operator_norm(&s, &r, &r) - 0.5).abs() < 1e-8);
}

#[test]
fn operator_neumann_examples() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let g = g0();
    let s = operator_neumann(&AdmissibleOperator::zero(&alg), &g, 1e-12).unwrap();
    assert_eq!(s.operator.matrix(), &DMatrix::<C64>::identity(4, 4));

    let lambda = C64::new(0.2, 0.3);
    let s = operator_neumann(&AdmissibleOperator::scaling(&alg, lambda), &g, 1e-12).unwrap();
    let expect = DMatrix::<C64>::identity(4, 4) * (c(1.0) / (c(1.0) - lambda));
    assert!((s.operator.matrix() - expect).norm() < 1e-10);

    // strictly lower triangular on the coefficient space
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut t = DMatrix::<C64>::zeros(4, 4);
    for i in 0..4 {
        for j in 0..i {
            t[(i, j)] = C64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        }
    }
    let op = AdmissibleOperator::new(&alg, t.clone()).unwrap();
    let s = operator_neumann(&op, &g, 1e-12).unwrap();
    let dense = (DMatrix::<C64>::identity(4, 4) - t).try_inverse().unwrap();
    assert!((s.operator.matrix() - dense).norm() < 1e-8);
}

#[test]
fn operator_neumann_rejects_expansion() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let op = AdmissibleOperator::scaling(&alg, c(1.5));
    assert!(matches!(operator_neumann(&op, &g0(), 1e-10), Err(Error::Contraction { .. })));
}

#[test]
fn left_inverse_singular_matrix() {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let a = mat(&alg, 2, &[1.0, 2.0, 2.0, 4.0]);
    assert!(matches!(left_inverse(&a, 1e-10), Err(Error::Singular { .. })));
}

#[test]
fn term_budget_overflow_is_a_hard_error() {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let a = Element::scalar(&alg, c(0.999));
    let err = neumann_inverse_with_budget(&a, &g0(), &g0(), 1e-14, 100).unwrap_err();
    assert!(matches!(err, Error::Budget { .. }));
}
