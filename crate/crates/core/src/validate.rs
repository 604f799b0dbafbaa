//! Randomized check of the graded submultiplicativity inequality
//! `max(||ab||_b, ||ba||_b) <= A_{b,a} ||a||_a ||b||_b`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::element::{Algebra, Element, C64};
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::instance::InstanceSpec;

/// Relative slack allowed on top of `A_{beta,alpha}`.
pub const RELATIVE_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub instance: String,
    pub alpha: Grade,
    pub beta: Grade,
    pub constant: f64,
    pub samples: usize,
    pub seed: u64,
    pub worst_ratio: f64,
    pub worst_sample: usize,
    pub pass: bool,
}

/// Complex number uniform on the closed unit disk.
pub fn unit_disk(rng: &mut impl Rng) -> C64 {
    let r = rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * 2.0 * PI;
    C64::from_polar(r, theta)
}

/// Random exact element: i.i.d. unit-disk coefficients, then either kept
/// dense or thinned to a few entries, then scaled by a random magnitude.
pub fn random_element(algebra: &Arc<Algebra>, rng: &mut impl Rng) -> Element {
    let dim = algebra.dim();
    let mut coeffs: Vec<C64> = (0..dim).map(|_| unit_disk(rng)).collect();
    if rng.gen_bool(0.5) {
        let keep = rng.gen_range(1..=dim.min(3));
        let mut mask = vec![false; dim];
        for _ in 0..keep {
            mask[rng.gen_range(0..dim)] = true;
        }
        for (c, m) in coeffs.iter_mut().zip(mask) {
            if !m {
                *c = C64::new(0.0, 0.0);
            }
        }
    }
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    for c in &mut coeffs {
        *c *= scale;
    }
    Element::new(algebra, coeffs).expect("dimension matches")
}

pub fn validate_strong_inequality(
    spec: &InstanceSpec,
    alpha: &Grade,
    beta: &Grade,
    sample_count: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let algebra = Algebra::new(spec.clone())?;
    let ladder = algebra.ladder();
    let constant = ladder.constant(beta, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_ratio = 0.0f64;
    let mut worst_sample = 0;
    let mut ext = vec![C64::new(0.0, 0.0); algebra.ext_dim()];
    for sample in 0..sample_count {
        let a = random_element(&algebra, &mut rng);
        let b = random_element(&algebra, &mut rng);
        let denom = a.norm(alpha)? * b.norm(beta)?;
        if denom == 0.0 {
            continue;
        }
        // untruncated products, so the truncation cannot hide a violation
        let mut numer = 0.0f64;
        for (x, y) in [(&a, &b), (&b, &a)] {
            ext.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            algebra.mul_acc_ext(x.coeffs(), y.coeffs(), &mut ext);
            numer = numer.max(algebra.ext_norm(&ext, beta));
        }
        let ratio = numer / denom;
        if !ratio.is_finite() {
            return Err(Error::Numerical(format!("non-finite ratio at sample {sample}")));
        }
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_sample = sample;
        }
    }
    Ok(ValidationReport {
        instance: algebra.kind().name().to_string(),
        alpha: *alpha,
        beta: *beta,
        constant,
        samples: sample_count,
        seed,
        worst_ratio,
        worst_sample,
        pass: worst_ratio <= constant * (1.0 + RELATIVE_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_identity_ratio() {
        let alg = Algebra::new(InstanceSpec::matrix(3)).unwrap();
        let one = Element::unit(&alg);
        let prod = one.multiply(&one).unwrap();
        let g = Grade::zero();
        let ratio = prod.norm(&g).unwrap() / (one.norm(&g).unwrap() * one.norm(&g).unwrap());
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn germs_pass() {
        let spec = InstanceSpec::germs(6, vec![Grade::new(1, 2)]);
        let rep = validate_strong_inequality(&spec, &Grade::new(1, 2), &Grade::new(1, 2), 100, 3).unwrap();
        assert!(rep.pass);
        assert!(rep.worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn below_h_is_rejected() {
        let spec = InstanceSpec::kondratiev(2, 3, vec![Grade::integer(0)]);
        let err = validate_strong_inequality(&spec, &Grade::integer(0), &Grade::integer(1), 10, 0).unwrap_err();
        assert!(matches!(err, Error::Ladder { .. }));
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = InstanceSpec::kondratiev(2, 3, vec![Grade::integer(0)]);
        let a = validate_strong_inequality(&spec, &Grade::integer(0), &Grade::integer(2), 50, 9).unwrap();
        let b = validate_strong_inequality(&spec, &Grade::integer(0), &Grade::integer(2), 50, 9).unwrap();
        assert_eq!(a, b);
    }
}
