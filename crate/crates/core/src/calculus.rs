//! Power series, certified Neumann inversion, left-inverse perturbation and
//! the admissible-operator calculus.
//!
//! Everything here is generic over [`GradedValue`], so the same routines run
//! on instance elements and on Wiener-algebra elements.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::element::{Algebra, Element, C64};
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::instance::{InstanceKind, Ladder};

/// Default budget on `terms * scalars per term` for every series summation.
pub const DEFAULT_TERM_BUDGET: usize = 1_000_000;

/// Default series tolerance: tighter for the finite-dimensional instance.
pub fn default_tol(kind: InstanceKind) -> f64 {
    match kind {
        InstanceKind::Matrix => 1e-10,
        InstanceKind::Germs | InstanceKind::Kondratiev => 1e-8,
    }
}

/// Operations the calculus needs from an algebra value.
pub trait GradedValue: Clone + Sized {
    fn ladder(&self) -> &Ladder;
    /// Norm of the stored representation.
    fn norm_at(&self, g: &Grade) -> Result<f64>;
    /// Stored norm plus tail bound.
    fn norm_bound_at(&self, g: &Grade) -> Result<f64>;
    fn mul(&self, other: &Self) -> Result<Self>;
    fn add(&self, other: &Self) -> Result<Self>;
    fn sub(&self, other: &Self) -> Result<Self>;
    fn scale(&self, c: C64) -> Self;
    fn unit_like(&self) -> Self;
    /// Number of complex scalars stored, used for the term budget.
    fn scalar_len(&self) -> usize;
}

impl GradedValue for Element {
    fn ladder(&self) -> &Ladder {
        Element::ladder(self)
    }
    fn norm_at(&self, g: &Grade) -> Result<f64> {
        self.norm(g)
    }
    fn norm_bound_at(&self, g: &Grade) -> Result<f64> {
        self.norm_bound(g)
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        self.multiply(other)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        Element::add(self, other)
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        Element::sub(self, other)
    }
    fn scale(&self, c: C64) -> Self {
        self.scaled(c)
    }
    fn unit_like(&self) -> Self {
        Element::unit(self.algebra())
    }
    fn scalar_len(&self) -> usize {
        self.coeffs().len()
    }
}

/// Which bound produced a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormulaTag {
    #[serde(rename = "prop-power")]
    PowerSeries,
    #[serde(rename = "prop-invert")]
    Inverse,
    #[serde(rename = "prop-left-invert")]
    LeftInverse,
    #[serde(rename = "prop-invso")]
    OperatorInverse,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub alpha: Option<Grade>,
    pub beta: Option<Grade>,
    pub gamma: Option<Grade>,
    /// Ladder constants used, keyed like `"A[2,0]"`.
    pub constants: BTreeMap<String, f64>,
    /// Input norms used, keyed like `"a@0"`.
    pub norms: BTreeMap<String, f64>,
    /// The contraction ratio the bound is built on.
    pub ratio: f64,
    pub unit_norm: f64,
}

/// A grade and a proven upper bound on some norm at that grade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub grade: Grade,
    pub bound: f64,
    pub formula: FormulaTag,
    pub inputs: CertificateInputs,
}

fn constant_key(beta: &Grade, alpha: &Grade) -> String {
    format!("A[{beta},{alpha}]")
}

/// A scalar power series `sum c_n z^n`.
pub trait PowerSeries {
    fn coefficient(&self, n: usize) -> C64;
    fn radius(&self) -> f64;
    /// Upper bound on `sum_{k > n} |c_k| rho^k`.
    fn tail(&self, n: usize, rho: f64) -> f64;
    /// `sum_k |c_k| rho^k`.
    fn abs_sum(&self, rho: f64) -> f64;
    /// Index of the last nonzero coefficient for polynomials.
    fn last_index(&self) -> Option<usize> {
        None
    }
}

pub struct Exponential;

impl PowerSeries for Exponential {
    fn coefficient(&self, n: usize) -> C64 {
        let mut f = 1.0;
        for k in 2..=n {
            f *= k as f64;
        }
        C64::new(1.0 / f, 0.0)
    }
    fn radius(&self) -> f64 {
        f64::INFINITY
    }
    fn tail(&self, n: usize, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let m = (n + 2) as f64;
        if rho >= m {
            return f64::INFINITY;
        }
        // rho^{n+1}/(n+1)! * 1/(1 - rho/(n+2))
        let mut term = 1.0;
        for k in 1..=n + 1 {
            term *= rho / k as f64;
        }
        term / (1.0 - rho / m)
    }
    fn abs_sum(&self, rho: f64) -> f64 {
        rho.exp()
    }
}

pub struct Geometric;

impl PowerSeries for Geometric {
    fn coefficient(&self, _n: usize) -> C64 {
        C64::new(1.0, 0.0)
    }
    fn radius(&self) -> f64 {
        1.0
    }
    fn tail(&self, n: usize, rho: f64) -> f64 {
        rho.powi(n as i32 + 1) / (1.0 - rho)
    }
    fn abs_sum(&self, rho: f64) -> f64 {
        1.0 / (1.0 - rho)
    }
}

pub struct Polynomial(pub Vec<C64>);

impl PowerSeries for Polynomial {
    fn coefficient(&self, n: usize) -> C64 {
        self.0.get(n).copied().unwrap_or(C64::new(0.0, 0.0))
    }
    fn radius(&self) -> f64 {
        f64::INFINITY
    }
    fn tail(&self, n: usize, rho: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .skip(n + 1)
            .map(|(k, c)| c.norm() * rho.powi(k as i32))
            .sum()
    }
    fn abs_sum(&self, rho: f64) -> f64 {
        self.tail(0, rho) + self.0.first().map_or(0.0, |c| c.norm())
    }
    fn last_index(&self) -> Option<usize> {
        Some(self.0.len().saturating_sub(1))
    }
}

#[derive(Clone, Debug)]
pub struct SeriesValue<T> {
    pub value: T,
    pub certificate: NormCertificate,
    /// Highest power summed.
    pub terms: usize,
}

fn check_budget(terms: usize, scalars: usize, budget: usize) -> Result<()> {
    if terms.saturating_mul(scalars.max(1)) > budget {
        Err(Error::Budget { budget })
    } else {
        Ok(())
    }
}

/// `sum c_n a^n`, summed until the geometric tail bound
/// `sum_{n>N} |c_n| (A ||a||_alpha)^n ||1||_beta` drops below `tol`.
pub fn eval_power_series<T: GradedValue>(
    series: &dyn PowerSeries,
    a: &T,
    alpha: &Grade,
    beta: &Grade,
    tol: f64,
) -> Result<SeriesValue<T>> {
    eval_power_series_with_budget(series, a, alpha, beta, tol, DEFAULT_TERM_BUDGET)
}

pub fn eval_power_series_with_budget<T: GradedValue>(
    series: &dyn PowerSeries,
    a: &T,
    alpha: &Grade,
    beta: &Grade,
    tol: f64,
    budget: usize,
) -> Result<SeriesValue<T>> {
    let ladder = a.ladder();
    let constant = ladder.constant(beta, alpha)?;
    let a_norm = a.norm_bound_at(alpha)?;
    let rho = constant * a_norm;
    if rho >= series.radius() || !rho.is_finite() {
        return Err(Error::Contraction {
            quantity: "A[beta,alpha]*|a|_alpha",
            value: rho,
            limit: series.radius(),
        });
    }
    let one = a.unit_like();
    let unit_norm = one.norm_at(beta)?;

    let mut sum = one.scale(series.coefficient(0));
    let mut power = one;
    let mut n = 0usize;
    while series.tail(n, rho) * unit_norm >= tol && series.last_index().map_or(true, |last| n < last) {
        n += 1;
        check_budget(n, a.scalar_len(), budget)?;
        power = a.mul(&power)?;
        let c = series.coefficient(n);
        if c != C64::new(0.0, 0.0) {
            sum = sum.add(&power.scale(c))?;
        }
    }

    let mut inputs = CertificateInputs {
        alpha: Some(*alpha),
        beta: Some(*beta),
        ratio: rho,
        unit_norm,
        ..Default::default()
    };
    inputs.constants.insert(constant_key(beta, alpha), constant);
    inputs.norms.insert(format!("a@{alpha}"), a_norm);
    Ok(SeriesValue {
        value: sum,
        certificate: NormCertificate {
            grade: *beta,
            bound: series.abs_sum(rho) * unit_norm,
            formula: FormulaTag::PowerSeries,
            inputs,
        },
        terms: n,
    })
}

#[derive(Clone, Debug)]
pub struct NeumannInverse<T> {
    /// Approximation of `(1 - a)^{-1}`.
    pub inverse: T,
    /// `||(1-a)^{-1}||_beta <= ||1||_beta / (1 - A ||a||_alpha)`.
    pub bound: NormCertificate,
    /// `||1 - (1-a)^{-1}||_beta <= A ||a||_alpha ||1||_beta / (1 - A ||a||_alpha)`.
    pub distance: NormCertificate,
    pub terms: usize,
    pub left_residual: f64,
    pub right_residual: f64,
}

/// Inverts `1 - a` by its Neumann series under `A_{beta,alpha} ||a||_alpha < 1`.
pub fn neumann_inverse<T: GradedValue>(a: &T, alpha: &Grade, beta: &Grade, tol: f64) -> Result<NeumannInverse<T>> {
    neumann_inverse_with_budget(a, alpha, beta, tol, DEFAULT_TERM_BUDGET)
}

pub fn neumann_inverse_with_budget<T: GradedValue>(
    a: &T,
    alpha: &Grade,
    beta: &Grade,
    tol: f64,
    budget: usize,
) -> Result<NeumannInverse<T>> {
    let ladder = a.ladder();
    let constant = ladder.constant(beta, alpha)?;
    let a_norm = a.norm_bound_at(alpha)?;
    let q = constant * a_norm;
    if !(q < 1.0) {
        return Err(Error::Contraction {
            quantity: "A[beta,alpha]*|a|_alpha",
            value: q,
            limit: 1.0,
        });
    }
    let one = a.unit_like();
    let unit_norm = one.norm_at(beta)?;

    let mut sum = one.clone();
    let mut power = one.clone();
    let mut n = 0usize;
    while q.powi(n as i32 + 1) / (1.0 - q) * unit_norm >= tol {
        n += 1;
        check_budget(n, a.scalar_len(), budget)?;
        power = power.mul(a)?;
        sum = sum.add(&power)?;
    }

    let one_minus_a = one.sub(a)?;
    let left_residual = one_minus_a.mul(&sum)?.sub(&one)?.norm_at(beta)?;
    let right_residual = sum.mul(&one_minus_a)?.sub(&one)?.norm_at(beta)?;
    if left_residual > tol || right_residual > tol {
        return Err(Error::Numerical(format!(
            "Neumann residuals {left_residual:e}/{right_residual:e} exceed {tol:e} after {n} terms"
        )));
    }

    let mut inputs = CertificateInputs {
        alpha: Some(*alpha),
        beta: Some(*beta),
        ratio: q,
        unit_norm,
        ..Default::default()
    };
    inputs.constants.insert(constant_key(beta, alpha), constant);
    inputs.norms.insert(format!("a@{alpha}"), a_norm);
    Ok(NeumannInverse {
        inverse: sum,
        bound: NormCertificate {
            grade: *beta,
            bound: unit_norm / (1.0 - q),
            formula: FormulaTag::Inverse,
            inputs: inputs.clone(),
        },
        distance: NormCertificate {
            grade: *beta,
            bound: q * unit_norm / (1.0 - q),
            formula: FormulaTag::Inverse,
            inputs,
        },
        terms: n,
        left_residual,
        right_residual,
    })
}

/// Grades for a left-inverse perturbation: `a'` lives at `alpha`, the
/// perturbation at `beta >= h(alpha)` and the result at `gamma >= h(beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeChain {
    pub alpha: Grade,
    pub beta: Grade,
    pub gamma: Grade,
}

impl GradeChain {
    /// Smallest admissible chain starting at `alpha`.
    pub fn from_alpha(ladder: &Ladder, alpha: Grade) -> GradeChain {
        let beta = ladder.admissible(&alpha);
        let gamma = ladder.admissible(&beta);
        GradeChain { alpha, beta, gamma }
    }
}

#[derive(Clone, Debug)]
pub struct PerturbedLeftInverse<T> {
    pub inverse: T,
    /// Bound on `||(a-b)' - a'||_gamma`.
    pub certificate: NormCertificate,
    pub terms: usize,
    pub residual: f64,
}

/// Left inverse of `a - b` from a left inverse `a_li` of `a`:
/// `(a-b)' = a_li * sum (b a_li)^n`.
pub fn perturb_left_inverse<T: GradedValue>(
    a: &T,
    a_li: &T,
    b: &T,
    grades: &GradeChain,
    tol: f64,
) -> Result<PerturbedLeftInverse<T>> {
    let ladder = a.ladder();
    let GradeChain { alpha, beta, gamma } = grades;
    let a_ba = ladder.constant(beta, alpha)?;
    let a_gb = ladder.constant(gamma, beta)?;
    let a_ga = ladder.constant(gamma, alpha)?;

    let one = a.unit_like();
    let unit_norm = one.norm_at(gamma)?;
    let check = a_li.mul(a)?.sub(&one)?.norm_at(gamma)?;
    if check > tol {
        return Err(Error::Precondition(format!(
            "supplied element is not a left inverse: |a' a - 1| = {check:e} > {tol:e}"
        )));
    }

    let li_norm = a_li.norm_bound_at(alpha)?;
    let b_norm = b.norm_bound_at(beta)?;
    let r = a_gb * a_ba * li_norm * b_norm;
    if !(r < 1.0) {
        return Err(Error::Contraction {
            quantity: "A[gamma,beta]*A[beta,alpha]*|a'|_alpha*|b|_beta",
            value: r,
            limit: 1.0,
        });
    }

    let (inverse, terms) = if r == 0.0 {
        (a_li.clone(), 0)
    } else {
        let u = b.mul(a_li)?;
        let mut sum = one.clone();
        let mut power = one.clone();
        let mut n = 0usize;
        while a_ga * li_norm * r.powi(n as i32 + 1) / (1.0 - r) * unit_norm >= tol {
            n += 1;
            check_budget(n, a.scalar_len(), DEFAULT_TERM_BUDGET)?;
            power = power.mul(&u)?;
            sum = sum.add(&power)?;
        }
        (a_li.mul(&sum)?, n)
    };

    let residual = inverse.mul(&a.sub(b)?)?.sub(&one)?.norm_at(gamma)?;
    if residual > tol {
        return Err(Error::Numerical(format!(
            "perturbed left inverse residual {residual:e} exceeds {tol:e}"
        )));
    }

    let mut inputs = CertificateInputs {
        alpha: Some(*alpha),
        beta: Some(*beta),
        gamma: Some(*gamma),
        ratio: r,
        unit_norm,
        ..Default::default()
    };
    inputs.constants.insert(constant_key(beta, alpha), a_ba);
    inputs.constants.insert(constant_key(gamma, beta), a_gb);
    inputs.constants.insert(constant_key(gamma, alpha), a_ga);
    inputs.norms.insert(format!("a'@{alpha}"), li_norm);
    inputs.norms.insert(format!("b@{beta}"), b_norm);
    Ok(PerturbedLeftInverse {
        inverse,
        certificate: NormCertificate {
            grade: *gamma,
            bound: a_ga * li_norm * r * unit_norm / (1.0 - r),
            formula: FormulaTag::LeftInverse,
            inputs,
        },
        terms,
        residual,
    })
}

/// How a pointwise left inverse was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeftInverseWitness {
    /// `"dense"` for the matrix instance, `"neumann"` for series instances.
    pub method: String,
    /// Smallest singular value (dense) or `1 - ratio` (Neumann).
    pub margin: f64,
    /// Grade the inverse is certified at.
    pub grade: Grade,
}

/// Relative singular-value threshold below which a matrix counts as singular.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Finds a left inverse of a single element, if the instance's sufficient
/// condition succeeds: full column rank for matrices, a Neumann condition
/// around the constant term for series instances.
pub fn left_inverse(e: &Element, tol: f64) -> Result<(Element, LeftInverseWitness)> {
    let algebra = e.algebra();
    match algebra.kind() {
        InstanceKind::Matrix => {
            let m = e.to_matrix().expect("matrix instance");
            let svd = m.clone().svd(true, true);
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(smin > RANK_TOLERANCE * smax.max(1.0)) {
                return Err(Error::Singular {
                    t: f64::NAN,
                    detail: format!("smallest singular value {smin:e}"),
                });
            }
            let inv = svd
                .pseudo_inverse(0.0)
                .map_err(|e| Error::Numerical(format!("pseudo-inverse failed: {e}")))?;
            let li = Element::from_matrix(algebra, &inv)?;
            Ok((
                li,
                LeftInverseWitness {
                    method: "dense".into(),
                    margin: smin,
                    grade: Grade::zero(),
                },
            ))
        }
        InstanceKind::Germs | InstanceKind::Kondratiev => {
            let c0 = e.coeffs()[0];
            if c0.norm() == 0.0 {
                return Err(Error::Singular {
                    t: f64::NAN,
                    detail: "vanishing constant term".into(),
                });
            }
            // e = c0 (1 - g) with g = 1 - e / c0
            let g = e.scaled(c0.inv()).one_minus();
            let ladder = e.ladder().clone();
            let mut best: Option<(f64, Grade, Grade)> = None;
            for alpha in ladder.tracked() {
                let beta = ladder.admissible(alpha);
                let ratio = ladder.constant(&beta, alpha)? * g.norm_bound(alpha)?;
                if ratio < 1.0 && best.as_ref().map_or(true, |(r, _, _)| ratio < *r) {
                    best = Some((ratio, *alpha, beta));
                }
            }
            let (ratio, alpha, beta) = best.ok_or_else(|| Error::Singular {
                t: f64::NAN,
                detail: "Neumann condition fails at every tracked grade".into(),
            })?;
            let inv = neumann_inverse(&g, &alpha, &beta, tol)?;
            Ok((
                inv.inverse.scaled(c0.inv()),
                LeftInverseWitness {
                    method: "neumann".into(),
                    margin: 1.0 - ratio,
                    grade: beta,
                },
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedNorm {
    pub from: Grade,
    pub to: Grade,
    pub value: f64,
}

/// A linear map on the truncated coefficient space of an instance, given as
/// a dense matrix acting on coefficient vectors.
#[derive(Clone, Debug)]
pub struct AdmissibleOperator {
    algebra: Arc<Algebra>,
    matrix: DMatrix<C64>,
    recorded: Vec<RecordedNorm>,
}

impl AdmissibleOperator {
    pub fn new(algebra: &Arc<Algebra>, matrix: DMatrix<C64>) -> Result<AdmissibleOperator> {
        let m = algebra.dim();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::Schema(format!("operator must be {m}x{m}")));
        }
        Ok(AdmissibleOperator {
            algebra: Arc::clone(algebra),
            matrix,
            recorded: Vec::new(),
        })
    }

    pub fn identity(algebra: &Arc<Algebra>) -> AdmissibleOperator {
        let m = algebra.dim();
        AdmissibleOperator::new(algebra, DMatrix::identity(m, m)).expect("square")
    }

    pub fn zero(algebra: &Arc<Algebra>) -> AdmissibleOperator {
        let m = algebra.dim();
        AdmissibleOperator::new(algebra, DMatrix::zeros(m, m)).expect("square")
    }

    pub fn scaling(algebra: &Arc<Algebra>, lambda: C64) -> AdmissibleOperator {
        let m = algebra.dim();
        AdmissibleOperator::new(algebra, DMatrix::identity(m, m) * lambda).expect("square")
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn recorded(&self) -> &[RecordedNorm] {
        &self.recorded
    }

    pub fn record(&mut self, from: Grade, to: Grade, value: f64) {
        self.recorded.retain(|r| !(r.from == from && r.to == to));
        self.recorded.push(RecordedNorm { from, to, value });
    }

    pub fn recorded_norm(&self, from: &Grade, to: &Grade) -> Option<f64> {
        self.recorded
            .iter()
            .find(|r| r.from == *from && r.to == *to)
            .map(|r| r.value)
    }

    /// Applies the operator to the stored coefficients. The tail is carried
    /// through the operator norm at each tracked grade.
    pub fn apply(&self, x: &Element) -> Result<Element> {
        if **x.algebra() != *self.algebra {
            return Err(Error::InstanceMismatch {
                left: format!("{:?}", self.algebra.spec()),
                right: format!("{:?}", x.algebra().spec()),
            });
        }
        let v = DVector::from_column_slice(x.coeffs());
        let out = &self.matrix * v;
        let mut e = Element::new(&self.algebra, out.as_slice().to_vec())?;
        if !x.is_exact() {
            let ladder = self.algebra.ladder().clone();
            e = e.with_tail(crate::element::TailBounds::from_fn(&ladder, |g| {
                crate::element::bound_mul(operator_norm(self, g, g), x.tail_bound(g))
            }));
        }
        Ok(e)
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &AdmissibleOperator) -> AdmissibleOperator {
        AdmissibleOperator {
            algebra: Arc::clone(&self.algebra),
            matrix: &self.matrix * &other.matrix,
            recorded: Vec::new(),
        }
    }
}

fn basis_weights(algebra: &Algebra, g: &Grade) -> Vec<f64> {
    let m = algebra.dim();
    let mut e = vec![C64::new(0.0, 0.0); m];
    (0..m)
        .map(|k| {
            e[k] = C64::new(1.0, 0.0);
            let w = algebra.norm_slice(&e, g);
            e[k] = C64::new(0.0, 0.0);
            w
        })
        .collect()
}

/// Largest singular value by power iteration on `M^H M`, falling back to a
/// dense SVD if the iteration stalls.
fn largest_singular_value(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.iter().all(|c| c.norm() == 0.0) {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + 0.01 * i as f64, 0.003 * i as f64));
    v /= C64::new(v.norm(), 0.0);
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let w = &gram * &v;
        let lambda = w.norm();
        if lambda == 0.0 {
            break;
        }
        let next = w / C64::new(lambda, 0.0);
        let done = (lambda - estimate).abs() <= 1e-12 * lambda;
        estimate = lambda;
        v = next;
        if done {
            return estimate.sqrt();
        }
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `||T||^alpha_beta` on the truncated coefficient space; infinite when a
/// grade is not valid for the instance.
pub fn operator_norm(op: &AdmissibleOperator, alpha: &Grade, beta: &Grade) -> f64 {
    let algebra = &op.algebra;
    let ladder = algebra.ladder();
    if !ladder.is_valid(alpha) || !ladder.is_valid(beta) {
        return f64::INFINITY;
    }
    let t = &op.matrix;
    let value = match algebra.kind() {
        InstanceKind::Germs => {
            // weighted l1 -> weighted l1: maximal weighted column sum
            let wa = basis_weights(algebra, alpha);
            let wb = basis_weights(algebra, beta);
            (0..t.ncols())
                .map(|j| (0..t.nrows()).map(|i| t[(i, j)].norm() * wb[i]).sum::<f64>() / wa[j])
                .fold(0.0, f64::max)
        }
        InstanceKind::Kondratiev => {
            let wa = basis_weights(algebra, alpha);
            let wb = basis_weights(algebra, beta);
            let scaled = DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * (wb[i] / wa[j]));
            largest_singular_value(&scaled)
        }
        InstanceKind::Matrix => {
            let n = algebra.matrix_size().expect("matrix");
            if n == 1 {
                t[(0, 0)].norm()
            } else {
                // operator-norm to operator-norm bound:
                // |T X|_2 <= |lambda| |X|_2 + |(T - lambda I) X|_F
                //         <= (|lambda| + sqrt(n) sigma_max(T - lambda I)) |X|_2
                let m = t.nrows();
                let lambda = t.trace() / C64::new(m as f64, 0.0);
                let rest = t - DMatrix::<C64>::identity(m, m) * lambda;
                lambda.norm() + (n as f64).sqrt() * largest_singular_value(&rest)
            }
        }
    };
    if value.is_finite() {
        value
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug)]
pub struct OperatorInverse {
    /// Approximation of `(I - T)^{-1}` with its norm bound recorded.
    pub operator: AdmissibleOperator,
    pub certificate: NormCertificate,
    pub terms: usize,
    pub residual: f64,
}

/// `(I - T)^{-1} = sum T^n` under `||T||^alpha_alpha < 1`.
pub fn operator_neumann(op: &AdmissibleOperator, alpha: &Grade, tol: f64) -> Result<OperatorInverse> {
    op.algebra.ladder().check(alpha)?;
    let q = operator_norm(op, alpha, alpha);
    if !(q < 1.0) {
        return Err(Error::Contraction {
            quantity: "|T|^alpha_alpha",
            value: q,
            limit: 1.0,
        });
    }
    let m = op.matrix.nrows();
    let identity = DMatrix::<C64>::identity(m, m);
    let mut sum = identity.clone();
    let mut power = identity.clone();
    let mut n = 0usize;
    while q.powi(n as i32 + 1) / (1.0 - q) >= tol {
        n += 1;
        check_budget(n, m * m, DEFAULT_TERM_BUDGET)?;
        power = &power * &op.matrix;
        sum += &power;
    }
    let bound = 1.0 / (1.0 - q);
    let mut result = AdmissibleOperator {
        algebra: Arc::clone(&op.algebra),
        matrix: sum,
        recorded: Vec::new(),
    };
    result.record(*alpha, *alpha, bound);

    let check = AdmissibleOperator {
        algebra: Arc::clone(&op.algebra),
        matrix: (&identity - &op.matrix) * &result.matrix - &identity,
        recorded: Vec::new(),
    };
    let residual = operator_norm(&check, alpha, alpha);
    if residual > tol {
        return Err(Error::Numerical(format!(
            "operator Neumann residual {residual:e} exceeds {tol:e}"
        )));
    }

    let mut inputs = CertificateInputs {
        alpha: Some(*alpha),
        ratio: q,
        unit_norm: 1.0,
        ..Default::default()
    };
    inputs.norms.insert(format!("T@{alpha}->{alpha}"), q);
    Ok(OperatorInverse {
        operator: result,
        certificate: NormCertificate {
            grade: *alpha,
            bound,
            formula: FormulaTag::OperatorInverse,
            inputs,
        },
        terms: n,
        residual,
    })
}
