//! Finitely represented elements of a strong-algebra instance.
//!
//! An [`Element`] stores the coefficients of a truncated representation and a
//! per-grade tail bound: at every tracked grade `g` the true element differs
//! from the stored one by at most `tail(g)` in `||.||_g`. A grade missing from
//! the tail map means the bound is unknown there. A zero tail at any grade
//! means the stored data is the element itself.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::instance::{multi_indices, InstanceKind, InstanceSpec, Ladder};

pub type C64 = Complex64;

#[derive(Debug)]
enum Repr {
    Matrix {
        n: usize,
    },
    Germs {
        degree: usize,
    },
    Kondratiev {
        /// Multi-indices up to degree `2D`; the first `base_len` have degree `<= D`.
        indices: Vec<Vec<u32>>,
        base_len: usize,
        /// `ln (2N)^g` for every extended index.
        log_weights: Vec<f64>,
        /// `(i, j, k)`: `e_i * e_j = e_k` in the extended index set.
        table: Vec<(u32, u32, u32)>,
    },
}

/// A built instance: parameters, ladder and product tables.
#[derive(Debug)]
pub struct Algebra {
    spec: InstanceSpec,
    ladder: Ladder,
    repr: Repr,
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Algebra {
    pub fn new(spec: InstanceSpec) -> Result<Arc<Algebra>> {
        spec.validate()?;
        let repr = match &spec {
            InstanceSpec::Matrix { n } => Repr::Matrix { n: *n },
            InstanceSpec::Germs { degree, .. } => Repr::Germs { degree: *degree },
            InstanceSpec::Kondratiev { vars, degree, .. } => {
                let indices = multi_indices(*vars, 2 * degree);
                let base_len = indices
                    .iter()
                    .take_while(|g| g.iter().sum::<u32>() as usize <= *degree)
                    .count();
                let log_weights = indices
                    .iter()
                    .map(|g| {
                        g.iter()
                            .enumerate()
                            .map(|(k, &e)| e as f64 * (2.0 * (k + 1) as f64).ln())
                            .sum()
                    })
                    .collect();
                let lookup: std::collections::HashMap<&[u32], u32> = indices
                    .iter()
                    .enumerate()
                    .map(|(k, g)| (g.as_slice(), k as u32))
                    .collect();
                let mut table = Vec::with_capacity(base_len * base_len);
                let mut sum = vec![0u32; *vars];
                for i in 0..base_len {
                    for j in 0..base_len {
                        for (s, (x, y)) in sum.iter_mut().zip(indices[i].iter().zip(&indices[j])) {
                            *s = x + y;
                        }
                        let k = lookup[sum.as_slice()];
                        table.push((i as u32, j as u32, k));
                    }
                }
                Repr::Kondratiev {
                    indices,
                    base_len,
                    log_weights,
                    table,
                }
            }
        };
        let ladder = spec.ladder();
        Ok(Arc::new(Algebra { spec, ladder, repr }))
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn kind(&self) -> InstanceKind {
        self.spec.kind()
    }

    /// Matrix size for the matrix instance, `None` otherwise.
    pub fn matrix_size(&self) -> Option<usize> {
        match self.repr {
            Repr::Matrix { n } => Some(n),
            _ => None,
        }
    }

    /// Number of complex scalars in a stored element.
    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Matrix { n } => n * n,
            Repr::Germs { degree } => degree + 1,
            Repr::Kondratiev { base_len, .. } => *base_len,
        }
    }

    /// Length of the buffer holding an untruncated product of two stored elements.
    pub fn ext_dim(&self) -> usize {
        match &self.repr {
            Repr::Matrix { n } => n * n,
            Repr::Germs { degree } => 2 * degree + 1,
            Repr::Kondratiev { indices, .. } => indices.len(),
        }
    }

    /// Whether products are cut back to a truncation degree.
    pub fn truncates(&self) -> bool {
        !matches!(self.repr, Repr::Matrix { .. })
    }

    pub fn unit_coeffs(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        match &self.repr {
            Repr::Matrix { n } => {
                for i in 0..*n {
                    out[i * n + i] = C64::new(1.0, 0.0);
                }
            }
            Repr::Germs { .. } | Repr::Kondratiev { .. } => out[0] = C64::new(1.0, 0.0),
        }
        out
    }

    /// `out += a * b` without truncation; `out` has length [`Algebra::ext_dim`].
    pub fn mul_acc_ext(&self, a: &[C64], b: &[C64], out: &mut [C64]) {
        match &self.repr {
            Repr::Matrix { n } => {
                let n = *n;
                if n == 1 {
                    out[0] += a[0] * b[0];
                    return;
                }
                for i in 0..n {
                    for k in 0..n {
                        let aik = a[i * n + k];
                        if aik == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let row = &b[k * n..(k + 1) * n];
                        for (o, bkj) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                            *o += aik * bkj;
                        }
                    }
                }
            }
            Repr::Germs { .. } => {
                for (i, ai) in a.iter().enumerate() {
                    if *ai == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (o, bj) in out[i..].iter_mut().zip(b) {
                        *o += ai * bj;
                    }
                }
            }
            Repr::Kondratiev { table, .. } => {
                for &(i, j, k) in table {
                    out[k as usize] += a[i as usize] * b[j as usize];
                }
            }
        }
    }

    /// Norm of a stored (length [`Algebra::dim`]) coefficient slice. The grade
    /// must already be validated.
    pub fn norm_slice(&self, x: &[C64], g: &Grade) -> f64 {
        match &self.repr {
            Repr::Matrix { n } => spectral_norm(x, *n),
            Repr::Germs { .. } => weighted_l1(x, g.to_f64(), 0),
            Repr::Kondratiev { log_weights, .. } => weighted_l2(x, &log_weights[..x.len()], g.to_f64()),
        }
    }

    /// Norm of the part of an extended product buffer beyond the truncation.
    pub fn discarded_norm(&self, ext: &[C64], g: &Grade) -> f64 {
        match &self.repr {
            Repr::Matrix { .. } => 0.0,
            Repr::Germs { degree } => weighted_l1(&ext[degree + 1..], g.to_f64(), degree + 1),
            Repr::Kondratiev {
                base_len,
                log_weights,
                ..
            } => weighted_l2(&ext[*base_len..], &log_weights[*base_len..], g.to_f64()),
        }
    }

    /// Norm of a full extended product buffer (kept and discarded parts together).
    pub fn ext_norm(&self, ext: &[C64], g: &Grade) -> f64 {
        match &self.repr {
            Repr::Matrix { n } => spectral_norm(ext, *n),
            Repr::Germs { .. } => weighted_l1(ext, g.to_f64(), 0),
            Repr::Kondratiev { log_weights, .. } => weighted_l2(ext, log_weights, g.to_f64()),
        }
    }

    /// Key used in the JSON coefficient map for stored index `i`.
    pub fn coefficient_key(&self, i: usize) -> String {
        match &self.repr {
            Repr::Matrix { n } => format!("{},{}", i / n, i % n),
            Repr::Germs { .. } => i.to_string(),
            Repr::Kondratiev { indices, .. } => indices[i]
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    pub fn parse_coefficient_key(&self, key: &str) -> Result<usize> {
        let bad = || Error::Schema(format!("bad coefficient key {key:?} for {} instance", self.kind().name()));
        let parts: Vec<usize> = key
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match &self.repr {
            Repr::Matrix { n } => match parts.as_slice() {
                [i, j] if i < n && j < n => Ok(i * n + j),
                _ => Err(bad()),
            },
            Repr::Germs { degree } => match parts.as_slice() {
                [k] if k <= degree => Ok(*k),
                _ => Err(bad()),
            },
            Repr::Kondratiev {
                indices, base_len, ..
            } => indices[..*base_len]
                .iter()
                .position(|g| g.len() == parts.len() && g.iter().zip(&parts).all(|(a, b)| *a as usize == *b))
                .ok_or_else(bad),
        }
    }

    /// Multi-index of a stored Kondratiev coefficient.
    pub fn multi_index(&self, i: usize) -> Option<&[u32]> {
        match &self.repr {
            Repr::Kondratiev { indices, base_len, .. } if i < *base_len => Some(&indices[i]),
            _ => None,
        }
    }
}

fn weighted_l1(x: &[C64], r: f64, first_power: usize) -> f64 {
    let mut w = r.powi(first_power as i32);
    let mut s = 0.0;
    for c in x {
        s += c.norm() * w;
        w *= r;
    }
    s
}

fn weighted_l2(x: &[C64], log_weights: &[f64], p: f64) -> f64 {
    x.iter()
        .zip(log_weights)
        .map(|(c, lw)| c.norm_sqr() * (-p * lw).exp())
        .sum::<f64>()
        .sqrt()
}

/// Largest singular value of a row-major `n x n` matrix.
pub(crate) fn spectral_norm(x: &[C64], n: usize) -> f64 {
    match n {
        1 => x[0].norm(),
        2 => {
            let fro: f64 = x.iter().map(|c| c.norm_sqr()).sum();
            let det = (x[0] * x[3] - x[1] * x[2]).norm();
            let disc = (fro * fro - 4.0 * det * det).max(0.0);
            ((fro + disc.sqrt()) / 2.0).sqrt()
        }
        _ => {
            let m = DMatrix::from_row_slice(n, n, x);
            m.singular_values().iter().cloned().fold(0.0, f64::max)
        }
    }
}

/// Per-grade tail bounds. Missing grades are unknown (infinite).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TailBounds(BTreeMap<Grade, f64>);

impl TailBounds {
    pub fn exact(ladder: &Ladder) -> TailBounds {
        TailBounds(ladder.tracked().iter().map(|g| (*g, 0.0)).collect())
    }

    pub fn from_map(map: BTreeMap<Grade, f64>) -> TailBounds {
        TailBounds(map.into_iter().filter(|(_, v)| v.is_finite() && *v >= 0.0).collect())
    }

    /// Builds bounds from a closure over the tracked grades, dropping
    /// non-finite values.
    pub fn from_fn(ladder: &Ladder, mut f: impl FnMut(&Grade) -> f64) -> TailBounds {
        let mut map = BTreeMap::new();
        for g in ladder.tracked() {
            let v = f(g);
            if v.is_finite() {
                map.insert(*g, v.max(0.0));
            }
        }
        TailBounds(map)
    }

    pub fn is_exact(&self) -> bool {
        self.0.values().any(|v| *v == 0.0)
    }

    pub fn bound(&self, g: &Grade) -> f64 {
        if self.is_exact() {
            return 0.0;
        }
        self.0.get(g).copied().unwrap_or(f64::INFINITY)
    }

    pub fn map(&self) -> &BTreeMap<Grade, f64> {
        &self.0
    }

    pub fn sum(&self, other: &TailBounds, ladder: &Ladder) -> TailBounds {
        if self.is_exact() && other.is_exact() {
            return TailBounds::exact(ladder);
        }
        TailBounds::from_fn(ladder, |g| self.bound(g) + other.bound(g))
    }

    pub fn scaled(&self, s: f64) -> TailBounds {
        if self.is_exact() {
            return self.clone();
        }
        TailBounds(self.0.iter().map(|(g, v)| (*g, v * s)).collect())
    }

    /// Adds a non-negative amount at every grade where both are finite.
    pub fn add_fn(&self, ladder: &Ladder, mut f: impl FnMut(&Grade) -> f64) -> TailBounds {
        TailBounds::from_fn(ladder, |g| self.bound(g) + f(g))
    }
}

/// `x * y` for non-negative bounds where `0 * inf = 0`.
pub(crate) fn bound_mul(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        0.0
    } else {
        x * y
    }
}

/// A truncated element of an instance.
#[derive(Clone)]
pub struct Element {
    algebra: Arc<Algebra>,
    coeffs: Vec<C64>,
    tail: TailBounds,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Element")
            .field("instance", &self.algebra.kind().name())
            .field("coeffs", &self.coeffs)
            .field("tail", &self.tail)
            .finish()
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.coeffs == other.coeffs && self.tail == other.tail
    }
}

impl Element {
    pub fn new(algebra: &Arc<Algebra>, coeffs: Vec<C64>) -> Result<Element> {
        if coeffs.len() != algebra.dim() {
            return Err(Error::Schema(format!(
                "expected {} coefficients for the {} instance, got {}",
                algebra.dim(),
                algebra.kind().name(),
                coeffs.len()
            )));
        }
        Ok(Element {
            tail: TailBounds::exact(algebra.ladder()),
            algebra: Arc::clone(algebra),
            coeffs,
        })
    }

    pub fn with_tail(mut self, tail: TailBounds) -> Element {
        self.tail = tail;
        self
    }

    pub(crate) fn from_parts(algebra: Arc<Algebra>, coeffs: Vec<C64>, tail: TailBounds) -> Element {
        debug_assert_eq!(coeffs.len(), algebra.dim());
        Element { algebra, coeffs, tail }
    }

    pub fn unit(algebra: &Arc<Algebra>) -> Element {
        Element::from_parts(Arc::clone(algebra), algebra.unit_coeffs(), TailBounds::exact(algebra.ladder()))
    }

    pub fn zero(algebra: &Arc<Algebra>) -> Element {
        Element::from_parts(
            Arc::clone(algebra),
            vec![C64::new(0.0, 0.0); algebra.dim()],
            TailBounds::exact(algebra.ladder()),
        )
    }

    pub fn scalar(algebra: &Arc<Algebra>, c: C64) -> Element {
        Element::unit(algebra).scaled(c)
    }

    pub fn from_matrix(algebra: &Arc<Algebra>, m: &DMatrix<C64>) -> Result<Element> {
        let n = algebra
            .matrix_size()
            .ok_or_else(|| Error::Unsupported("from_matrix needs the matrix instance".into()))?;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Schema(format!("expected a {n}x{n} matrix")));
        }
        let coeffs = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        Element::new(algebra, coeffs)
    }

    pub fn to_matrix(&self) -> Option<DMatrix<C64>> {
        let n = self.algebra.matrix_size()?;
        Some(DMatrix::from_row_slice(n, n, &self.coeffs))
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn ladder(&self) -> &Ladder {
        self.algebra.ladder()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn tail(&self) -> &TailBounds {
        &self.tail
    }

    pub fn is_exact(&self) -> bool {
        self.tail.is_exact()
    }

    pub fn same_instance(&self, other: &Element) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::InstanceMismatch {
                left: format!("{:?}", self.algebra.spec()),
                right: format!("{:?}", other.algebra.spec()),
            })
        }
    }

    /// Exact norm of the stored representation at `g`.
    pub fn norm(&self, g: &Grade) -> Result<f64> {
        self.ladder().check(g)?;
        Ok(self.algebra.norm_slice(&self.coeffs, g))
    }

    pub fn tail_bound(&self, g: &Grade) -> f64 {
        self.tail.bound(g)
    }

    /// Upper bound on the norm of the represented element (stored norm plus tail).
    pub fn norm_bound(&self, g: &Grade) -> Result<f64> {
        Ok(self.norm(g)? + self.tail_bound(g))
    }

    /// First tracked grade where the tail bound is finite.
    pub fn home_grade(&self) -> Grade {
        let tracked = self.ladder().tracked();
        tracked
            .iter()
            .find(|g| self.tail.bound(g).is_finite())
            .copied()
            .unwrap_or(tracked[0])
    }

    pub fn multiply(&self, other: &Element) -> Result<Element> {
        self.same_instance(other)?;
        let alg = &self.algebra;
        let mut ext = vec![C64::new(0.0, 0.0); alg.ext_dim()];
        alg.mul_acc_ext(&self.coeffs, &other.coeffs, &mut ext);
        let dim = alg.dim();
        let both_exact = self.is_exact() && other.is_exact();
        let tail = if both_exact && !alg.truncates() {
            TailBounds::exact(alg.ladder())
        } else {
            TailBounds::from_fn(alg.ladder(), |g| {
                let discarded = alg.discarded_norm(&ext, g);
                let carried = if both_exact { 0.0 } else { product_tail(self, other, g) };
                discarded + carried
            })
        };
        ext.truncate(dim);
        Ok(Element::from_parts(Arc::clone(alg), ext, tail))
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.same_instance(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Element::from_parts(
            Arc::clone(&self.algebra),
            coeffs,
            self.tail.sum(&other.tail, self.ladder()),
        ))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.same_instance(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Element::from_parts(
            Arc::clone(&self.algebra),
            coeffs,
            self.tail.sum(&other.tail, self.ladder()),
        ))
    }

    pub fn scaled(&self, c: C64) -> Element {
        Element::from_parts(
            Arc::clone(&self.algebra),
            self.coeffs.iter().map(|x| x * c).collect(),
            self.tail.scaled(c.norm()),
        )
    }

    pub fn neg(&self) -> Element {
        self.scaled(C64::new(-1.0, 0.0))
    }

    /// `1 - self`.
    pub fn one_minus(&self) -> Element {
        let mut out = self.neg();
        for (o, u) in out.coeffs.iter_mut().zip(self.algebra.unit_coeffs()) {
            *o += u;
        }
        out
    }

    pub fn to_doc(&self) -> ElementDoc {
        ElementDoc {
            spec: self.algebra.spec().clone(),
            coefficients: coefficient_map(&self.algebra, &self.coeffs),
            tail_bounds: self.tail.map().clone(),
        }
    }

    pub fn from_doc(doc: &ElementDoc) -> Result<Element> {
        let algebra = Algebra::new(doc.spec.clone())?;
        Element::from_doc_in(&algebra, doc)
    }

    /// Loads a document into an already built algebra; the instance parameters
    /// must match.
    pub fn from_doc_in(algebra: &Arc<Algebra>, doc: &ElementDoc) -> Result<Element> {
        if doc.spec != *algebra.spec() {
            return Err(Error::InstanceMismatch {
                left: format!("{:?}", algebra.spec()),
                right: format!("{:?}", doc.spec),
            });
        }
        let coeffs = parse_coefficient_map(algebra, &doc.coefficients)?;
        Ok(Element::from_parts(
            Arc::clone(algebra),
            coeffs,
            TailBounds::from_map(doc.tail_bounds.clone()),
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Element> {
        let doc: ElementDoc = serde_json::from_str(text)?;
        Element::from_doc(&doc)
    }
}

/// Bound on `||ab - a_s b_s||_g` from the stored parts `a_s, b_s` and their tails.
fn product_tail(a: &Element, b: &Element, g: &Grade) -> f64 {
    let alg = &a.algebra;
    propagated_tail(
        a.ladder(),
        g,
        |x| alg.norm_slice(&a.coeffs, x),
        |x| a.tail_bound(x),
        |x| alg.norm_slice(&b.coeffs, x),
        |x| b.tail_bound(x),
    )
}

/// Tail of a product from the stored norms and tail bounds of its factors:
/// `ab - a_s b_s = a_t b + a_s b_t`, with either factor measured at a grade
/// `alpha` satisfying `h(alpha) <= g`. Takes the best such `alpha`.
pub(crate) fn propagated_tail(
    ladder: &Ladder,
    g: &Grade,
    a_norm: impl Fn(&Grade) -> f64,
    a_tail: impl Fn(&Grade) -> f64,
    b_norm: impl Fn(&Grade) -> f64,
    b_tail: impl Fn(&Grade) -> f64,
) -> f64 {
    let a_g = a_norm(g);
    let b_g = b_norm(g);
    let ta_g = a_tail(g);
    let tb_g = b_tail(g);

    let mut candidates: Vec<Grade> = ladder
        .tracked()
        .iter()
        .filter(|alpha| ladder.le(&ladder.h(alpha), g))
        .copied()
        .collect();
    if let Some(alpha) = largest_absorbed(ladder, g) {
        candidates.push(alpha);
    }

    let mut best = f64::INFINITY;
    for alpha in candidates {
        let Ok(constant) = ladder.constant(g, &alpha) else {
            continue;
        };
        let left = constant * (bound_mul(a_tail(&alpha), b_g + tb_g) + bound_mul(a_norm(&alpha), tb_g));
        let right = constant * (bound_mul(b_tail(&alpha), a_g + ta_g) + bound_mul(b_norm(&alpha), ta_g));
        best = best.min(left).min(right);
    }
    best
}

/// Largest `alpha` (in ladder order) with `h(alpha) <= g`.
fn largest_absorbed(ladder: &Ladder, g: &Grade) -> Option<Grade> {
    match ladder.kind() {
        InstanceKind::Matrix | InstanceKind::Germs => Some(*g),
        InstanceKind::Kondratiev => {
            let p = g.as_integer() - 2;
            (p >= 0).then(|| Grade::integer(p))
        }
    }
}

pub(crate) fn coefficient_map(algebra: &Algebra, coeffs: &[C64]) -> BTreeMap<String, [f64; 2]> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (algebra.coefficient_key(i), [c.re, c.im]))
        .collect()
}

pub(crate) fn parse_coefficient_map(algebra: &Algebra, map: &BTreeMap<String, [f64; 2]>) -> Result<Vec<C64>> {
    let mut coeffs = vec![C64::new(0.0, 0.0); algebra.dim()];
    for (key, [re, im]) in map {
        let i = algebra.parse_coefficient_key(key)?;
        coeffs[i] = C64::new(*re, *im);
    }
    Ok(coeffs)
}

/// JSON form of an [`Element`].
///
/// ```json
/// {"instance": "germs", "params": {"degree": 2, "radii": ["1/2"]},
///  "coefficients": {"0": [1.0, 0.0], "1": [2.0, 0.0], "2": [1.0, 0.0]},
///  "tail_bounds": {"1/2": 0.0}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementDoc {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    pub coefficients: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub tail_bounds: BTreeMap<Grade, f64>,
}
