//! Fourier series with coefficients in a strong-algebra instance.
//!
//! A [`WienerElement`] stores `a_n` for `|n| <= N` as a flat buffer and one
//! tail bound per grade covering everything not stored: coefficients beyond
//! the half-width and truncation losses inside the coefficients.

mod localize;
mod patch;

pub use localize::{
    b0_of_epsilon, choose_localization, cutoff_omega, local_left_inverse, localize, localize_with_width,
    omega_coefficient, omega_tail, series_left_inverse, DecayEntry, LocalInverse, Localization,
    LocalizationCertificate, LocalizationOptions, MAX_LOCALIZATION_EPSILON,
};
pub use patch::{
    arc_cover_gaps, patch_global_inverse, wiener_invertibility_scan, wiener_left_inverse, wiener_right_inverse,
    LocalSummary, PatchOptions, PatchedInverse, ScanPoint, ScanReport, ScanSummary, Side, WienerInverseReport,
};

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::calculus::GradedValue;
use crate::element::{coefficient_map, parse_coefficient_map, propagated_tail, Algebra, Element, TailBounds, C64};
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::instance::{InstanceSpec, Ladder};

/// Scalar coefficients kept per product before overflow goes to the tail.
pub const DEFAULT_SCALAR_BUDGET: usize = 4096;

/// Largest half-width whose `(2N+1) * dim` scalars fit [`DEFAULT_SCALAR_BUDGET`].
pub fn default_half_width_cap(dim: usize) -> usize {
    ((DEFAULT_SCALAR_BUDGET / dim.max(1)).saturating_sub(1) / 2).max(1)
}

/// Wraps `t` into `[-pi, pi)`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = (t + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Grid point `j` of a uniform grid of size `g` on `[-pi, pi)`.
pub fn grid_point(j: usize, g: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / g as f64
}

#[derive(Clone)]
pub struct WienerElement {
    algebra: Arc<Algebra>,
    half_width: usize,
    data: Vec<C64>,
    tail: TailBounds,
    max_half_width: usize,
}

impl fmt::Debug for WienerElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WienerElement")
            .field("instance", &self.algebra.kind().name())
            .field("half_width", &self.half_width)
            .field("data", &self.data)
            .field("tail", &self.tail)
            .finish()
    }
}

impl PartialEq for WienerElement {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra
            && self.half_width == other.half_width
            && self.data == other.data
            && self.tail == other.tail
    }
}

impl WienerElement {
    pub fn zero(algebra: &Arc<Algebra>, half_width: usize) -> WienerElement {
        WienerElement {
            algebra: Arc::clone(algebra),
            half_width,
            data: vec![C64::new(0.0, 0.0); (2 * half_width + 1) * algebra.dim()],
            tail: TailBounds::exact(algebra.ladder()),
            max_half_width: default_half_width_cap(algebra.dim()).max(half_width),
        }
    }

    /// The constant series with coefficient `e` at index 0.
    pub fn constant(e: &Element) -> WienerElement {
        let mut w = WienerElement::zero(e.algebra(), 0);
        w.data.copy_from_slice(e.coeffs());
        w.tail = e.tail().clone();
        w
    }

    pub fn unit(algebra: &Arc<Algebra>) -> WienerElement {
        WienerElement::constant(&Element::unit(algebra))
    }

    /// `e * exp(i n t)`.
    pub fn monomial(e: &Element, n: i64) -> WienerElement {
        let mut w = WienerElement::zero(e.algebra(), n.unsigned_abs() as usize);
        w.set_coeff(n, e);
        w.tail = e.tail().clone();
        w
    }

    /// Builds from `(n, a_n)` pairs; the half-width is the largest `|n|`.
    pub fn from_coeffs(algebra: &Arc<Algebra>, coeffs: &[(i64, Element)]) -> Result<WienerElement> {
        let half_width = coeffs.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
        let mut w = WienerElement::zero(algebra, half_width);
        for (n, e) in coeffs {
            if **e.algebra() != **algebra {
                return Err(Error::InstanceMismatch {
                    left: format!("{:?}", algebra.spec()),
                    right: format!("{:?}", e.algebra().spec()),
                });
            }
            let mut sum = w.coeff(*n);
            for (s, x) in sum.coeffs_mut().iter_mut().zip(e.coeffs()) {
                *s += x;
            }
            w.set_coeff(*n, &sum);
            if !e.is_exact() {
                w.tail = w.tail.sum(e.tail(), algebra.ladder());
            }
        }
        Ok(w)
    }

    /// Scalar-instance convenience: `sum c_n e^{int}` for `n = -N..=N`.
    pub fn from_scalars(algebra: &Arc<Algebra>, half_width: usize, values: &[C64]) -> Result<WienerElement> {
        if algebra.dim() != 1 || values.len() != 2 * half_width + 1 {
            return Err(Error::Schema("from_scalars needs a scalar instance and 2N+1 values".into()));
        }
        let mut w = WienerElement::zero(algebra, half_width);
        w.data.copy_from_slice(values);
        Ok(w)
    }

    pub fn with_tail(mut self, tail: TailBounds) -> WienerElement {
        self.tail = tail;
        self
    }

    pub fn with_max_half_width(mut self, cap: usize) -> WienerElement {
        self.max_half_width = cap.max(1);
        self
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn max_half_width(&self) -> usize {
        self.max_half_width
    }

    pub fn tail(&self) -> &TailBounds {
        &self.tail
    }

    pub fn is_exact(&self) -> bool {
        self.tail.is_exact()
    }

    fn dim(&self) -> usize {
        self.algebra.dim()
    }

    fn slot(&self, n: i64) -> Option<usize> {
        let nw = self.half_width as i64;
        (-nw..=nw).contains(&n).then(|| (n + nw) as usize)
    }

    /// Coefficient slice for index `n`, `None` outside the stored range.
    pub fn coeff_slice(&self, n: i64) -> Option<&[C64]> {
        let d = self.dim();
        self.slot(n).map(|k| &self.data[k * d..(k + 1) * d])
    }

    /// Coefficient `a_n` (zero outside the stored range).
    pub fn coeff(&self, n: i64) -> Element {
        match self.coeff_slice(n) {
            Some(s) => Element::new(&self.algebra, s.to_vec()).expect("dimension"),
            None => Element::zero(&self.algebra),
        }
    }

    /// Overwrites `a_n`, widening the storage if needed.
    pub fn set_coeff(&mut self, n: i64, e: &Element) {
        let need = n.unsigned_abs() as usize;
        if need > self.half_width {
            *self = self.widened(need);
        }
        let d = self.dim();
        let k = self.slot(n).expect("in range");
        self.data[k * d..(k + 1) * d].copy_from_slice(e.coeffs());
    }

    fn widened(&self, half_width: usize) -> WienerElement {
        let mut w = WienerElement::zero(&self.algebra, half_width);
        w.tail = self.tail.clone();
        w.max_half_width = self.max_half_width.max(half_width);
        let d = self.dim();
        let off = (half_width - self.half_width) * d;
        w.data[off..off + self.data.len()].copy_from_slice(&self.data);
        w
    }

    /// Indices `-N..=N` with their coefficient slices.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &[C64])> + '_ {
        let nw = self.half_width as i64;
        self.data
            .chunks(self.dim())
            .enumerate()
            .map(move |(k, c)| (k as i64 - nw, c))
    }

    /// Raw flat buffer: coefficient `n` occupies `[(n+N)*dim, (n+N+1)*dim)`.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    fn same_instance(&self, other: &WienerElement) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::InstanceMismatch {
                left: format!("{:?}", self.algebra.spec()),
                right: format!("{:?}", other.algebra.spec()),
            })
        }
    }

    pub fn ladder(&self) -> &Ladder {
        self.algebra.ladder()
    }

    /// Graded l1 norm of the stored coefficients.
    pub fn norm(&self, g: &Grade) -> Result<f64> {
        self.ladder().check(g)?;
        Ok(self.stored_norm(g))
    }

    fn stored_norm(&self, g: &Grade) -> f64 {
        self.data.chunks(self.dim()).map(|c| self.algebra.norm_slice(c, g)).sum()
    }

    pub fn tail_bound(&self, g: &Grade) -> f64 {
        self.tail.bound(g)
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

    /// `sum ||a_n||_g + tail(g)`.
    pub fn norm_bound(&self, g: &Grade) -> Result<f64> {
        Ok(self.norm(g)? + self.tail_bound(g))
    }

    /// Cauchy convolution, cut back to `min(N_a + N_b, cap)` with the overflow
    /// and any coefficient truncation moved into the tail.
    pub fn multiply(&self, other: &WienerElement) -> Result<WienerElement> {
        self.same_instance(other)?;
        let alg = &self.algebra;
        let d = alg.dim();
        let ext_d = alg.ext_dim();
        let full = self.half_width + other.half_width;
        let cap = self.max_half_width.max(other.max_half_width);
        let out_width = full.min(cap);
        let ladder = alg.ladder();
        let tracked = ladder.tracked().to_vec();

        let mut out = WienerElement::zero(alg, out_width);
        out.max_half_width = cap;
        let mut lost = vec![0.0f64; tracked.len()];
        let mut ext = vec![C64::new(0.0, 0.0); ext_d];
        let (na, nb) = (self.half_width as i64, other.half_width as i64);
        for n in -(full as i64)..=(full as i64) {
            ext.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            let lo = (-na).max(n - nb);
            let hi = na.min(n + nb);
            let mut any = false;
            for m in lo..=hi {
                let a = self.coeff_slice(m).expect("range");
                let b = other.coeff_slice(n - m).expect("range");
                if a.iter().all(|c| *c == C64::new(0.0, 0.0)) || b.iter().all(|c| *c == C64::new(0.0, 0.0)) {
                    continue;
                }
                alg.mul_acc_ext(a, b, &mut ext);
                any = true;
            }
            if !any {
                continue;
            }
            if n.unsigned_abs() as usize <= out_width {
                let k = (n + out_width as i64) as usize;
                out.data[k * d..(k + 1) * d].copy_from_slice(&ext[..d]);
                if alg.truncates() {
                    for (l, g) in lost.iter_mut().zip(&tracked) {
                        *l += alg.discarded_norm(&ext, g);
                    }
                }
            } else {
                for (l, g) in lost.iter_mut().zip(&tracked) {
                    *l += alg.ext_norm(&ext, g);
                }
            }
        }

        let both_exact = self.is_exact() && other.is_exact();
        if both_exact && lost.iter().all(|l| *l == 0.0) {
            return Ok(out);
        }
        let lost: BTreeMap<Grade, f64> = tracked.iter().copied().zip(lost).collect();
        out.tail = TailBounds::from_fn(ladder, |g| {
            let carried = if both_exact {
                0.0
            } else {
                propagated_tail(
                    ladder,
                    g,
                    |x| self.stored_norm(x),
                    |x| self.tail_bound(x),
                    |x| other.stored_norm(x),
                    |x| other.tail_bound(x),
                )
            };
            lost[g] + carried
        });
        Ok(out)
    }

    fn combine(&self, other: &WienerElement, sign: f64) -> Result<WienerElement> {
        self.same_instance(other)?;
        let w = self.half_width.max(other.half_width);
        let mut out = self.widened(w);
        out.max_half_width = self.max_half_width.max(other.max_half_width);
        let d = self.dim();
        let off = (w - other.half_width) * d;
        for (o, x) in out.data[off..off + other.data.len()].iter_mut().zip(&other.data) {
            *o += x * sign;
        }
        out.tail = self.tail.sum(&other.tail, self.ladder());
        Ok(out)
    }

    pub fn add(&self, other: &WienerElement) -> Result<WienerElement> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &WienerElement) -> Result<WienerElement> {
        self.combine(other, -1.0)
    }

    pub fn scaled(&self, c: C64) -> WienerElement {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= c);
        out.tail = self.tail.scaled(c.norm());
        out
    }

    /// `sum a_n e^{int}` over the stored coefficients; the tail bounds the error.
    pub fn evaluate(&self, t: f64) -> Element {
        let d = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); d];
        for (n, c) in self.iter() {
            let phase = C64::from_polar(1.0, n as f64 * t);
            for (a, x) in acc.iter_mut().zip(c) {
                *a += x * phase;
            }
        }
        Element::new(&self.algebra, acc).expect("dimension").with_tail(self.tail.clone())
    }

    /// Values at the uniform grid `t_j = -pi + 2 pi j / G` as flat
    /// `G * dim` buffer, exact for any `G` (indices are folded mod `G`).
    pub fn evaluate_grid_raw(&self, grid: usize) -> Vec<C64> {
        let d = self.dim();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_inverse(grid);
        let mut out = vec![C64::new(0.0, 0.0); grid * d];
        let mut buf = vec![C64::new(0.0, 0.0); grid];
        for k in 0..d {
            buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (n, c) in self.iter() {
                // e^{in(-pi)} = (-1)^n
                let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[n.rem_euclid(grid as i64) as usize] += c[k] * sign;
            }
            fft.process(&mut buf);
            for (j, v) in buf.iter().enumerate() {
                out[j * d + k] = *v;
            }
        }
        out
    }

    pub fn evaluate_grid(&self, grid: usize) -> Vec<Element> {
        let d = self.dim();
        self.evaluate_grid_raw(grid)
            .chunks(d)
            .map(|c| Element::new(&self.algebra, c.to_vec()).expect("dimension").with_tail(self.tail.clone()))
            .collect()
    }

    /// `a(t + t0)`: coefficient `a_n` becomes `a_n e^{i n t0}`.
    pub fn rotate(&self, t0: f64) -> WienerElement {
        let mut out = self.clone();
        let d = self.dim();
        let nw = self.half_width as i64;
        for (k, chunk) in out.data.chunks_mut(d).enumerate() {
            let phase = C64::from_polar(1.0, (k as i64 - nw) as f64 * t0);
            chunk.iter_mut().for_each(|x| *x *= phase);
        }
        out
    }

    /// Coefficientwise transpose for the matrix instance, identity otherwise.
    pub fn transpose(&self) -> WienerElement {
        let Some(n) = self.algebra.matrix_size() else {
            return self.clone();
        };
        let mut out = self.clone();
        for (chunk, src) in out.data.chunks_mut(n * n).zip(self.data.chunks(n * n)) {
            for i in 0..n {
                for j in 0..n {
                    chunk[i * n + j] = src[j * n + i];
                }
            }
        }
        out
    }

    /// Keeps the coefficients with `keep(n)` and zeroes the rest. The tail is
    /// kept as is (splitting the unknown part is not possible).
    pub fn filter_indices(&self, keep: impl Fn(i64) -> bool) -> WienerElement {
        let mut out = self.clone();
        let d = self.dim();
        let nw = self.half_width as i64;
        for (k, chunk) in out.data.chunks_mut(d).enumerate() {
            if !keep(k as i64 - nw) {
                chunk.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            }
        }
        out
    }

    /// Cuts the stored range to `half_width`, moving the dropped mass into the tail.
    pub fn truncated(&self, half_width: usize) -> WienerElement {
        if half_width >= self.half_width {
            return self.clone();
        }
        let d = self.dim();
        let mut out = WienerElement::zero(&self.algebra, half_width);
        out.max_half_width = self.max_half_width;
        let off = (self.half_width - half_width) * d;
        let len = out.data.len();
        out.data.copy_from_slice(&self.data[off..off + len]);
        let dropped: Vec<&[C64]> = self
            .iter()
            .filter(|(n, _)| n.unsigned_abs() as usize > half_width)
            .map(|(_, c)| c)
            .collect();
        if dropped.iter().all(|c| c.iter().all(|x| *x == C64::new(0.0, 0.0))) {
            out.tail = self.tail.clone();
        } else {
            out.tail = TailBounds::from_fn(self.ladder(), |g| {
                self.tail_bound(g) + dropped.iter().map(|c| self.algebra.norm_slice(c, g)).sum::<f64>()
            });
        }
        out
    }

    /// Largest `|n|` with a nonzero stored coefficient.
    pub fn support_width(&self) -> usize {
        self.iter()
            .filter(|(_, c)| c.iter().any(|x| *x != C64::new(0.0, 0.0)))
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn to_doc(&self) -> WienerDoc {
        WienerDoc {
            spec: self.algebra.spec().clone(),
            half_width: self.half_width,
            coefficients: self
                .iter()
                .filter(|(_, c)| c.iter().any(|x| *x != C64::new(0.0, 0.0)))
                .map(|(n, c)| (n.to_string(), coefficient_map(&self.algebra, c)))
                .collect(),
            tail_bounds: self.tail.map().clone(),
        }
    }

    pub fn from_doc(doc: &WienerDoc) -> Result<WienerElement> {
        let algebra = Algebra::new(doc.spec.clone())?;
        WienerElement::from_doc_in(&algebra, doc)
    }

    pub fn from_doc_in(algebra: &Arc<Algebra>, doc: &WienerDoc) -> Result<WienerElement> {
        if doc.spec != *algebra.spec() {
            return Err(Error::InstanceMismatch {
                left: format!("{:?}", algebra.spec()),
                right: format!("{:?}", doc.spec),
            });
        }
        let mut w = WienerElement::zero(algebra, doc.half_width);
        let d = algebra.dim();
        for (key, map) in &doc.coefficients {
            let n: i64 = key
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad Fourier index {key:?}")))?;
            let k = w
                .slot(n)
                .ok_or_else(|| Error::Schema(format!("Fourier index {n} exceeds half_width {}", doc.half_width)))?;
            let coeffs = parse_coefficient_map(algebra, map)?;
            w.data[k * d..(k + 1) * d].copy_from_slice(&coeffs);
        }
        w.tail = TailBounds::from_map(doc.tail_bounds.clone());
        Ok(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<WienerElement> {
        let doc: WienerDoc = serde_json::from_str(text)?;
        WienerElement::from_doc(&doc)
    }
}

/// JSON form of a [`WienerElement`]: Fourier index to coefficient map, where
/// each coefficient uses the element format. Zero coefficients are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerDoc {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    pub half_width: usize,
    pub coefficients: BTreeMap<String, BTreeMap<String, [f64; 2]>>,
    #[serde(default)]
    pub tail_bounds: BTreeMap<Grade, f64>,
}

impl GradedValue for WienerElement {
    fn ladder(&self) -> &Ladder {
        WienerElement::ladder(self)
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
        WienerElement::add(self, other)
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        WienerElement::sub(self, other)
    }
    fn scale(&self, c: C64) -> Self {
        self.scaled(c)
    }
    fn unit_like(&self) -> Self {
        WienerElement::unit(&self.algebra).with_max_half_width(self.max_half_width)
    }
    fn scalar_len(&self) -> usize {
        self.data.len()
    }
}

/// Fourier coefficients `|n| <= half_width` of grid samples
/// `v_j = f(t_j)`, `t_j = -pi + 2 pi j / G`, plus the l1 mass (per grade) of
/// the discrete spectrum outside the kept window.
pub(crate) fn project_grid(
    algebra: &Arc<Algebra>,
    values: &[C64],
    grid: usize,
    half_width: usize,
) -> (WienerElement, BTreeMap<Grade, f64>) {
    let d = algebra.dim();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(grid);
    let mut spectrum = vec![C64::new(0.0, 0.0); grid * d];
    let mut buf = vec![C64::new(0.0, 0.0); grid];
    for k in 0..d {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = values[j * d + k];
        }
        fft.process(&mut buf);
        for (m, v) in buf.iter().enumerate() {
            spectrum[m * d + k] = *v / grid as f64;
        }
    }
    // discrete index m corresponds to n = m (m < G/2) or m - G
    let index = |m: usize| -> i64 {
        if m <= grid / 2 {
            m as i64
        } else {
            m as i64 - grid as i64
        }
    };
    let half_width = half_width.min((grid - 1) / 2);
    let mut out = WienerElement::zero(algebra, half_width);
    let mut outside: BTreeMap<Grade, f64> = algebra.ladder().tracked().iter().map(|g| (*g, 0.0)).collect();
    for m in 0..grid {
        let n = index(m);
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let c: Vec<C64> = spectrum[m * d..(m + 1) * d].iter().map(|x| x * sign).collect();
        if n.unsigned_abs() as usize <= half_width {
            let k = (n + half_width as i64) as usize;
            out.data[k * d..(k + 1) * d].copy_from_slice(&c);
        } else {
            for (g, v) in outside.iter_mut() {
                *v += algebra.norm_slice(&c, g);
            }
        }
    }
    (out, outside)
}

pub(crate) fn add_tail(w: WienerElement, extra: &BTreeMap<Grade, f64>) -> WienerElement {
    if extra.values().all(|v| *v == 0.0) {
        return w;
    }
    let tail = TailBounds::from_fn(w.ladder(), |g| w.tail_bound(g) + extra.get(g).copied().unwrap_or(f64::INFINITY));
    w.with_tail(tail)
}
