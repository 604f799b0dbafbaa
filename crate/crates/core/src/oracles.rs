//! Independent reference computations for testing: block-Toeplitz finite
//! sections, pointwise grid inversion and the scalar log-splitting
//! factorization. Nothing here goes through the series calculus or the
//! localization machinery; the only shared code is the coefficient container.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::FftPlanner;

use crate::element::{Algebra, C64};
use crate::error::{Error, Result};
use crate::wiener::WienerElement;

fn block_size(alg: &Algebra) -> Result<usize> {
    alg.matrix_size()
        .ok_or_else(|| Error::Unsupported(format!("oracles need a matrix instance, got {}", alg.kind().name())))
}

fn block(w: &WienerElement, n: i64, d: usize) -> DMatrix<C64> {
    match w.coeff_slice(n) {
        Some(c) => DMatrix::from_row_slice(d, d, c),
        None => DMatrix::zeros(d, d),
    }
}

fn from_blocks(alg: &Arc<Algebra>, blocks: &[(i64, DMatrix<C64>)]) -> WienerElement {
    let d = alg.matrix_size().unwrap_or(1);
    let half = blocks.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
    let mut out = WienerElement::zero(alg, half);
    for (n, m) in blocks {
        let mut row = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                row.push(m[(i, j)]);
            }
        }
        if let Ok(e) = crate::element::Element::new(alg, row) {
            out.set_coeff(*n, &e);
        }
    }
    out
}

/// Matrix of `x -> a x` restricted to indices `|n| <= W`, acting on the
/// stacked coefficient blocks of `x` (block `k` at rows `(k+W)d..`).
#[derive(Clone, Debug)]
pub struct FiniteSectionOperator {
    pub algebra: Arc<Algebra>,
    pub block: usize,
    pub half_width: usize,
    pub matrix: DMatrix<C64>,
}

impl FiniteSectionOperator {
    pub fn multiplication(a: &WienerElement, half_width: usize) -> Result<FiniteSectionOperator> {
        let d = block_size(a.algebra())?;
        let w = half_width as i64;
        let size = (2 * half_width + 1) * d;
        let mut matrix = DMatrix::zeros(size, size);
        for j in -w..=w {
            for k in -w..=w {
                let b = block(a, j - k, d);
                let (r, c) = (((j + w) as usize) * d, ((k + w) as usize) * d);
                matrix.view_mut((r, c), (d, d)).copy_from(&b);
            }
        }
        Ok(FiniteSectionOperator {
            algebra: a.algebra().clone(),
            block: d,
            half_width,
            matrix,
        })
    }

    /// `I - Pi M_a` where `Pi` keeps the block rows whose index satisfies `keep`.
    pub fn identity_minus_projected(
        a: &WienerElement,
        half_width: usize,
        keep: impl Fn(i64) -> bool,
    ) -> Result<FiniteSectionOperator> {
        let mut op = Self::multiplication(a, half_width)?;
        let d = op.block;
        let w = half_width as i64;
        for j in -w..=w {
            let r = ((j + w) as usize) * d;
            if !keep(j) {
                op.matrix.view_mut((r, 0), (d, op.matrix.ncols())).fill(C64::new(0.0, 0.0));
            }
        }
        op.matrix = DMatrix::identity(op.matrix.nrows(), op.matrix.ncols()) - &op.matrix;
        Ok(op)
    }

    fn stack(&self, x: &WienerElement) -> Result<DMatrix<C64>> {
        let d = self.block;
        let w = self.half_width as i64;
        if x.half_width() > self.half_width && x.iter().any(|(n, c)| n.abs() > w && c.iter().any(|v| v.norm() > 0.0)) {
            return Err(Error::Precondition("operand wider than the finite section".into()));
        }
        let mut out = DMatrix::zeros((2 * self.half_width + 1) * d, d);
        for k in -w..=w {
            out.view_mut((((k + w) as usize) * d, 0), (d, d)).copy_from(&block(x, k, d));
        }
        Ok(out)
    }

    fn unstack(&self, m: &DMatrix<C64>) -> WienerElement {
        let d = self.block;
        let w = self.half_width as i64;
        let blocks: Vec<(i64, DMatrix<C64>)> = (-w..=w)
            .map(|k| (k, m.view((((k + w) as usize) * d, 0), (d, d)).into_owned()))
            .collect();
        from_blocks(&self.algebra, &blocks)
    }

    pub fn apply(&self, x: &WienerElement) -> Result<WienerElement> {
        Ok(self.unstack(&(&self.matrix * self.stack(x)?)))
    }

    pub fn solve(&self, rhs: &WienerElement) -> Result<WienerElement> {
        let b = self.stack(rhs)?;
        let lu = self.matrix.clone().lu();
        let x = lu
            .solve(&b)
            .ok_or_else(|| Error::Singular {
                t: f64::NAN,
                detail: "finite section is singular".into(),
            })?;
        Ok(self.unstack(&x))
    }
}

/// Product `a x` through the finite section wide enough to hold it exactly.
pub fn toeplitz_apply(a: &WienerElement, x: &WienerElement) -> Result<WienerElement> {
    let op = FiniteSectionOperator::multiplication(a, a.half_width() + x.half_width())?;
    op.apply(x)
}

fn transpose_blocks(w: &WienerElement) -> Result<WienerElement> {
    let d = block_size(w.algebra())?;
    let blocks: Vec<(i64, DMatrix<C64>)> = w.iter().map(|(n, _)| (n, block(w, n, d).transpose())).collect();
    Ok(from_blocks(w.algebra(), &blocks))
}

/// Finite-section solutions of `x - P(kx) = f` and `y - Q(yk) = g`, with `P`
/// keeping `n < 0` and `Q` keeping `n >= 0`.
pub fn finite_section_pair_solve(
    k: &WienerElement,
    f: &WienerElement,
    g: &WienerElement,
    half_width: usize,
) -> Result<(WienerElement, WienerElement)> {
    let x = FiniteSectionOperator::identity_minus_projected(k, half_width, |n| n < 0)?.solve(f)?;
    // y - Q(yk) = g  <=>  y^T - Q(k^T y^T) = g^T
    let kt = transpose_blocks(k)?;
    let gt = transpose_blocks(g)?;
    let yt = FiniteSectionOperator::identity_minus_projected(&kt, half_width, |n| n >= 0)?.solve(&gt)?;
    Ok((x, transpose_blocks(&yt)?))
}

fn to_grid(w: &WienerElement, grid: usize, d: usize) -> Result<Vec<DMatrix<C64>>> {
    if grid <= 2 * w.half_width() {
        return Err(Error::Precondition(format!(
            "grid {grid} too small for half-width {}",
            w.half_width()
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(grid);
    let mut out = vec![DMatrix::zeros(d, d); grid];
    for e in 0..d * d {
        let mut buf = vec![C64::new(0.0, 0.0); grid];
        for (n, c) in w.iter() {
            buf[n.rem_euclid(grid as i64) as usize] = c[e];
        }
        fft.process(&mut buf);
        for (j, v) in buf.into_iter().enumerate() {
            out[j][(e / d, e % d)] = v;
        }
    }
    Ok(out)
}

fn from_grid(alg: &Arc<Algebra>, values: &[DMatrix<C64>], half_width: usize) -> Vec<(i64, DMatrix<C64>)> {
    let grid = values.len();
    let d = values[0].nrows();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(grid);
    let hw = half_width.min((grid - 1) / 2) as i64;
    let mut blocks: Vec<(i64, DMatrix<C64>)> = (-hw..=hw).map(|n| (n, DMatrix::zeros(d, d))).collect();
    for e in 0..d * d {
        let mut buf: Vec<C64> = values.iter().map(|m| m[(e / d, e % d)]).collect();
        fft.process(&mut buf);
        for (n, m) in blocks.iter_mut() {
            m[(e / d, e % d)] = buf[n.rem_euclid(grid as i64) as usize] / grid as f64;
        }
    }
    let _ = alg;
    blocks
}

#[derive(Clone, Debug)]
pub struct PointwiseInverse {
    pub inverse: WienerElement,
    /// Smallest singular value of `a(t_j)` over the grid.
    pub min_singular_value: f64,
    /// l1 mass of the coefficient blocks with `2^k <= |n| < 2^{k+1}`.
    pub decay: Vec<(usize, f64)>,
}

/// Inverts `a(t_j)` on an equispaced grid of `t_j = 2 pi j / grid` and
/// transforms back to coefficients with `|n| <= half_width`.
pub fn pointwise_inverse_oracle(a: &WienerElement, grid: usize, half_width: usize) -> Result<PointwiseInverse> {
    let d = block_size(a.algebra())?;
    let values = to_grid(a, grid, d)?;
    let mut min_sv = f64::INFINITY;
    let mut inv = Vec::with_capacity(grid);
    for (j, m) in values.iter().enumerate() {
        let sv = m.clone().singular_values().min();
        min_sv = min_sv.min(sv);
        let t = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
        if sv <= 1e-12 * m.norm().max(1.0) {
            return Err(Error::Singular {
                t,
                detail: format!("smallest singular value {sv:e}"),
            });
        }
        inv.push(m.clone().try_inverse().ok_or_else(|| Error::Singular {
            t,
            detail: "LU failed".into(),
        })?);
    }
    let blocks = from_grid(a.algebra(), &inv, half_width);
    let mut decay: Vec<(usize, f64)> = Vec::new();
    for (n, m) in &blocks {
        let abs = n.unsigned_abs() as usize;
        if abs == 0 {
            continue;
        }
        let k = usize::BITS as usize - 1 - abs.leading_zeros() as usize;
        if decay.len() <= k {
            decay.resize(k + 1, (0, 0.0));
        }
        decay[k].0 = k;
        decay[k].1 += m.iter().map(|v| v.norm()).sum::<f64>();
    }
    for (k, entry) in decay.iter_mut().enumerate() {
        entry.0 = k;
    }
    Ok(PointwiseInverse {
        inverse: from_blocks(a.algebra(), &blocks),
        min_singular_value: min_sv,
        decay,
    })
}

/// Scalar factorization `a = a_- a_+` by splitting `log a`: the `n < 0` part
/// of the logarithm goes to `a_+`, the rest to `a_-`. Requires winding
/// number zero.
pub fn scalar_wiener_hopf_oracle(
    a: &WienerElement,
    grid: usize,
    half_width: usize,
) -> Result<(WienerElement, WienerElement)> {
    let d = block_size(a.algebra())?;
    if d != 1 {
        return Err(Error::Unsupported("log-splitting oracle is scalar only".into()));
    }
    let values: Vec<C64> = to_grid(a, grid, 1)?.into_iter().map(|m| m[(0, 0)]).collect();
    let mut logs = Vec::with_capacity(grid);
    let mut prev = values[0].arg();
    let mut unwrapped = prev;
    for (j, v) in values.iter().enumerate() {
        if v.norm() == 0.0 {
            return Err(Error::Singular {
                t: 2.0 * std::f64::consts::PI * j as f64 / grid as f64,
                detail: "symbol vanishes".into(),
            });
        }
        let arg = v.arg();
        let mut delta = arg - prev;
        delta -= (delta / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
        unwrapped += delta;
        prev = arg;
        logs.push(C64::new(v.norm().ln(), unwrapped));
    }
    let mut closing = values[0].arg() - prev;
    closing -= (closing / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
    let winding = ((unwrapped + closing - values[0].arg()) / (2.0 * std::f64::consts::PI)).round() as i64;
    if winding != 0 {
        return Err(Error::Unsupported(format!("winding number {winding} is not zero")));
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(grid);
    let inverse = planner.plan_fft_inverse(grid);
    let mut coeffs = logs;
    forward.process(&mut coeffs);
    for c in coeffs.iter_mut() {
        *c /= grid as f64;
    }
    let half = grid / 2;
    let split = |keep_negative: bool| -> Vec<DMatrix<C64>> {
        let mut buf: Vec<C64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let n = if i > half { i as i64 - grid as i64 } else { i as i64 };
                if (n < 0) == keep_negative && !(grid % 2 == 0 && i == half) {
                    *c
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        inverse.process(&mut buf);
        buf.into_iter().map(|v| DMatrix::from_element(1, 1, v.exp())).collect()
    };
    let plus = from_blocks(a.algebra(), &from_grid(a.algebra(), &split(true), half_width));
    let minus = from_blocks(a.algebra(), &from_grid(a.algebra(), &split(false), half_width));
    Ok((minus, plus))
}
