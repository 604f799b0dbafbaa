//! Pointwise invertibility scans and the global inverse built from local ones.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::localize::trapezoid;
use super::{
    add_tail, choose_localization, grid_point, local_left_inverse, project_grid, wrap_angle, LocalInverse,
    LocalizationOptions, WienerElement,
};
use crate::calculus::{left_inverse, RANK_TOLERANCE};
use crate::element::{spectral_norm, Element, C64};
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::instance::InstanceKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t: f64,
    pub invertible: bool,
    /// Smallest singular value for matrices, `1 - ratio` of the Neumann test
    /// for series instances (0 when it fails).
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub side: Side,
    pub grid_size: usize,
    pub method: String,
    pub all_invertible: bool,
    pub min_margin: f64,
    pub argmin_t: f64,
    pub singular_points: Vec<f64>,
    pub points: Vec<ScanPoint>,
}

/// Tries to left (or right) invert `a(t)` at every point of a uniform grid.
pub fn wiener_invertibility_scan(a: &WienerElement, grid_size: usize, side: Side, tol: f64) -> Result<ScanReport> {
    if grid_size < 2 * a.half_width() + 1 {
        return Err(Error::Precondition(format!(
            "grid size {grid_size} below 2N+1 = {}",
            2 * a.half_width() + 1
        )));
    }
    let symbol = match side {
        Side::Left => a.clone(),
        Side::Right => a.transpose(),
    };
    let values = symbol.evaluate_grid(grid_size);
    let matrix = a.algebra().matrix_size();
    let mut points = Vec::with_capacity(grid_size);
    for (j, v) in values.iter().enumerate() {
        let t = grid_point(j, grid_size);
        let (invertible, margin) = match matrix {
            Some(n) => {
                let (smin, smax) = singular_extremes(v.coeffs(), n);
                (smin > RANK_TOLERANCE * smax.max(1.0), smin)
            }
            None => match left_inverse(v, tol) {
                Ok((_, witness)) => (true, witness.margin),
                Err(_) => (false, 0.0),
            },
        };
        points.push(ScanPoint { t, invertible, margin });
    }
    let (argmin_t, min_margin) = points
        .iter()
        .map(|p| (p.t, p.margin))
        .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Ok(ScanReport {
        side,
        grid_size,
        method: match a.algebra().kind() {
            InstanceKind::Matrix => "rank".into(),
            _ => "neumann".into(),
        },
        all_invertible: points.iter().all(|p| p.invertible),
        min_margin,
        argmin_t,
        singular_points: points.iter().filter(|p| !p.invertible).map(|p| p.t).collect(),
        points,
    })
}

fn singular_extremes(x: &[C64], n: usize) -> (f64, f64) {
    if n == 1 {
        let v = x[0].norm();
        return (v, v);
    }
    let m = nalgebra::DMatrix::from_row_slice(n, n, x);
    let sv = m.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (smin, spectral_norm(x, n).max(smin))
}

/// Uncovered parts of the circle `[-pi, pi)` left by the open arcs
/// `(center - half, center + half)`. Each gap is reported as its closed
/// endpoints; a single uncovered point appears as `(x, x)`.
pub fn arc_cover_gaps(arcs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if arcs.iter().any(|(_, w)| *w > PI) {
        return Vec::new();
    }
    #[derive(Clone, Copy)]
    struct Iv {
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
    }
    let mut ivs = Vec::new();
    for &(c, w) in arcs {
        if !(w > 0.0) {
            continue;
        }
        let start = wrap_angle(c - w);
        let end = start + 2.0 * w;
        if end <= PI {
            ivs.push(Iv {
                lo: start,
                hi: end,
                lo_closed: false,
                hi_closed: false,
            });
        } else {
            // the arc passes through pi = -pi, which is an interior point
            ivs.push(Iv {
                lo: start,
                hi: PI,
                lo_closed: false,
                hi_closed: true,
            });
            ivs.push(Iv {
                lo: -PI,
                hi: end - 2.0 * PI,
                lo_closed: true,
                hi_closed: false,
            });
        }
    }
    let covers = |iv: &Iv, x: f64| (iv.lo < x || (iv.lo == x && iv.lo_closed)) && (x < iv.hi || (x == iv.hi && iv.hi_closed));

    let mut gaps = Vec::new();
    let mut pos = -PI;
    while pos < PI {
        let best = ivs
            .iter()
            .filter(|iv| covers(iv, pos))
            .max_by(|a, b| a.hi.total_cmp(&b.hi).then(a.hi_closed.cmp(&b.hi_closed)));
        if let Some(iv) = best {
            if iv.hi >= PI {
                break;
            }
            pos = iv.hi;
            continue;
        }
        let next = ivs
            .iter()
            .filter(|iv| iv.lo >= pos)
            .map(|iv| iv.lo)
            .fold(f64::INFINITY, f64::min);
        if next >= PI {
            gaps.push((pos, PI));
            break;
        }
        gaps.push((pos, next));
        let reach = ivs
            .iter()
            .filter(|iv| iv.lo == next)
            .max_by(|a, b| a.hi.total_cmp(&b.hi))
            .expect("interval at next");
        if reach.hi >= PI {
            break;
        }
        pos = reach.hi;
    }
    gaps
}

#[derive(Clone, Debug)]
pub struct PatchOptions {
    /// Output half-width of the patched inverse.
    pub half_width: usize,
    /// Grid size for the partition of unity; `None` picks a power of two.
    pub grid_size: Option<usize>,
    pub tol: f64,
    /// Grade of the final residual check; `None` uses the home grade of `a`.
    pub grade: Option<Grade>,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            half_width: 64,
            grid_size: None,
            tol: 1e-6,
            grade: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchedInverse {
    #[serde(skip)]
    pub inverse: WienerElement,
    pub grade: Grade,
    pub grid_size: usize,
    pub half_width: usize,
    /// l1 mass of the grid spectrum outside the kept window (added to the tail).
    pub projection_error: f64,
    /// Largest `||a'(t_j) a(t_j) - 1||` over the grid.
    pub pointwise_residual: f64,
    /// `||a' a - 1||` including tails.
    pub residual: f64,
    pub cover: Vec<(f64, f64)>,
}

fn auto_grid(n_out: usize, n_in: usize) -> usize {
    let need = 4 * (2 * n_out.max(n_in) + 1);
    need.next_power_of_two().max(4096)
}

/// Glues local left inverses with a partition of unity made of trapezoids
/// `omega_{eps_i/2}(t - t_i)` (support exactly the window of each local),
/// normalized by their pointwise sum on a grid and projected back to
/// Fourier coefficients.
pub fn patch_global_inverse(a: &WienerElement, locals: &[LocalInverse], opts: &PatchOptions) -> Result<PatchedInverse> {
    let arcs: Vec<(f64, f64)> = locals.iter().map(|l| (l.center, l.epsilon)).collect();
    let gaps = arc_cover_gaps(&arcs);
    if !gaps.is_empty() {
        return Err(Error::UncoveredArcs(gaps));
    }
    let alg = a.algebra();
    let d = alg.dim();
    let grid = opts.grid_size.unwrap_or_else(|| auto_grid(opts.half_width, a.half_width()));
    let grade = opts.grade.unwrap_or_else(|| a.home_grade());
    let one = Element::unit(alg);

    let a_values = a.evaluate_grid_raw(grid);
    let mut values = vec![C64::new(0.0, 0.0); grid * d];
    let mut pointwise_residual = 0.0f64;
    let mut weights = vec![0.0f64; locals.len()];
    for j in 0..grid {
        let t = grid_point(j, grid);
        for (w, l) in weights.iter_mut().zip(locals) {
            *w = if l.epsilon >= PI {
                1.0
            } else {
                trapezoid(l.epsilon / 2.0, wrap_angle(t - l.center))
            };
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::UncoveredArcs(vec![(t, t)]));
        }
        let slot = &mut values[j * d..(j + 1) * d];
        for (w, l) in weights.iter().zip(locals) {
            if *w == 0.0 {
                continue;
            }
            let v = l.evaluate(t)?;
            for (s, x) in slot.iter_mut().zip(v.coeffs()) {
                *s += x * (w / total);
            }
        }
        let at = Element::new(alg, a_values[j * d..(j + 1) * d].to_vec())?;
        let vt = Element::new(alg, slot.to_vec())?;
        pointwise_residual = pointwise_residual.max(vt.multiply(&at)?.sub(&one)?.norm(&grade)?);
    }

    let (projected, outside) = project_grid(alg, &values, grid, opts.half_width);
    let projection_error = outside.get(&grade).copied().unwrap_or(f64::NAN);
    let inverse = add_tail(projected.with_max_half_width(a.max_half_width()), &outside);
    let residual = inverse.multiply(a)?.sub(&WienerElement::unit(alg))?.norm_bound(&grade)?;
    if !(residual <= opts.tol) {
        return Err(Error::Numerical(format!(
            "patched inverse residual {residual:e} exceeds {:e} (pointwise {pointwise_residual:e})",
            opts.tol
        )));
    }
    Ok(PatchedInverse {
        inverse,
        grade,
        grid_size: grid,
        half_width: opts.half_width,
        projection_error,
        pointwise_residual,
        residual,
        cover: arcs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalSummary {
    pub center: f64,
    pub epsilon: f64,
    pub contraction: f64,
    pub terms: usize,
    pub pointwise_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WienerInverseReport {
    #[serde(skip)]
    pub inverse: WienerElement,
    pub side: Side,
    pub scan: ScanSummary,
    pub locals: Vec<LocalSummary>,
    pub patch: PatchedInverse,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub grid_size: usize,
    pub all_invertible: bool,
    pub min_margin: f64,
    pub argmin_t: f64,
}

/// Scan, greedy sweep of localizations from `t = -pi`, local inversion and
/// patching. The sweep advances by the certified radius at each center.
pub fn wiener_left_inverse(
    a: &WienerElement,
    localization: &LocalizationOptions,
    patch: &PatchOptions,
) -> Result<WienerInverseReport> {
    let scan_grid = (4 * (2 * a.half_width() + 1)).next_power_of_two().max(256);
    let scan = wiener_invertibility_scan(a, scan_grid, Side::Left, localization.tol)?;
    if !scan.all_invertible {
        return Err(Error::Singular {
            t: scan.singular_points[0],
            detail: format!("{} grid points fail the pointwise test", scan.singular_points.len()),
        });
    }

    let mut locals = Vec::new();
    let mut t = -PI;
    let mut first_eps = None;
    loop {
        let at = a.evaluate(t);
        let (li, _) = left_inverse(&at, localization.tol).map_err(|e| match e {
            Error::Singular { detail, .. } => Error::Singular { t, detail },
            other => other,
        })?;
        let loc = choose_localization(a, t, &li, localization)?;
        let local = local_left_inverse(&loc, patch.tol)?;
        let eps = local.epsilon;
        let first = *first_eps.get_or_insert(eps);
        locals.push(local);
        t += eps;
        if t > PI - first {
            break;
        }
        if locals.len() > 1_000_000 {
            return Err(Error::Budget { budget: 1_000_000 });
        }
    }

    let patched = patch_global_inverse(a, &locals, patch)?;
    Ok(WienerInverseReport {
        inverse: patched.inverse.clone(),
        side: Side::Left,
        scan: ScanSummary {
            grid_size: scan.grid_size,
            all_invertible: scan.all_invertible,
            min_margin: scan.min_margin,
            argmin_t: scan.argmin_t,
        },
        locals: locals
            .iter()
            .map(|l| LocalSummary {
                center: l.center,
                epsilon: l.epsilon,
                contraction: l.contraction,
                terms: l.terms,
                pointwise_residual: l.pointwise_residual,
            })
            .collect(),
        patch: patched,
    })
}

/// Right inverse through the transposed symbol (the same symbol for the
/// commutative instances).
pub fn wiener_right_inverse(
    a: &WienerElement,
    localization: &LocalizationOptions,
    patch: &PatchOptions,
) -> Result<WienerInverseReport> {
    let mut report = wiener_left_inverse(&a.transpose(), localization, patch)?;
    report.inverse = report.inverse.transpose();
    report.patch.inverse = report.inverse.clone();
    report.side = Side::Right;
    Ok(report)
}
