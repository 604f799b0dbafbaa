//! Canonical factorization `a = a_- a_+` in the Wiener algebra, split by the
//! sign of the Fourier index.
//!
//! `P` keeps the indices `n < 0` and `Q = I - P` keeps `n >= 0`. Factors follow
//! the membership rule `a_+ - 1, a_+^{-1} - 1 in range(P)` and
//! `a_- - 1, a_-^{-1} - 1 in range(Q)`, so `a_+` has constant term 1 and
//! `a_-` carries the constant.

use serde::{Deserialize, Serialize};

use crate::calculus::neumann_inverse;
use crate::element::C64;
use crate::error::{Error, Result};
use crate::grade::Grade;
use crate::wiener::{
    wiener_invertibility_scan, wiener_left_inverse, LocalizationOptions, PatchOptions, Side, WienerElement,
};

/// The index-sign splitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition;

impl Decomposition {
    /// Projection onto `n < 0`.
    pub fn p(&self, x: &WienerElement) -> WienerElement {
        x.filter_indices(|n| n < 0)
    }

    /// Projection onto `n >= 0`.
    pub fn q(&self, x: &WienerElement) -> WienerElement {
        x.filter_indices(|n| n >= 0)
    }

    /// `||P||^b_b` and `||Q||^b_b`: the graded l1 norm splits over disjoint
    /// index sets, so both are 1 at every grade.
    pub fn norms(&self) -> (f64, f64) {
        (1.0, 1.0)
    }
}

/// `T_a(x) = P(ax) + Q(x)`.
pub fn apply_t(a: &WienerElement, x: &WienerElement) -> Result<WienerElement> {
    let d = Decomposition;
    d.p(&a.multiply(x)?).add(&d.q(x))
}

/// `R_a(x) = P(x) + Q(xa)`.
pub fn apply_r(a: &WienerElement, x: &WienerElement) -> Result<WienerElement> {
    let d = Decomposition;
    d.p(x).add(&d.q(&x.multiply(a)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub iteration: usize,
    pub increment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// Contraction ratio `A_{b,a} ||k||_a max(||P||, ||Q||)`.
    pub ratio: f64,
    pub half_width: usize,
    pub iterations: usize,
    /// Bound on the distance to the fixed point: `ratio / (1 - ratio) * last increment`.
    pub error_bound: f64,
    pub entries: Vec<IterationEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationOptions {
    pub tol: f64,
    /// Initial working half-width; doubled while the solution still has
    /// mass near the edge of the window.
    pub half_width: usize,
    pub max_half_width: usize,
    pub max_iterations: usize,
}

impl Default for FactorizationOptions {
    fn default() -> Self {
        FactorizationOptions {
            tol: 1e-10,
            half_width: 64,
            max_half_width: 1024,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Equation {
    /// `x = f + P(k x)`
    Left,
    /// `y = g + Q(y k)`
    Right,
}

/// Fixed-point iteration for `x - P(kx) = f` or `y - Q(yk) = g`.
fn iterate(
    k: &WienerElement,
    rhs: &WienerElement,
    side: Equation,
    ratio: f64,
    width: usize,
    opts: &FactorizationOptions,
) -> Result<(WienerElement, IterationLog)> {
    let d = Decomposition;
    let step = |x: &WienerElement| -> Result<WienerElement> {
        let moved = match side {
            Equation::Left => d.p(&k.multiply(x)?),
            Equation::Right => d.q(&x.multiply(k)?),
        };
        rhs.add(&moved).map(|v| v.truncated(width))
    };
    let grade = k.ladder().max(&k.home_grade(), &rhs.home_grade());
    let mut x = rhs.clone().with_max_half_width(width).truncated(width);
    let mut entries = Vec::new();
    let mut iteration = 0;
    loop {
        iteration += 1;
        if iteration > opts.max_iterations {
            return Err(Error::Budget {
                budget: opts.max_iterations,
            });
        }
        let next = step(&x)?;
        let increment = next.sub(&x)?.norm(&grade)?;
        entries.push(IterationEntry { iteration, increment });
        x = next;
        let error_bound = if ratio > 0.0 { ratio / (1.0 - ratio) * increment } else { 0.0 };
        if error_bound < opts.tol * 1e-2 || increment == 0.0 {
            return Ok((
                x,
                IterationLog {
                    ratio,
                    half_width: width,
                    iterations: iteration,
                    error_bound,
                    entries,
                },
            ));
        }
    }
}

/// Mass of `w` at `|n| > 3/4` of its window: a growing window is needed
/// when this is not negligible.
fn edge_mass(w: &WienerElement, g: &Grade) -> f64 {
    let cut = (3 * w.half_width()) / 4;
    w.iter()
        .filter(|(n, _)| n.unsigned_abs() as usize > cut)
        .map(|(_, c)| w.algebra().norm_slice(c, g))
        .sum()
}

fn contraction(k: &WienerElement, alpha: &Grade, beta: &Grade) -> Result<(f64, f64)> {
    let constant = k.ladder().constant(beta, alpha)?;
    let (p, q) = Decomposition.norms();
    let ratio = constant * k.norm_bound(alpha)? * p.max(q);
    if !(ratio < 1.0) {
        return Err(Error::Contraction {
            quantity: "A[beta,alpha]*|k|_alpha*max(|P|,|Q|)",
            value: ratio,
            limit: 1.0,
        });
    }
    Ok((ratio, constant))
}

fn solve_side(
    k: &WienerElement,
    rhs: &WienerElement,
    side: Equation,
    ratio: f64,
    opts: &FactorizationOptions,
) -> Result<(WienerElement, IterationLog)> {
    let mut width = opts.half_width.max(rhs.half_width()).max(1);
    let grade = k.home_grade();
    loop {
        let (x, log) = iterate(k, rhs, side, ratio, width, opts)?;
        if edge_mass(&x, &grade) <= opts.tol * 1e-2 || width >= opts.max_half_width {
            return Ok((x, log));
        }
        width = (2 * width).min(opts.max_half_width);
    }
}

/// Unique solutions of `x - P(kx) = f` and `y - Q(yk) = g` under
/// `A_{beta,alpha} ||k||_alpha < 1`.
pub fn solve_pair_equations(
    k: &WienerElement,
    f: &WienerElement,
    g: &WienerElement,
    alpha: &Grade,
    beta: &Grade,
    opts: &FactorizationOptions,
) -> Result<(WienerElement, WienerElement, IterationLog, IterationLog)> {
    let (ratio, _) = contraction(k, alpha, beta)?;
    let (x, xlog) = solve_side(k, f, Equation::Left, ratio, opts)?;
    let (y, ylog) = solve_side(k, g, Equation::Right, ratio, opts)?;
    Ok((x, y, xlog, ylog))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipEntry {
    pub name: String,
    /// `"n<0"` or `"n>=0"`.
    pub allowed: String,
    /// `"U+"` for `n < 0`, `"U-0"` for `n >= 0`. Note the sign is the
    /// opposite of the analytic/coanalytic naming.
    pub set: String,
    /// l1 norm of the coefficients outside the allowed index set.
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub entries: Vec<MembershipEntry>,
    pub max_leakage: f64,
}

fn leakage(w: &WienerElement, allowed: impl Fn(i64) -> bool, g: &Grade) -> f64 {
    w.iter()
        .filter(|(n, _)| !allowed(*n))
        .map(|(_, c)| w.algebra().norm_slice(c, g))
        .sum()
}

/// Checks `a_+ - 1, a_+^{-1} - 1` against `n < 0` and
/// `a_- - 1, a_-^{-1} - 1` against `n >= 0`.
pub fn membership_report(
    a_minus: &WienerElement,
    a_plus: &WienerElement,
    a_minus_inv: &WienerElement,
    a_plus_inv: &WienerElement,
    g: &Grade,
) -> Result<MembershipReport> {
    let one = WienerElement::unit(a_plus.algebra());
    let mut entries = Vec::new();
    for (name, w, plus) in [
        ("a_plus - 1", a_plus, true),
        ("a_plus_inv - 1", a_plus_inv, true),
        ("a_minus - 1", a_minus, false),
        ("a_minus_inv - 1", a_minus_inv, false),
    ] {
        let shifted = w.sub(&one)?;
        let value = if plus {
            leakage(&shifted, |n| n < 0, g)
        } else {
            leakage(&shifted, |n| n >= 0, g)
        };
        entries.push(MembershipEntry {
            name: name.into(),
            allowed: if plus { "n<0".into() } else { "n>=0".into() },
            set: if plus { "U+".into() } else { "U-0".into() },
            leakage: value,
        });
    }
    let max_leakage = entries.iter().map(|e| e.leakage).fold(0.0, f64::max);
    Ok(MembershipReport { entries, max_leakage })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionRecord {
    pub method: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationResult {
    #[serde(skip)]
    pub a_minus: WienerElement,
    #[serde(skip)]
    pub a_plus: WienerElement,
    #[serde(skip)]
    pub a_minus_inv: WienerElement,
    #[serde(skip)]
    pub a_plus_inv: WienerElement,
    pub alpha: Grade,
    pub beta: Grade,
    pub grade: Grade,
    /// `||a - a_- a_+||` including tails.
    pub residual: f64,
    /// `||a - a_+ a_-||`, reported for comparison.
    pub residual_swapped: f64,
    /// `||x - P((1-a)x) - 1||` and `||y - Q(y(1-a)) - 1||`.
    pub fixed_point_residuals: (f64, f64),
    pub membership: MembershipReport,
    pub inversions: (InversionRecord, InversionRecord),
    pub log_x: IterationLog,
    pub log_y: IterationLog,
    pub tol: f64,
}

/// Inverts an element of `1 + range(P)` or `1 + range(Q)`: Neumann series
/// when `||1 - x||` is small enough (keeps the index support exactly),
/// otherwise the patched Wiener inverse.
fn invert_factor(x: &WienerElement, g: &Grade, tol: f64) -> Result<(WienerElement, InversionRecord)> {
    let grid = (4 * (2 * x.half_width() + 1)).next_power_of_two();
    let scan = wiener_invertibility_scan(x, grid, Side::Left, tol.max(1e-12))?;
    if !scan.all_invertible {
        return Err(Error::Singular {
            t: scan.argmin_t,
            detail: "factor is not pointwise invertible".into(),
        });
    }
    let ladder = x.ladder().clone();
    let k = x.sub(&WienerElement::unit(x.algebra()))?.scaled(C64::new(-1.0, 0.0));
    let beta = ladder.admissible(g);
    if ladder.constant(&beta, g)? * k.norm_bound(g)? < 1.0 {
        if let Ok(inv) = neumann_inverse(&k, g, &beta, tol) {
            let residual = inv.left_residual.max(inv.right_residual);
            return Ok((
                inv.inverse,
                InversionRecord {
                    method: "neumann".into(),
                    residual,
                },
            ));
        }
    }
    let patch = PatchOptions {
        half_width: x.max_half_width(),
        tol: tol.max(1e-9),
        ..PatchOptions::default()
    };
    let report = wiener_left_inverse(
        x,
        &LocalizationOptions {
            tol: tol.max(1e-10),
            ..LocalizationOptions::default()
        },
        &patch,
    )?;
    Ok((
        report.inverse,
        InversionRecord {
            method: "patched".into(),
            residual: report.patch.residual,
        },
    ))
}

/// Canonical factorization under `A_{beta,alpha} ||1 - a||_alpha < 1`:
/// `x = 1 + P((1-a)x)`, `y = 1 + Q(y(1-a))`, `a_+ = x^{-1}`, `a_- = y^{-1}`.
pub fn solve_canonical_factorization(
    a: &WienerElement,
    alpha: &Grade,
    beta: &Grade,
    opts: &FactorizationOptions,
) -> Result<FactorizationResult> {
    let one = WienerElement::unit(a.algebra());
    let k = one.sub(a)?;
    let (x, y, log_x, log_y) = solve_pair_equations(&k, &one, &one, alpha, beta, opts)?;
    let d = Decomposition;
    let grade = *beta;

    let fp_x = x.sub(&d.p(&k.multiply(&x)?))?.sub(&one)?.norm_bound(&grade)?;
    let fp_y = y.sub(&d.q(&y.multiply(&k)?))?.sub(&one)?.norm_bound(&grade)?;

    let (a_plus, inv_plus) = invert_factor(&x, alpha, opts.tol)?;
    let (a_minus, inv_minus) = invert_factor(&y, alpha, opts.tol)?;

    let residual = a.sub(&a_minus.multiply(&a_plus)?)?.norm_bound(&grade)?;
    let residual_swapped = a.sub(&a_plus.multiply(&a_minus)?)?.norm_bound(&grade)?;
    let membership = membership_report(&a_minus, &a_plus, &y, &x, &grade)?;

    let result = FactorizationResult {
        a_minus,
        a_plus,
        a_minus_inv: y,
        a_plus_inv: x,
        alpha: *alpha,
        beta: *beta,
        grade,
        residual,
        residual_swapped,
        fixed_point_residuals: (fp_x, fp_y),
        membership,
        inversions: (inv_plus, inv_minus),
        log_x,
        log_y,
        tol: opts.tol,
    };
    if result.residual > opts.tol || result.membership.max_leakage > opts.tol {
        return Err(Error::Numerical(format!(
            "factorization check failed: residual {:e}, leakage {:e}",
            result.residual, result.membership.max_leakage
        )));
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub grid_size: usize,
    pub tol: f64,
    /// `max_t ||a(t) - a_-(t) a_+(t)||`.
    pub pointwise_minus_plus: f64,
    /// `max_t ||a(t) - a_+(t) a_-(t)||`.
    pub pointwise_plus_minus: f64,
    pub minus_plus_passes: bool,
    pub plus_minus_passes: bool,
    pub membership: MembershipReport,
    pub membership_passes: bool,
    /// Pointwise `a = a_- a_+` and memberships both hold.
    pub verdict: bool,
}

/// Checks a claimed factorization pointwise on a grid and by index support.
pub fn verify_factorization(
    a: &WienerElement,
    a_minus: &WienerElement,
    a_plus: &WienerElement,
    a_minus_inv: &WienerElement,
    a_plus_inv: &WienerElement,
    grid_size: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let g = a.home_grade();
    let av = a.evaluate_grid(grid_size);
    let mv = a_minus.evaluate_grid(grid_size);
    let pv = a_plus.evaluate_grid(grid_size);
    let mut mp = 0.0f64;
    let mut pm = 0.0f64;
    for ((at, m), p) in av.iter().zip(&mv).zip(&pv) {
        mp = mp.max(at.sub(&m.multiply(p)?)?.norm(&g)?);
        pm = pm.max(at.sub(&p.multiply(m)?)?.norm(&g)?);
    }
    let membership = membership_report(a_minus, a_plus, a_minus_inv, a_plus_inv, &g)?;
    let membership_passes = membership.max_leakage <= tol;
    Ok(VerificationReport {
        grid_size,
        tol,
        pointwise_minus_plus: mp,
        pointwise_plus_minus: pm,
        minus_plus_passes: mp <= tol,
        plus_minus_passes: pm <= tol,
        membership,
        membership_passes,
        verdict: mp <= tol && membership_passes,
    })
}

impl FactorizationResult {
    pub fn verify(&self, a: &WienerElement, grid_size: usize) -> Result<VerificationReport> {
        verify_factorization(
            a,
            &self.a_minus,
            &self.a_plus,
            &self.a_minus_inv,
            &self.a_plus_inv,
            grid_size,
            self.tol,
        )
    }
}
