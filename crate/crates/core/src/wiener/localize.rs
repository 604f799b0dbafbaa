//! Localization around a point of the circle and local left inversion.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{wrap_angle, WienerElement};
use crate::calculus::{perturb_left_inverse, GradeChain, NormCertificate, PerturbedLeftInverse};
use crate::element::{Element, ElementDoc, TailBounds, C64};
use crate::error::{Error, Result};
use crate::grade::Grade;

/// Localization radii must stay below this value.
pub const MAX_LOCALIZATION_EPSILON: f64 = PI / 2.0;

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < MAX_LOCALIZATION_EPSILON {
        Ok(())
    } else {
        Err(Error::Precondition(format!("epsilon {eps} outside (0, pi/2)")))
    }
}

/// Trapezoid with plateau `|t| < delta` and support `|t| < 2 delta`.
pub(crate) fn trapezoid(delta: f64, t: f64) -> f64 {
    let s = t.abs();
    if s < delta {
        1.0
    } else if s < 2.0 * delta {
        2.0 - s / delta
    } else {
        0.0
    }
}

/// The cutoff `omega_eps(t)`: 1 on `|t| < eps`, linear down to 0 at `|t| = 2 eps`.
pub fn cutoff_omega(eps: f64, t: f64) -> Result<f64> {
    check_epsilon(eps)?;
    Ok(trapezoid(eps, wrap_angle(t)))
}

/// Fourier coefficient `n` of `omega_eps`. As the difference `2 L_{2 eps} - L_eps`
/// of triangle kernels: `3 eps / 2 pi` at `n = 0`, else
/// `(cos n eps - cos 2 n eps) / (pi n^2 eps)`.
pub fn omega_coefficient(eps: f64, n: i64) -> f64 {
    if n == 0 {
        return 3.0 * eps / (2.0 * PI);
    }
    let nf = n as f64;
    ((nf * eps).cos() - (2.0 * nf * eps).cos()) / (PI * nf * nf * eps)
}

/// Upper bound on `sum_{|n| > m} |omega_n|`.
pub fn omega_tail(eps: f64, m: usize) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    4.0 / (PI * eps * m as f64)
}

/// l1 norm bound of the cutoff (`2 ||L_{2eps}|| + ||L_eps||`, triangles have norm 1).
const OMEGA_NORM: f64 = 3.0;

/// `b = a(0) + omega_eps (a - a(0))`, i.e. `omega a + (1 - omega) a(0)`,
/// at the element's product width.
pub fn localize(a: &WienerElement, eps: f64) -> Result<WienerElement> {
    localize_with_width(a, eps, a.max_half_width())
}

pub fn localize_with_width(a: &WienerElement, eps: f64, width: usize) -> Result<WienerElement> {
    check_epsilon(eps)?;
    let alg = a.algebra();
    let d = alg.dim();
    let na = a.half_width();
    if a.support_width() == 0 {
        return Ok(a.clone());
    }
    let m = width.max(na + 1);

    // v = a - a(0): coefficients a_n for n != 0 and -(sum_{n != 0} a_n) at 0
    let mut v = a.clone();
    let mut centre = vec![C64::new(0.0, 0.0); d];
    for (n, c) in a.iter() {
        if n != 0 {
            for (s, x) in centre.iter_mut().zip(c) {
                *s -= x;
            }
        }
    }
    let a0_value: Vec<C64> = a.evaluate(0.0).coeffs().to_vec();
    v.set_coeff(0, &Element::new(alg, centre)?);

    let omega: Vec<f64> = (-((m + na) as i64)..=(m + na) as i64)
        .map(|k| omega_coefficient(eps, k))
        .collect();
    let om = |k: i64| omega[(k + (m + na) as i64) as usize];

    let mut out = WienerElement::zero(alg, m).with_max_half_width(a.max_half_width().max(m));
    let mut acc = vec![C64::new(0.0, 0.0); d];
    for n in -(m as i64)..=(m as i64) {
        acc.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (k, c) in v.iter() {
            let w = om(n - k);
            for (s, x) in acc.iter_mut().zip(c) {
                *s += x * w;
            }
        }
        if n == 0 {
            for (s, x) in acc.iter_mut().zip(&a0_value) {
                *s += x;
            }
        }
        out.set_coeff(n, &Element::new(alg, acc.clone())?);
    }

    let ladder = a.ladder().clone();
    let v_norm = |g: &Grade| v.iter().map(|(_, c)| alg.norm_slice(c, g)).sum::<f64>();
    let spill = omega_tail(eps, m - na);
    let tail = TailBounds::from_fn(&ladder, |g| {
        let carried = if a.is_exact() {
            0.0
        } else {
            (1.0 + 2.0 * OMEGA_NORM) * a.tail_bound(g)
        };
        carried + v_norm(g) * spill
    });
    Ok(out.with_tail(tail))
}

/// Coefficient 0 of the localization in closed form:
/// `a_0 + sum_{n>=1} (a_n + a_{-n}) (1 + omega_n - 3 eps / 2 pi)`.
pub fn b0_of_epsilon(a: &WienerElement, eps: f64) -> Result<Element> {
    check_epsilon(eps)?;
    let alg = a.algebra();
    let d = alg.dim();
    let mut acc = a.coeff(0).coeffs().to_vec();
    for n in 1..=a.half_width() as i64 {
        let factor = 1.0 + ((n as f64 * eps).cos() - (2.0 * n as f64 * eps).cos()) / (PI * (n * n) as f64 * eps)
            - 3.0 * eps / (2.0 * PI);
        let (p, q) = (a.coeff_slice(n).expect("range"), a.coeff_slice(-n).expect("range"));
        for k in 0..d {
            acc[k] += (p[k] + q[k]) * factor;
        }
    }
    let e = Element::new(alg, acc)?;
    if a.is_exact() {
        return Ok(e);
    }
    // |1 + omega_n - omega_0| <= 1 + 4 eps / pi
    let tail = a.tail().scaled(1.0 + 4.0 * eps / PI);
    Ok(e.with_tail(tail))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub epsilon: f64,
    /// `sum_{n != 0} ||b_n||_alpha` including the tail.
    pub off_diagonal_mass: f64,
    /// `None` when no left inverse of `b_0` could be certified.
    pub contraction: Option<f64>,
}

/// Evidence that the localization at `center` with radius `epsilon` has an
/// invertible constant term dominating the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCertificate {
    pub center: f64,
    pub epsilon: f64,
    pub halvings: usize,
    pub alpha: Grade,
    pub beta: Grade,
    pub gamma: Grade,
    /// `A_{gamma,beta} A_{beta,alpha} sum_{n != 0} ||b_n||_alpha ||b_0'||_beta`.
    pub contraction: f64,
    pub constants: BTreeMap<String, f64>,
    pub off_diagonal_mass: f64,
    pub b0_left_inverse_norm: f64,
    pub b0: ElementDoc,
    pub b0_left_inverse: ElementDoc,
    /// Distance of `b_0'` from the supplied left inverse of `a(t0)`.
    pub perturbation: NormCertificate,
    /// Every radius tried, largest first.
    pub decay: Vec<DecayEntry>,
    /// `||b_n||_alpha` for small `|n|` at the accepted radius.
    pub coefficient_norms: BTreeMap<i64, f64>,
}

#[derive(Clone, Debug)]
pub struct LocalizationOptions {
    pub start_epsilon: f64,
    pub max_halvings: usize,
    /// Half-width of the localized series; `None` uses the element's cap.
    pub width: Option<usize>,
    pub tol: f64,
}

impl Default for LocalizationOptions {
    fn default() -> Self {
        LocalizationOptions {
            start_epsilon: PI / 4.0,
            max_halvings: 40,
            width: None,
            tol: 1e-10,
        }
    }
}

/// A localized element together with the data needed to invert it.
#[derive(Clone, Debug)]
pub struct Localization {
    /// `a` rotated so that the center sits at `t = 0`.
    pub source: WienerElement,
    pub localized: WienerElement,
    pub b0: Element,
    pub b0_left_inverse: Element,
    pub certificate: LocalizationCertificate,
}

/// Rotates `a` to `t0`, then halves `eps` from the start value until the
/// localization's off-diagonal part is dominated by its constant term.
pub fn choose_localization(
    a: &WienerElement,
    t0: f64,
    left_inv_a_t0: &Element,
    opts: &LocalizationOptions,
) -> Result<Localization> {
    let ladder = a.ladder().clone();
    let source = a.rotate(t0);
    let at0 = source.evaluate(0.0);
    let one = Element::unit(a.algebra());

    let alpha = a.home_grade();
    let li_chain = GradeChain::from_alpha(&ladder, alpha);
    let check = left_inv_a_t0.multiply(&at0)?.sub(&one)?.norm(&li_chain.gamma)?;
    if check > opts.tol {
        return Err(Error::Precondition(format!(
            "supplied element is not a left inverse of a({t0}): residual {check:e}"
        )));
    }

    let beta = ladder.max(&ladder.admissible(&alpha), &li_chain.gamma);
    let gamma = ladder.admissible(&beta);
    let a_ba = ladder.constant(&beta, &alpha)?;
    let a_gb = ladder.constant(&gamma, &beta)?;

    let mut decay = Vec::new();
    let mut eps = opts.start_epsilon;
    for halving in 0..=opts.max_halvings {
        if halving > 0 {
            eps /= 2.0;
        }
        let width = opts.width.unwrap_or(source.max_half_width());
        let localized = localize_with_width(&source, eps, width)?;
        let b0 = b0_of_epsilon(&source, eps)?;
        let off_diagonal_mass = localized.filter_indices(|n| n != 0).norm_bound(&alpha)?;

        let perturbed = at0
            .sub(&b0)
            .and_then(|delta| perturb_left_inverse(&at0, left_inv_a_t0, &delta, &li_chain, opts.tol));
        let Ok(PerturbedLeftInverse {
            inverse: b0_li,
            certificate: perturbation,
            ..
        }) = perturbed
        else {
            decay.push(DecayEntry {
                epsilon: eps,
                off_diagonal_mass,
                contraction: None,
            });
            continue;
        };
        let li_norm = b0_li.norm_bound(&beta)?;
        let contraction = a_gb * a_ba * off_diagonal_mass * li_norm;
        decay.push(DecayEntry {
            epsilon: eps,
            off_diagonal_mass,
            contraction: Some(contraction),
        });
        if contraction < 1.0 {
            let mut constants = BTreeMap::new();
            constants.insert(format!("A[{beta},{alpha}]"), a_ba);
            constants.insert(format!("A[{gamma},{beta}]"), a_gb);
            let coefficient_norms = (-8i64..=8)
                .filter(|n| *n != 0 && n.unsigned_abs() as usize <= localized.half_width())
                .map(|n| (n, alpha_norm(&localized, n, &alpha)))
                .collect();
            let certificate = LocalizationCertificate {
                center: t0,
                epsilon: eps,
                halvings: halving,
                alpha,
                beta,
                gamma,
                contraction,
                constants,
                off_diagonal_mass,
                b0_left_inverse_norm: li_norm,
                b0: b0.to_doc(),
                b0_left_inverse: b0_li.to_doc(),
                perturbation,
                decay,
                coefficient_norms,
            };
            return Ok(Localization {
                source,
                localized,
                b0,
                b0_left_inverse: b0_li,
                certificate,
            });
        }
    }
    Err(Error::NoCertificate {
        t: t0,
        halvings: opts.max_halvings,
    })
}

fn alpha_norm(w: &WienerElement, n: i64, g: &Grade) -> f64 {
    w.coeff_slice(n).map_or(0.0, |c| w.algebra().norm_slice(c, g))
}

/// Left inverse of `b = b_0 + c` from a left inverse of `b_0`:
/// `b' = b_0' sum (-c b_0')^n`, computed on Fourier coefficients.
pub fn series_left_inverse(
    b: &WienerElement,
    b0_li: &Element,
    tol: f64,
) -> Result<PerturbedLeftInverse<WienerElement>> {
    let b0 = b.coeff(0);
    let cap = b.max_half_width();
    let minus_c = b.filter_indices(|n| n != 0).scaled(C64::new(-1.0, 0.0));
    let chain = GradeChain::from_alpha(b.ladder(), b0_li.home_grade());
    perturb_left_inverse(
        &WienerElement::constant(&b0).with_max_half_width(cap),
        &WienerElement::constant(b0_li).with_max_half_width(cap),
        &minus_c,
        &chain,
        tol,
    )
}

#[derive(Clone, Debug)]
enum LocalRepr {
    /// The series `b_0' sum (-c(s) b_0')^n` summed pointwise, with the
    /// localization `b(s) = a(0) + omega(s) (a(s) - a(0))` evaluated exactly.
    Series {
        source: WienerElement,
        source_at_center: Element,
        b0: Element,
        b0_li: Element,
    },
    /// A left inverse given by its coefficients, in the original variable.
    Coefficients(WienerElement),
}

/// A left inverse of `a` valid for `|t - center| < epsilon`.
#[derive(Clone, Debug)]
pub struct LocalInverse {
    pub center: f64,
    pub epsilon: f64,
    pub terms: usize,
    pub contraction: f64,
    /// Largest `||b'(t) a(t) - 1||` over sample points of the window.
    pub pointwise_residual: f64,
    repr: LocalRepr,
}

/// Sample points in the open window, used for the residual check.
const WINDOW_SAMPLES: usize = 257;

impl LocalInverse {
    pub fn from_coefficients(center: f64, epsilon: f64, element: WienerElement) -> LocalInverse {
        LocalInverse {
            center,
            epsilon,
            terms: 0,
            contraction: 0.0,
            pointwise_residual: f64::NAN,
            repr: LocalRepr::Coefficients(element),
        }
    }

    /// Value of the local inverse at `t` (meaningful inside the window).
    pub fn evaluate(&self, t: f64) -> Result<Element> {
        match &self.repr {
            LocalRepr::Coefficients(w) => Ok(w.evaluate(t)),
            LocalRepr::Series {
                source,
                source_at_center,
                b0,
                b0_li,
            } => {
                let s = wrap_angle(t - self.center);
                let w = if self.epsilon < MAX_LOCALIZATION_EPSILON {
                    trapezoid(self.epsilon, s)
                } else {
                    1.0
                };
                let a_s = source.evaluate(s);
                let b = source_at_center.add(&a_s.sub(source_at_center)?.scaled(C64::new(w, 0.0)))?;
                let u = b.sub(b0)?.multiply(b0_li)?.neg();
                let mut sum = Element::unit(b.algebra());
                let mut power = sum.clone();
                for _ in 0..self.terms {
                    power = power.multiply(&u)?;
                    sum = sum.add(&power)?;
                }
                b0_li.multiply(&sum)
            }
        }
    }

    /// Coefficient form, when the inverse was given that way.
    pub fn coefficients(&self) -> Option<&WienerElement> {
        match &self.repr {
            LocalRepr::Coefficients(w) => Some(w),
            LocalRepr::Series { .. } => None,
        }
    }
}

/// Local left inverse of a localization, summed under the certificate's
/// contraction ratio and checked pointwise on the window.
pub fn local_left_inverse(loc: &Localization, tol: f64) -> Result<LocalInverse> {
    let cert = &loc.certificate;
    let kappa = cert.contraction;
    if !(kappa < 1.0) {
        return Err(Error::Contraction {
            quantity: "localization contraction",
            value: kappa,
            limit: 1.0,
        });
    }
    let ladder = loc.source.ladder();
    let one = Element::unit(loc.source.algebra());
    let a_gb = ladder.constant(&cert.gamma, &cert.beta)?;
    let scale = a_gb * cert.b0_left_inverse_norm * one.norm(&cert.gamma)?;
    // the window residual is a sum of many series values, keep a margin
    let target = tol * 1e-3;
    let mut terms = 0usize;
    while kappa > 0.0 && scale * kappa.powi(terms as i32 + 1) / (1.0 - kappa) >= target {
        terms += 1;
        if terms > 100_000 {
            return Err(Error::Budget { budget: 100_000 });
        }
    }

    let mut inverse = LocalInverse {
        center: cert.center,
        epsilon: cert.epsilon,
        terms,
        contraction: kappa,
        pointwise_residual: 0.0,
        repr: LocalRepr::Series {
            source: loc.source.clone(),
            source_at_center: loc.source.evaluate(0.0),
            b0: loc.b0.clone(),
            b0_li: loc.b0_left_inverse.clone(),
        },
    };

    let mut worst = 0.0f64;
    for j in 0..WINDOW_SAMPLES {
        let s = -cert.epsilon + 2.0 * cert.epsilon * (j as f64 + 0.5) / WINDOW_SAMPLES as f64;
        let t = cert.center + s;
        let value = inverse.evaluate(t)?;
        let r = value
            .multiply(&loc.source.evaluate(s))?
            .sub(&one)?
            .norm(&cert.gamma)?;
        worst = worst.max(r);
    }
    if worst > tol {
        return Err(Error::Numerical(format!(
            "local inverse at t = {} has window residual {worst:e} > {tol:e}",
            cert.center
        )));
    }
    inverse.pointwise_residual = worst;
    Ok(inverse)
}
