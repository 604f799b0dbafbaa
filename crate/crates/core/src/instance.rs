//! Instance descriptions and their grade ladders.
//!
//! Three computable instances are shipped:
//!
//! * `matrix`: dense `n x n` complex matrices with the operator norm. A single
//!   grade `0`, `h = id`, `A = 1`; this is an ordinary Banach algebra.
//! * `germs`: power series truncated at degree `D`, graded by disk radius `r`
//!   with `||f||_r = sum |f_n| r^n`. Smaller radius means larger space, so
//!   `r <= r'` in ladder order iff `r >= r'` numerically. `h(r) = r`, `A = 1`.
//! * `kondratiev`: chaos expansions over multi-indices with at most `K`
//!   active variables and total degree `<= D`, graded by the integer level
//!   `p` with `||a||_p^2 = sum |a_g|^2 (2N)^(-p g)` and the Wick product.
//!   `h(p) = p + 2` and `A_{q,p}` is the Vage-type constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grade::Grade;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Matrix,
    Germs,
    Kondratiev,
}

impl InstanceKind {
    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Matrix => "matrix",
            InstanceKind::Germs => "germs",
            InstanceKind::Kondratiev => "kondratiev",
        }
    }
}

/// Parameters of an instance. Serialized adjacently tagged, so an element
/// document reads `{"instance": "germs", "params": {...}, ...}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "instance", content = "params", rename_all = "snake_case")]
pub enum InstanceSpec {
    Matrix {
        n: usize,
    },
    Germs {
        degree: usize,
        /// Radii at which tail bounds are tracked.
        radii: Vec<Grade>,
    },
    Kondratiev {
        vars: usize,
        degree: usize,
        /// Levels at which tail bounds are tracked.
        levels: Vec<Grade>,
    },
}

impl InstanceSpec {
    pub fn matrix(n: usize) -> InstanceSpec {
        InstanceSpec::Matrix { n }
    }

    pub fn scalar() -> InstanceSpec {
        InstanceSpec::Matrix { n: 1 }
    }

    pub fn germs(degree: usize, radii: Vec<Grade>) -> InstanceSpec {
        InstanceSpec::Germs { degree, radii }
    }

    pub fn kondratiev(vars: usize, degree: usize, levels: Vec<Grade>) -> InstanceSpec {
        InstanceSpec::Kondratiev {
            vars,
            degree,
            levels,
        }
    }

    pub fn kind(&self) -> InstanceKind {
        match self {
            InstanceSpec::Matrix { .. } => InstanceKind::Matrix,
            InstanceSpec::Germs { .. } => InstanceKind::Germs,
            InstanceSpec::Kondratiev { .. } => InstanceKind::Kondratiev,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InstanceSpec::Matrix { n } => {
                if *n == 0 {
                    return Err(Error::Schema("matrix dimension must be positive".into()));
                }
            }
            InstanceSpec::Germs { radii, .. } => {
                if radii.is_empty() {
                    return Err(Error::Schema("germs instance needs at least one radius".into()));
                }
                if let Some(r) = radii.iter().find(|r| !r.is_positive()) {
                    return Err(Error::Schema(format!("germs radius {r} must be positive")));
                }
            }
            InstanceSpec::Kondratiev { vars, levels, .. } => {
                if *vars == 0 {
                    return Err(Error::Schema("kondratiev instance needs at least one variable".into()));
                }
                if levels.is_empty() {
                    return Err(Error::Schema("kondratiev instance needs at least one level".into()));
                }
                if let Some(p) = levels.iter().find(|p| !p.is_integer() || p.is_negative()) {
                    return Err(Error::Schema(format!("kondratiev level {p} must be a non-negative integer")));
                }
            }
        }
        Ok(())
    }

    pub fn ladder(&self) -> Ladder {
        let (kind, mut grades) = match self {
            InstanceSpec::Matrix { .. } => (InstanceKind::Matrix, vec![Grade::zero()]),
            InstanceSpec::Germs { radii, .. } => (InstanceKind::Germs, radii.clone()),
            InstanceSpec::Kondratiev { levels, .. } => (InstanceKind::Kondratiev, levels.clone()),
        };
        grades.sort();
        grades.dedup();
        if kind == InstanceKind::Germs {
            // ladder order: largest radius first
            grades.reverse();
        }
        Ladder { kind, grades }
    }
}

/// The directed index set of an instance together with `h` and `A_{beta,alpha}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    kind: InstanceKind,
    grades: Vec<Grade>,
}

impl Ladder {
    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    /// Grades at which tail bounds are tracked, in ascending ladder order.
    pub fn tracked(&self) -> &[Grade] {
        &self.grades
    }

    pub fn is_valid(&self, g: &Grade) -> bool {
        match self.kind {
            InstanceKind::Matrix => *g == Grade::zero(),
            InstanceKind::Germs => g.is_positive(),
            InstanceKind::Kondratiev => g.is_integer() && !g.is_negative(),
        }
    }

    pub fn check(&self, g: &Grade) -> Result<()> {
        if self.is_valid(g) {
            Ok(())
        } else {
            Err(Error::UnknownGrade {
                grade: *g,
                instance: self.kind.name(),
            })
        }
    }

    /// `a <= b` in ladder order, i.e. `X_a` embeds in `X_b`.
    pub fn le(&self, a: &Grade, b: &Grade) -> bool {
        match self.kind {
            InstanceKind::Matrix => a == b,
            InstanceKind::Germs => a >= b,
            InstanceKind::Kondratiev => a <= b,
        }
    }

    pub fn max(&self, a: &Grade, b: &Grade) -> Grade {
        if self.le(a, b) {
            *b
        } else {
            *a
        }
    }

    pub fn h(&self, a: &Grade) -> Grade {
        match self.kind {
            InstanceKind::Matrix | InstanceKind::Germs => *a,
            InstanceKind::Kondratiev => a.checked_add(Grade::integer(2)).unwrap_or(*a),
        }
    }

    /// `A_{beta,alpha}`, defined when `beta >= h(alpha)`.
    pub fn constant(&self, beta: &Grade, alpha: &Grade) -> Result<f64> {
        self.check(alpha)?;
        self.check(beta)?;
        let h = self.h(alpha);
        if !self.le(&h, beta) {
            return Err(Error::Ladder {
                alpha: *alpha,
                beta: *beta,
                h,
            });
        }
        match self.kind {
            InstanceKind::Matrix | InstanceKind::Germs => Ok(1.0),
            InstanceKind::Kondratiev => {
                let gap = beta.as_integer() - alpha.as_integer();
                vage_limit(gap as u32)
            }
        }
    }

    /// Smallest `beta >= h(alpha)`, preferring a tracked grade when one exists.
    pub fn admissible(&self, alpha: &Grade) -> Grade {
        let h = self.h(alpha);
        self.grades
            .iter()
            .find(|g| self.le(&h, g))
            .copied()
            .unwrap_or(h)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

/// Multi-indices over `vars` variables of total degree `<= degree`,
/// in graded-lexicographic order (by degree, then lexicographically
/// descending so that `e_1` precedes `e_2`).
pub fn multi_indices(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; vars];
    for d in 0..=degree {
        compositions(d as u32, 0, &mut current, &mut out);
    }
    out
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        current[pos] = take;
        compositions(remaining - take, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Value of the Kondratiev ladder constant for a level gap `q - p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VageConstant {
    /// `(sum over (K, D)-bounded multi-indices of (2N)^{-(q-p) g})^{1/2}`.
    pub truncated: f64,
    /// `prod_k (1 - (2k)^{-(q-p)})^{-1/2}`.
    pub limit: f64,
}

pub fn vage_constant(p: &Grade, q: &Grade, vars: usize, degree: usize) -> Result<VageConstant> {
    if !p.is_integer() || !q.is_integer() || p.is_negative() || q.is_negative() {
        return Err(Error::Precondition(format!(
            "kondratiev levels must be non-negative integers, got p = {p}, q = {q}"
        )));
    }
    let gap = q.as_integer() - p.as_integer();
    if gap < 2 {
        return Err(Error::Divergence(format!(
            "sum of (2N)^(-{gap} g) over all multi-indices diverges; need q >= p + 2"
        )));
    }
    let gap = gap as u32;
    Ok(VageConstant {
        truncated: vage_truncated(gap, vars, degree),
        limit: vage_limit(gap)?,
    })
}

fn vage_truncated(gap: u32, vars: usize, degree: usize) -> f64 {
    // sum_{|g| <= D} prod_k x_k^{g_k} with x_k = (2k)^{-gap}, as a product of
    // geometric series truncated by total degree
    let mut by_degree = vec![0.0f64; degree + 1];
    by_degree[0] = 1.0;
    for k in 1..=vars {
        let x = (2.0 * k as f64).powi(-(gap as i32));
        let mut next = vec![0.0f64; degree + 1];
        for (d, &v) in by_degree.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut w = v;
            for slot in next.iter_mut().skip(d) {
                *slot += w;
                w *= x;
            }
        }
        by_degree = next;
    }
    by_degree.iter().sum::<f64>().sqrt()
}

/// `prod_k (1 - (2k)^{-gap})^{-1/2}` through
/// `log prod = sum_j zeta(gap j) 2^{-gap j} / j`.
fn vage_limit(gap: u32) -> Result<f64> {
    if gap < 2 {
        return Err(Error::Divergence(format!("level gap {gap} < 2")));
    }
    let mut log_prod = 0.0;
    for j in 1..200u32 {
        let s = (gap * j) as f64;
        let term = zeta(s) * (2.0f64).powf(-s) / j as f64;
        log_prod += term;
        if term < 1e-18 {
            break;
        }
    }
    Ok((0.5 * log_prod).exp())
}

/// Riemann zeta for real `s >= 2` by Euler-Maclaurin with cutoff 16.
pub(crate) fn zeta(s: f64) -> f64 {
    const N: usize = 16;
    // B_2, B_4, ..., B_12
    const BERNOULLI: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s; // s (s+1) ... (s + 2j - 2)
    let mut factorial = 2.0; // (2j)!
    for (j, b) in BERNOULLI.iter().enumerate() {
        let j = j + 1;
        sum += b / factorial * rising * n.powf(-s - 2.0 * j as f64 + 1.0);
        rising *= (s + 2.0 * j as f64 - 1.0) * (s + 2.0 * j as f64);
        factorial *= (2 * j + 1) as f64 * (2 * j + 2) as f64;
    }
    sum
}
