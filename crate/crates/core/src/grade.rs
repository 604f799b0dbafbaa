//! Grade indices.
//!
//! A grade is an exact rational. What it means depends on the instance: the
//! matrix instance only has grade `0`, the germs instance uses a disk radius
//! and the Kondratiev instance a non-negative integer level. The ordering of
//! the ladder (which grade "contains" which) lives in [`crate::instance::Ladder`];
//! the `Ord` impl here is plain numeric order and only serves as a map key.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade(Rational64);

impl Grade {
    pub fn new(numer: i64, denom: i64) -> Grade {
        Grade(Rational64::new(numer, denom))
    }

    pub fn integer(value: i64) -> Grade {
        Grade(Rational64::from_integer(value))
    }

    pub fn zero() -> Grade {
        Grade(Rational64::zero())
    }

    pub fn ratio(&self) -> Rational64 {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Integer part, only meaningful when [`Grade::is_integer`] holds.
    pub fn as_integer(&self) -> i64 {
        self.0.to_integer()
    }

    pub fn checked_add(&self, other: Grade) -> Option<Grade> {
        let a = self.0;
        let b = other.0;
        let numer = a
            .numer()
            .checked_mul(*b.denom())?
            .checked_add(b.numer().checked_mul(*a.denom())?)?;
        let denom = a.denom().checked_mul(*b.denom())?;
        Some(Grade(Rational64::new(numer, denom)))
    }
}

impl From<i64> for Grade {
    fn from(value: i64) -> Self {
        Grade::integer(value)
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grade({self})")
    }
}

impl FromStr for Grade {
    type Err = Error;

    /// Accepts `"3"`, `"1/2"` and finite decimals such as `"0.25"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || Error::Schema(format!("cannot parse grade {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Grade(Rational64::new(n, d)));
        }
        if let Ok(n) = s.parse::<i64>() {
            return Ok(Grade::integer(n));
        }
        // Decimal literal: read digits exactly instead of going through f64.
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').ok_or_else(bad)?;
        if frac_part.is_empty() && int_part.is_empty() {
            return Err(bad());
        }
        if frac_part.len() > 15 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int_val: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let frac_val: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let denom = 10i64.pow(frac_part.len() as u32);
        let numer = int_val
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(bad)?;
        let numer = if neg { -numer } else { numer };
        Ok(Grade(Rational64::new(numer, denom)))
    }
}

impl Serialize for Grade {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Grade {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(v) => Ok(Grade::integer(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
