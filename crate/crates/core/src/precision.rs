//! Precision policy, exact decimal masses and number formatting helpers.
//!
//! All arithmetic happens in MPFR floats (`rug::Float`). Physical inputs such
//! as the mass are kept as exact rationals so that `m = 1e-10` or `m = md/d`
//! never pass through binary floating point.

use std::fmt;
use std::str::FromStr;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// High-precision real scalar used throughout the crate.
pub type Real = Float;

/// Minimum number of guard digits between working and target precision.
pub const GUARD_DIGITS: u32 = 10;

/// Default guard used by [`PrecisionPolicy::for_target`].
pub const DEFAULT_GUARD_DIGITS: u32 = 20;

/// Decimal digits to binary mantissa bits (rounded up, plus a few guard bits).
pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as u64 * 3_321_929).div_ceil(1_000_000) as u32 + 4
}

/// Binary mantissa bits to (floor) decimal digits.
pub fn bits_to_digits(bits: u32) -> u32 {
    ((bits as u64 * 301_030) / 1_000_000) as u32
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Decimal digits carried in every mantissa.
    pub working_digits: u32,
    /// Digits that results are certified to.
    pub target_digits: u32,
    /// How many times a failing computation may raise `working_digits`.
    pub max_escalations: u32,
    /// Growth factor of `working_digits` per escalation, as numerator/denominator.
    pub escalation_factor: (u32, u32),
    /// Number of escalations already applied to reach this policy.
    #[serde(default)]
    pub escalation_level: u32,
}

impl PrecisionPolicy {
    pub fn for_target(target_digits: u32) -> Self {
        Self {
            working_digits: target_digits + DEFAULT_GUARD_DIGITS,
            target_digits,
            max_escalations: 4,
            escalation_factor: (2, 1),
            escalation_level: 0,
        }
    }

    pub fn new(working_digits: u32, target_digits: u32) -> Result<Self> {
        let p = Self {
            working_digits,
            target_digits,
            ..Self::for_target(target_digits)
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_digits == 0 {
            return Err(Error::InvalidInput("target_digits must be positive".into()));
        }
        if self.working_digits < self.target_digits + GUARD_DIGITS {
            return Err(Error::InvalidInput(format!(
                "working_digits ({}) must be at least target_digits + {} ({})",
                self.working_digits,
                GUARD_DIGITS,
                self.target_digits + GUARD_DIGITS
            )));
        }
        let (num, den) = self.escalation_factor;
        if den == 0 || num <= den {
            return Err(Error::InvalidInput(
                "escalation_factor must be a rational greater than one".into(),
            ));
        }
        Ok(())
    }

    /// Mantissa bits for the working precision.
    pub fn bits(&self) -> u32 {
        digits_to_bits(self.working_digits)
    }

    /// The next policy in the escalation ladder, or `None` once exhausted.
    pub fn escalate(&self) -> Option<Self> {
        if self.escalation_level >= self.max_escalations {
            return None;
        }
        let (num, den) = self.escalation_factor;
        let raised = (self.working_digits as u64 * num as u64).div_ceil(den as u64) as u32;
        Some(Self {
            working_digits: raised.max(self.working_digits + 1),
            escalation_level: self.escalation_level + 1,
            ..self.clone()
        })
    }

    /// This policy followed by every escalation still available.
    pub fn ladder(&self) -> impl Iterator<Item = PrecisionPolicy> {
        std::iter::successors(Some(self.clone()), |p| p.escalate())
    }

    /// Unit roundoff of the working precision.
    pub fn eps(&self) -> Real {
        Float::with_val(self.bits(), Float::i_exp(1, 1 - self.bits() as i32))
    }

    /// `10^(-target_digits)`.
    pub fn target_tol(&self) -> Real {
        pow10(self.bits(), -(self.target_digits as i32))
    }

    /// `10^(-target_digits + 4)`, the semidefiniteness tolerance.
    pub fn semidef_tol(&self) -> Real {
        pow10(self.bits(), 4 - self.target_digits as i32)
    }

    pub fn real(&self, value: f64) -> Real {
        Float::with_val(self.bits(), value)
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self::for_target(30)
    }
}

pub fn pow10(bits: u32, exp: i32) -> Real {
    Float::with_val(bits, 10).pow(exp)
}

pub fn pi(bits: u32) -> Real {
    Float::with_val(bits, Constant::Pi)
}

pub fn ln2(bits: u32) -> Real {
    Float::with_val(bits, Constant::Log2)
}

/// log2 of a positive real.
pub fn log2(x: &Real) -> Real {
    Float::with_val(x.prec(), x.log2_ref())
}

/// Exact non-negative-or-signed rational parsed from decimal or `p/q` text.
///
/// Accepts `12`, `-0.5`, `1e-10`, `2.5E+3`, `1/3`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidInput(format!("not a decimal number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = Integer::from_str(p.trim()).map_err(|_| bad())?;
        let q = Integer::from_str(q.trim()).map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::from((p, q)));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(Integer::from_str(&digits).map_err(|_| bad())?);
    let shift = exponent - frac_part.len() as i32;
    let ten = Integer::from(10);
    if shift >= 0 {
        value *= ten.pow(shift as u32);
    } else {
        value /= ten.pow((-shift) as u32);
    }
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Exact decimal text for a rational with a terminating expansion, otherwise `p/q`.
pub fn format_rational(q: &Rational) -> String {
    let mut den = q.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den.is_divisible_u(2) {
        den /= 2;
        twos += 1;
    }
    while den.is_divisible_u(5) {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let places = twos.max(fives);
    let scaled = (q.numer() * Integer::from(Integer::u_pow_u(10, places)))
        / q.denom();
    let neg = scaled < 0;
    let digits = Integer::from(scaled.abs_ref()).to_string();
    let places = places as usize;
    let mut out = if places == 0 {
        digits
    } else if digits.len() > places {
        let (i, f) = digits.split_at(digits.len() - places);
        format!("{i}.{f}")
    } else {
        format!("0.{}{}", "0".repeat(places - digits.len()), digits)
    };
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if neg {
        out.insert(0, '-');
    }
    out
}

/// Scientific notation with `digits` significant digits; deterministic for a given value.
pub fn fmt_real(x: &Real, digits: u32) -> String {
    if x.is_zero() {
        return "0".into();
    }
    x.to_string_radix(10, Some(digits.max(1) as usize))
}

/// Serde helper: a real as a decimal string carrying its full working precision.
pub fn ser_real<S: serde::Serializer>(x: &Real, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_real(x, bits_to_digits(x.prec())))
}

pub fn ser_reals<S: serde::Serializer>(xs: &[Real], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| fmt_real(x, bits_to_digits(x.prec()))))
}

/// Strictly positive exact mass in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mass(Rational);

impl Mass {
    pub fn new(q: Rational) -> Result<Self> {
        if q <= 0 {
            return Err(Error::Massless);
        }
        Ok(Self(q))
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn to_real(&self, bits: u32) -> Real {
        Float::with_val(bits, &self.0)
    }

    /// `m * k` as an exact rational.
    pub fn times(&self, k: usize) -> Rational {
        Rational::from(&self.0 * Integer::from(k))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl FromStr for Mass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let q = parse_rational(s)?;
        if q == 0 {
            return Err(Error::Massless);
        }
        if q < 0 {
            return Err(Error::InvalidInput(format!("mass must be positive, got {s}")));
        }
        Ok(Self(q))
    }
}

impl fmt::Display for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for Mass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Mass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
