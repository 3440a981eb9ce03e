//! Arithmetic modes: exact rationals and arbitrary-precision floats.
//!
//! Every series/solver routine is generic over [`Scalar`]. The two
//! implementations are [`Exact`] (rug `Rational`; every operation is exact,
//! operations that would leave the rationals return an error) and [`Fp`]
//! (rug `Float` at a per-value precision carried by the context).
//!
//! Contexts: `Exact` needs no context (`()`), `Fp` carries the mantissa bit
//! width. A context is passed explicitly wherever a value is created from
//! scratch; derived values inherit precision from their operands.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use thiserror::Error;

/// Default mantissa precision for floating-point mode.
pub const DEFAULT_FLOAT_BITS: u32 = 128;

/// Arithmetic mode descriptor, used in reports and provenance records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float { bits: u32 },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Float { bits } => write!(f, "float{bits}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    /// Exact mode can only evaluate Gamma(1+z) for integer z >= 0.
    #[error("exact mode cannot evaluate Gamma(1 + {arg}): argument is not a nonnegative integer")]
    ExactGammaNeedsInteger { arg: String },
    /// Exact mode can only raise to integer powers.
    #[error("exact mode cannot raise to non-integer power {exponent}")]
    ExactPowNeedsInteger { exponent: String },
    /// Exact mode cannot take logarithms or other transcendental maps.
    #[error("operation {op} is not exact; run in float mode")]
    ExactTranscendental { op: &'static str },
    #[error("cannot parse {input:?} as a coefficient")]
    ParseCoeff { input: String },
}

/// One arithmetic mode. Values are immutable; all ops take references.
///
/// Invariants relied on elsewhere:
/// * no operation produces NaN (division by zero is the caller's bug),
/// * `total_cmp` is a total order on finite values,
/// * `coeff_string` round-trips through `parse_coeff` losslessly.
pub trait Scalar: Clone + fmt::Debug + PartialEq {
    /// Context needed to build a value from scratch: `()` or a bit width.
    type Ctx: Copy + fmt::Debug;

    const IS_EXACT: bool;

    fn mode_of(ctx: Self::Ctx) -> Mode;
    fn zero(ctx: Self::Ctx) -> Self;
    fn one(ctx: Self::Ctx) -> Self;
    fn from_rational(ctx: Self::Ctx, r: &Rational) -> Self;
    fn from_integer(ctx: Self::Ctx, n: &Integer) -> Self;

    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
    fn abs(&self) -> Self;
    fn neg(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Division; `other` must be nonzero.
    fn div(&self, other: &Self) -> Self;
    fn powi(&self, exp: i32) -> Self;

    /// Total order; both values must be finite.
    fn total_cmp(&self, other: &Self) -> Ordering;

    fn to_f64(&self) -> f64;
    /// Natural log as f64; `None` when `self <= 0`.
    fn ln_f64(&self) -> Option<f64>;
    /// Rational view: lossless in exact mode, the exact dyadic value of
    /// a finite float, `None` for non-finite values.
    fn to_rational(&self) -> Option<Rational>;

    /// Gamma(1 + z) for rational z >= 0. Exact mode requires integer z.
    fn gamma_one_plus(ctx: Self::Ctx, z: &Rational) -> Result<Self, ScalarError>;
    /// `self^e` for rational e; `self` must be > 0 unless e is integer.
    /// Exact mode requires integer e.
    fn pow_rational(&self, e: &Rational) -> Result<Self, ScalarError>;

    /// Lossless serialization used in JSON reports and solution files.
    fn coeff_string(&self) -> String;
    fn parse_coeff(ctx: Self::Ctx, s: &str) -> Result<Self, ScalarError>;

    fn from_i64(ctx: Self::Ctx, n: i64) -> Self {
        Self::from_integer(ctx, &Integer::from(n))
    }

    fn factorial(ctx: Self::Ctx, n: u32) -> Self {
        Self::from_integer(ctx, &Integer::from(Integer::factorial(n)))
    }
}

/// Exact mode: arbitrary-precision rationals.
pub type Exact = Rational;

impl Scalar for Rational {
    type Ctx = ();
    const IS_EXACT: bool = true;

    fn mode_of(_ctx: ()) -> Mode {
        Mode::Exact
    }
    fn zero(_ctx: ()) -> Self {
        Rational::new()
    }
    fn one(_ctx: ()) -> Self {
        Rational::from(1)
    }
    fn from_rational(_ctx: (), r: &Rational) -> Self {
        r.clone()
    }
    fn from_integer(_ctx: (), n: &Integer) -> Self {
        Rational::from(n)
    }

    fn is_zero(&self) -> bool {
        *self.numer() == 0
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn abs(&self) -> Self {
        Rational::from(self.abs_ref())
    }
    fn neg(&self) -> Self {
        Rational::from(-self.clone())
    }
    fn add(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }
    fn sub(&self, other: &Self) -> Self {
        Rational::from(self - other)
    }
    fn mul(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }
    fn div(&self, other: &Self) -> Self {
        debug_assert!(*other.numer() != 0, "division by zero");
        Rational::from(self / other)
    }
    fn powi(&self, exp: i32) -> Self {
        Rational::from(self.pow(exp))
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn ln_f64(&self) -> Option<f64> {
        if *self <= 0 {
            return None;
        }
        // 96-bit intermediate avoids double rounding on huge numerators.
        let f = Float::with_val(96, self);
        Some(f.ln().to_f64())
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn gamma_one_plus(_ctx: (), z: &Rational) -> Result<Self, ScalarError> {
        if !z.is_integer() || *z < 0 {
            return Err(ScalarError::ExactGammaNeedsInteger { arg: z.to_string() });
        }
        let n = z
            .numer()
            .to_u32()
            .ok_or_else(|| ScalarError::ExactGammaNeedsInteger { arg: z.to_string() })?;
        Ok(Rational::from(Integer::from(Integer::factorial(n))))
    }

    fn pow_rational(&self, e: &Rational) -> Result<Self, ScalarError> {
        if !e.is_integer() {
            return Err(ScalarError::ExactPowNeedsInteger { exponent: e.to_string() });
        }
        let exp = e
            .numer()
            .to_i32()
            .ok_or_else(|| ScalarError::ExactPowNeedsInteger { exponent: e.to_string() })?;
        Ok(Rational::from(self.pow(exp)))
    }

    fn coeff_string(&self) -> String {
        self.to_string()
    }
    fn parse_coeff(_ctx: (), s: &str) -> Result<Self, ScalarError> {
        parse_rational(s).ok_or_else(|| ScalarError::ParseCoeff { input: s.to_string() })
    }
}

/// Floating-point mode: rug `Float` with explicit precision.
pub type Fp = Float;

impl Scalar for Float {
    type Ctx = u32;
    const IS_EXACT: bool = false;

    fn mode_of(ctx: u32) -> Mode {
        Mode::Float { bits: ctx }
    }
    fn zero(ctx: u32) -> Self {
        Float::with_val(ctx, 0)
    }
    fn one(ctx: u32) -> Self {
        Float::with_val(ctx, 1)
    }
    fn from_rational(ctx: u32, r: &Rational) -> Self {
        Float::with_val(ctx, r)
    }
    fn from_integer(ctx: u32, n: &Integer) -> Self {
        Float::with_val(ctx, n)
    }

    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    fn is_finite(&self) -> bool {
        Float::is_finite(self)
    }
    fn abs(&self) -> Self {
        Float::with_val(self.prec(), self.abs_ref())
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn add(&self, other: &Self) -> Self {
        Float::with_val(self.prec().max(other.prec()), self + other)
    }
    fn sub(&self, other: &Self) -> Self {
        Float::with_val(self.prec().max(other.prec()), self - other)
    }
    fn mul(&self, other: &Self) -> Self {
        Float::with_val(self.prec().max(other.prec()), self * other)
    }
    fn div(&self, other: &Self) -> Self {
        Float::with_val(self.prec().max(other.prec()), self / other)
    }
    fn powi(&self, exp: i32) -> Self {
        Float::with_val(self.prec(), self.pow(exp))
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).expect("finite values compare")
    }

    fn to_f64(&self) -> f64 {
        Float::to_f64(self)
    }
    fn ln_f64(&self) -> Option<f64> {
        if *self <= 0 {
            return None;
        }
        Some(Float::with_val(self.prec(), self.ln_ref()).to_f64())
    }
    fn to_rational(&self) -> Option<Rational> {
        Float::to_rational(self)
    }

    fn gamma_one_plus(ctx: u32, z: &Rational) -> Result<Self, ScalarError> {
        let arg = Float::with_val(ctx + 16, z) + 1u32;
        let mut g = arg.gamma();
        g.set_prec_round(ctx, Round::Nearest);
        Ok(g)
    }

    fn pow_rational(&self, e: &Rational) -> Result<Self, ScalarError> {
        let exp = Float::with_val(self.prec(), e);
        Ok(Float::with_val(self.prec(), self.pow(&exp)))
    }

    fn coeff_string(&self) -> String {
        // Radix-16 digits with no truncation round-trip the mantissa exactly.
        format!("hex:{}", self.to_string_radix(16, None))
    }
    fn parse_coeff(ctx: u32, s: &str) -> Result<Self, ScalarError> {
        if let Some(hex) = s.strip_prefix("hex:") {
            return Float::parse_radix(hex, 16)
                .map(|incomplete| Float::with_val(ctx, incomplete))
                .map_err(|_| ScalarError::ParseCoeff { input: s.to_string() });
        }
        if let Some(r) = parse_rational(s) {
            return Ok(Float::with_val(ctx, &r));
        }
        Float::parse(s)
            .map(|incomplete| Float::with_val(ctx, incomplete))
            .map_err(|_| ScalarError::ParseCoeff { input: s.to_string() })
    }
}

/// Parses `p`, `p/q`, or a decimal literal (`-1.25`, `3e2`) as an exact
/// rational. Returns `None` on malformed input or zero denominator.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: Integer = num.trim().parse().ok()?;
        let d: Integer = den.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational::from((n, d)));
    }
    if let Ok(n) = s.parse::<Integer>() {
        return Some(Rational::from(n));
    }
    // Decimal with optional exponent: mantissa * 10^exp.
    let (mantissa, exp10) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if frac_part.contains(['+', '-']) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return None;
    }
    let n: Integer = digits.parse().ok()?;
    let shift = exp10 - frac_part.len() as i32;
    let scale: Rational = Rational::from(10).pow(shift);
    Some(Rational::from(n) * scale)
}
