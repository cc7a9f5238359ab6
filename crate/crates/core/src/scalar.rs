//! Dual-mode arithmetic: exact rationals and IEEE doubles behind one trait.
//!
//! Every algorithm in this crate is generic over [`Scalar`]. Instantiating
//! with [`Rational`] gives exact arithmetic end to end (zero-tolerance
//! comparisons, fraction-preserving parsing); instantiating with `f64` gives
//! fast approximate arithmetic with a small comparison tolerance. The mode is
//! chosen per invocation by picking the type parameter — there is no runtime
//! flag inside the library.

use num::{BigInt, BigRational, ToPrimitive};
use num_traits::Signed;
use std::fmt::{Debug, Display};
use std::str::FromStr;

/// Exact arithmetic instantiation: arbitrary-precision rationals.
pub type Rational = BigRational;

/// Number type the whole pipeline is generic over.
///
/// Implementations must be totally ordered on the values the pipeline
/// produces (no NaNs in play) and must provide exact zero/one constants.
pub trait Scalar:
    Signed + PartialOrd + Clone + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding anywhere).
    const EXACT: bool;

    fn from_int(v: i64) -> Self;

    /// num/den as a scalar; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;

    /// Parse a number written either as a fraction `p/q` (integer parts) or
    /// as a decimal with optional exponent (`-0.25`, `3`, `1e-3`).
    fn parse(text: &str) -> Option<Self>;

    /// Lossy view for reporting and metrics that are inherently irrational.
    fn to_f64(&self) -> f64;

    /// False for NaN/infinities; always true for rationals.
    fn is_finite_value(&self) -> bool;

    /// Comparison tolerance used by the solver and by feasibility checks:
    /// exactly zero in rational mode, a small epsilon in float mode.
    fn tol() -> Self;

    /// Nearest integer (ties away from zero).
    fn round_i64(&self) -> i64;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let value = if let Some((num, den)) = text.split_once('/') {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            if den == 0.0 {
                return None;
            }
            num / den
        } else {
            text.parse().ok()?
        };
        value.is_finite().then_some(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn tol() -> Self {
        1e-9
    }

    fn round_i64(&self) -> i64 {
        self.round() as i64
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num = BigInt::from_str(num.trim()).ok()?;
            let den = BigInt::from_str(den.trim()).ok()?;
            if den == BigInt::from(0) {
                return None;
            }
            return Some(BigRational::new(num, den));
        }
        parse_decimal(text)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Extremely large components can overflow the direct conversion;
            // fall back to a quotient of lossy halves.
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn tol() -> Self {
        num_traits::Zero::zero()
    }

    fn round_i64(&self) -> i64 {
        self.round().to_integer().to_i64().expect("rounded value out of i64 range")
    }
}

/// Decimal with optional exponent, parsed exactly into a rational.
fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if joined.is_empty() { "0" } else { &joined }).ok()?;
    let mut denom = BigInt::from(10).pow(frac_part.len() as u32);
    if exp >= 0 {
        numer *= BigInt::from(10).pow(exp as u32);
    } else {
        denom *= BigInt::from(10).pow((-exp) as u32);
    }
    if negative {
        numer = -numer;
    }
    Some(BigRational::new(numer, denom))
}

/// Max of two scalars by value (no NaN handling; inputs are finite).
pub fn smax<S: Scalar>(a: S, b: S) -> S {
    if a >= b {
        a
    } else {
        b
    }
}

/// Min of two scalars by value.
pub fn smin<S: Scalar>(a: S, b: S) -> S {
    if a <= b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    #[test]
    fn parses_fractions_exactly() {
        let v = Rational::parse("-7/4").unwrap();
        assert_eq!(v, Rational::ratio(-7, 4));
        let v = Rational::parse(" 3/9 ").unwrap();
        assert_eq!(v, Rational::ratio(1, 3));
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(Rational::parse("0.25").unwrap(), Rational::ratio(1, 4));
        assert_eq!(Rational::parse("-0.5").unwrap(), Rational::ratio(-1, 2));
        assert_eq!(Rational::parse("2").unwrap(), Rational::from_int(2));
        assert_eq!(Rational::parse("1e-3").unwrap(), Rational::ratio(1, 1000));
        assert_eq!(Rational::parse("2.5E2").unwrap(), Rational::from_int(250));
        assert_eq!(Rational::parse(".5").unwrap(), Rational::ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Rational::parse("").is_none());
        assert!(Rational::parse("abc").is_none());
        assert!(Rational::parse("1/0").is_none());
        assert!(Rational::parse("1.2.3").is_none());
        assert!(f64::parse("1/0").is_none());
        assert!(f64::parse("nan").is_none());
        assert!(f64::parse("inf").is_none());
    }

    #[test]
    fn float_parse_matches_std() {
        assert_eq!(f64::parse("-0.5").unwrap(), -0.5);
        assert_eq!(f64::parse("3/4").unwrap(), 0.75);
    }

    #[test]
    fn display_round_trips() {
        let v = Rational::ratio(-11, 24);
        assert_eq!(Rational::parse(&v.to_string()).unwrap(), v);
        let f: f64 = 0.1 + 0.2;
        assert_eq!(f64::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn tolerance_is_zero_only_for_exact_mode() {
        assert!(Rational::tol().is_zero());
        assert!(f64::tol() > 0.0);
        assert!(Rational::EXACT);
        assert!(!f64::EXACT);
    }

    #[test]
    fn rounding() {
        assert_eq!(Rational::ratio(5, 2).round_i64(), 3);
        assert_eq!(Rational::ratio(-5, 2).round_i64(), -3);
        assert_eq!((1.4999f64).round_i64(), 1);
        assert_eq!(Rational::one().round_i64(), 1);
    }
}
