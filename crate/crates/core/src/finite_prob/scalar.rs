//! Number types the finite engine runs on.
//!
//! Every computation in [`crate::finite_prob`] is generic over [`Scalar`].
//! With [`Rational`] the results are exact; with `f64` every identity is
//! checked to within [`FLOAT_TOLERANCE`].

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision rational.
pub type Rational = BigRational;

/// Absolute tolerance used by the floating-point fallback.
pub const FLOAT_TOLERANCE: f64 = 1e-10;

pub trait Scalar: Clone + fmt::Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// True when arithmetic is exact and `is_negligible` means `== 0`.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Zero up to the tolerance of the arithmetic.
    fn is_negligible(&self) -> bool;

    /// `num/den` for rationals, shortest round-trip decimal for floats.
    fn render(&self) -> String;

    /// Accepts `"3"`, `"-1/4"` and decimal literals such as `"0.25"`.
    fn parse_literal(text: &str) -> Option<Self>;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_negligible()
    }

    fn is_strictly_positive(&self) -> bool {
        *self > Self::zero() && !self.is_negligible()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= FLOAT_TOLERANCE
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }

    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().ok()?;
                let d: f64 = d.trim().parse().ok()?;
                (d != 0.0).then(|| n / d)
            }
            None => text.parse().ok(),
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        let (n, d) = (self.numer(), self.denom());
        match (n.to_f64(), d.to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => ToPrimitive::to_f64(self).unwrap_or(f64::NAN),
        }
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn render(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            return Some(BigRational::new(n, d));
        }
        if let Ok(n) = text.parse::<BigInt>() {
            return Some(BigRational::from_integer(n));
        }
        // Decimal literal: read it exactly as digits over a power of ten.
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = body.split_once('.')?;
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(digits, scale);
        Some(if negative { -value } else { value })
    }
}

/// Sum of a slice, starting from zero.
pub fn sum<S: Scalar>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v)
}

/// Euclidean inner product.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_parse_exactly() {
        let q = Rational::parse_literal("-3/12").unwrap();
        assert_eq!(q.render(), "-1/4");
        assert_eq!(Rational::parse_literal("0.125").unwrap().render(), "1/8");
        assert_eq!(Rational::parse_literal("7").unwrap().render(), "7");
        assert!(Rational::parse_literal("1/0").is_none());
        assert!(Rational::parse_literal("abc").is_none());
    }

    #[test]
    fn float_literals_accept_fractions() {
        assert_eq!(f64::parse_literal("1/4"), Some(0.25));
        assert_eq!(f64::parse_literal(" 2.5 "), Some(2.5));
    }

    #[test]
    fn negligibility_depends_on_arithmetic() {
        assert!((1e-12f64).is_negligible());
        assert!(!Rational::from_ratio(1, 1_000_000_000_000).is_negligible());
        assert!(Rational::from_ratio(1, 3).is_strictly_positive());
    }
}
