//! Exact rational scalars.
//!
//! Every quantity the engine touches (weights, fractions, loads, values,
//! the parameters alpha/beta/gamma) is an arbitrary-precision rational.
//! Nothing inside the engine is ever rounded.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number.
pub type Scalar = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse `{input}` as an exact rational")]
pub struct ParseScalarError {
    input: String,
}

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Scalar {
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

/// `2^-exp` as an exact rational.
pub fn pow2_neg(exp: u32) -> Scalar {
    Scalar::new(BigInt::one(), BigInt::one() << exp as usize)
}

pub fn pow2(exp: u32) -> Scalar {
    Scalar::from_integer(BigInt::one() << exp as usize)
}

/// Parses `"3/4"`, `"0.19"`, `"7"` or `"1e-3"` into an exact rational.
///
/// Decimal notation is read exactly: `"0.19"` becomes `19/100`, not the
/// nearest binary float.
pub fn parse_scalar(input: &str) -> Result<Scalar, ParseScalarError> {
    let err = || ParseScalarError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Scalar::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{whole}{frac}");
    let mut value = Scalar::from_integer(BigInt::from_str(&digits).map_err(|_| err())?);
    let scale = exponent - frac.len() as i32;
    let ten = Scalar::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Lossy conversion for reporting only.
pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let shift = x.denom().bits().max(x.numer().bits()).saturating_sub(900);
        let n = (x.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
        let d = (x.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `p/q` rendering used in reports; integers print without the denominator.
pub fn to_string(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Exact square root when `x` is the square of a rational.
pub fn exact_sqrt(x: &Scalar) -> Option<Scalar> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Scalar::new(n, d))
    } else {
        None
    }
}

/// Rational upper approximation `r` of `sqrt(x)` for `0 < x < 1`.
///
/// Guarantees `r * r >= x`, `r - sqrt(x) < tol` and `r < 1`. Exact roots are
/// returned as is; otherwise the bracket `[lo, hi]` with `lo^2 < x <= hi^2`
/// is bisected over dyadic midpoints.
pub fn sqrt_upper(x: &Scalar, tol: &Scalar) -> Scalar {
    assert!(
        x.is_positive() && x < &Scalar::one(),
        "sqrt_upper expects 0 < x < 1"
    );
    if let Some(root) = exact_sqrt(x) {
        return root;
    }
    // sqrt(x) lies strictly between x and 1 on (0, 1)
    let mut lo = x.clone();
    let mut hi = Scalar::one();
    let half = ratio(1, 2);
    while &(&hi - &lo) >= tol || hi.is_one() {
        let mid = (&lo + &hi) * &half;
        if &(&mid * &mid) >= x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The fixed approximation tolerance for irrational square roots, `10^-12`.
pub fn sqrt_tolerance() -> Scalar {
    Scalar::new(BigInt::one(), BigInt::from(10u64.pow(12)))
}

/// A density value: a finite rational or the distinguished `+inf`.
///
/// `Infinite` compares greater than every finite value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extended {
    Finite(Scalar),
    Infinite,
}

impl Extended {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinite => None,
        }
    }

    /// Compares against a finite rational.
    pub fn cmp_scalar(&self, other: &Scalar) -> Ordering {
        match self {
            Extended::Finite(x) => x.cmp(other),
            Extended::Infinite => Ordering::Greater,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => f.write_str(&to_string(x)),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

/// Serde adapter writing a [`Scalar`] as its exact `"p/q"` string.
pub mod as_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Scalar;

    pub fn serialize<S: Serializer>(x: &Scalar, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&super::to_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Scalar, D::Error> {
        let s = String::deserialize(de)?;
        super::parse_scalar(&s).map_err(de::Error::custom)
    }
}

/// Serde adapter for maps whose values are [`Scalar`]s.
pub mod map_as_string {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::Serializer;

    use super::Scalar;

    pub fn serialize<K, S>(m: &BTreeMap<K, Scalar>, ser: S) -> Result<S::Ok, S::Error>
    where
        K: serde::Serialize,
        S: Serializer,
    {
        let mut map = ser.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, &super::to_string(v))?;
        }
        map.end()
    }
}

/// Serde adapter for optional [`Scalar`]s.
pub mod option_as_string {
    use serde::Serializer;

    use super::Scalar;

    pub fn serialize<S: Serializer>(x: &Option<Scalar>, ser: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => ser.serialize_some(&super::to_string(x)),
            None => ser.serialize_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_scalar("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_scalar("0.19").unwrap(), ratio(19, 100));
        assert_eq!(parse_scalar("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_scalar("2.5E1").unwrap(), int(25));
        assert_eq!(parse_scalar(" 7 ").unwrap(), int(7));
        assert_eq!(parse_scalar("-.5").unwrap(), ratio(-1, 2));
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("abc").is_err());
        assert!(parse_scalar(".").is_err());
    }

    #[test]
    fn exact_roots_are_detected() {
        assert_eq!(exact_sqrt(&ratio(81, 100)), Some(ratio(9, 10)));
        assert_eq!(exact_sqrt(&ratio(1, 4)), Some(ratio(1, 2)));
        assert_eq!(exact_sqrt(&ratio(1, 2)), None);
    }

    #[test]
    fn sqrt_upper_brackets_irrational_roots() {
        let tol = sqrt_tolerance();
        for (n, d) in [(1, 2), (3, 4), (2, 3), (65535, 65536)] {
            let x = ratio(n, d);
            let r = sqrt_upper(&x, &tol);
            assert!(&r * &r >= x);
            assert!(r < int(1));
            let reference = (n as f64 / d as f64).sqrt();
            assert!(to_f64(&r) - reference < 1e-12 + 1e-15, "{n}/{d}");
            assert!(to_f64(&r) >= reference - 1e-15);
        }
    }

    #[test]
    fn sqrt_upper_stays_below_one_near_one() {
        let x = Scalar::one() - pow2_neg(50);
        let r = sqrt_upper(&x, &sqrt_tolerance());
        assert!(r < Scalar::one());
        assert!(&r * &r >= x);
    }

    #[test]
    fn infinity_dominates() {
        assert!(Extended::Infinite > Extended::Finite(int(1_000_000)));
        assert!(Extended::Finite(int(1)) < Extended::Finite(int(2)));
        assert_eq!(Extended::Infinite.cmp_scalar(&int(5)), Ordering::Greater);
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = Scalar::new(BigInt::one() << 3000usize, (BigInt::one() << 3000usize) * 4);
        assert!((to_f64(&big) - 0.25).abs() < 1e-12);
    }
}
