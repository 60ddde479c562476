//! Small helpers around `BigRational`: text rendering, parsing and serde.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Parses `p`, `-p`, `p/q` with `q > 0`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den <= BigInt::zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

/// Renders in lowest terms as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// serde adapter storing a rational as its `p/q` string.
pub mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| D::Error::custom(format!("bad rational `{s}`")))
    }
}

/// `Some(k)` when `r == 2^k` for an integer `k`.
pub fn log2_exact(r: &Rational) -> Option<i64> {
    if r <= &Rational::zero() {
        return None;
    }
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    let is_pow2 = |x: &num_bigint::BigUint| x.count_ones() == 1;
    if d.is_one() && is_pow2(n) {
        Some((n.bits() - 1) as i64)
    } else if n.is_one() && is_pow2(d) {
        Some(-((d.bits() - 1) as i64))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("1/2"), Some(rat(1, 2)));
        assert_eq!(parse_rational("-6/8"), Some(rat(-3, 4)));
        assert_eq!(parse_rational("7"), Some(int(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1/-2"), None);
        assert_eq!(parse_rational("x"), None);
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&int(-3)), "-3");
    }

    #[test]
    fn exact_log2() {
        assert_eq!(log2_exact(&int(8)), Some(3));
        assert_eq!(log2_exact(&rat(1, 2)), Some(-1));
        assert_eq!(log2_exact(&int(1)), Some(0));
        assert_eq!(log2_exact(&int(6)), None);
        assert_eq!(log2_exact(&int(-2)), None);
    }
}
