//! Exact dyadic numbers with arbitrary-precision exponents.
//!
//! Witness values in the reduction look like `2^e` with `e` thousands of bits
//! long, so they cannot be materialized as integers. A [`DyadicValue`] is a
//! finite sum of clusters `m * 2^lo` where each `m` is an odd integer and
//! clusters are separated by more than [`CLUSTER_GAP`] bits. Adding values
//! merges clusters that come close together; far-apart clusters stay
//! symbolic. The sign of a value is the sign of its highest cluster, because
//! the separation guarantees the lower clusters sum to less than `2^lo` of the
//! top one. Every operation is exact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Minimum number of zero bits between two clusters that are kept apart.
pub const CLUSTER_GAP: u64 = 64;

#[derive(Clone, Debug)]
struct Term {
    mantissa: BigInt,
    exp: BigInt,
}

impl Term {
    fn top(&self) -> BigInt {
        &self.exp + BigInt::from(self.mantissa.magnitude().bits())
    }
}

#[derive(Clone, Debug, Default)]
pub struct DyadicValue {
    /// Ascending by exponent; canonical after `normalize`.
    terms: Vec<Term>,
}

impl DyadicValue {
    pub fn zero() -> Self {
        DyadicValue { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::pow2(BigInt::zero())
    }

    /// `2^e`.
    pub fn pow2(e: impl Into<BigInt>) -> Self {
        DyadicValue {
            terms: vec![Term {
                mantissa: BigInt::one(),
                exp: e.into(),
            }],
        }
    }

    /// `m * 2^e`.
    pub fn from_parts(m: impl Into<BigInt>, e: impl Into<BigInt>) -> Self {
        let mut v = DyadicValue {
            terms: vec![Term {
                mantissa: m.into(),
                exp: e.into(),
            }],
        };
        v.normalize();
        v
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::from_parts(n, 0)
    }

    /// Exact conversion; fails unless the denominator is a power of two.
    pub fn from_rational(r: &Rational) -> Result<Self> {
        let den = r.denom().magnitude();
        if den.count_ones() != 1 {
            return Err(Error::NotDyadic(crate::rational::format_rational(r)));
        }
        let shift = den.bits() - 1;
        Ok(Self::from_parts(r.numer().clone(), -BigInt::from(shift)))
    }

    /// Materializes the value when every exponent fits in `max_bits` bits of
    /// shift. Intended for tests and small witnesses.
    pub fn to_rational(&self, max_bits: u64) -> Option<Rational> {
        let mut acc = Rational::zero();
        for t in &self.terms {
            let e = t.exp.to_i64()?;
            if e.unsigned_abs() > max_bits {
                return None;
            }
            let p = Rational::from_integer(BigInt::one() << e.unsigned_abs());
            let scale = if e >= 0 { p } else { p.recip() };
            acc += Rational::from_integer(t.mantissa.clone()) * scale;
        }
        Some(acc)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn signum(&self) -> Ordering {
        match self.terms.last() {
            None => Ordering::Equal,
            Some(t) if t.mantissa.is_positive() => Ordering::Greater,
            Some(_) => Ordering::Less,
        }
    }

    /// `Some(e)` when the value is exactly `2^e`.
    pub fn as_pow2(&self) -> Option<&BigInt> {
        match self.terms.as_slice() {
            [t] if t.mantissa.is_one() => Some(&t.exp),
            _ => None,
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.terms.len()
    }

    fn normalize(&mut self) {
        let gap = BigInt::from(CLUSTER_GAP);
        loop {
            self.terms.retain(|t| !t.mantissa.is_zero());
            self.terms.sort_by(|a, b| a.exp.cmp(&b.exp));
            let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
            for t in self.terms.drain(..) {
                match out.last_mut() {
                    Some(cur) if t.exp <= cur.top() + &gap => {
                        let shift = (&t.exp - &cur.exp)
                            .to_u64()
                            .expect("cluster span is bounded by the merge gap");
                        cur.mantissa += t.mantissa << shift;
                    }
                    _ => out.push(t),
                }
            }
            out.retain(|t| !t.mantissa.is_zero());
            for t in &mut out {
                let tz = t.mantissa.trailing_zeros().unwrap_or(0);
                if tz > 0 {
                    t.mantissa >>= tz;
                    t.exp += BigInt::from(tz);
                }
            }
            self.terms = out;
            // A carry can push a cluster's top bit within the gap of its
            // neighbour; another pass merges them.
            if self.terms.windows(2).all(|w| w[1].exp > w[0].top() + &gap) {
                return;
            }
        }
    }

    /// `self * 2^e`.
    pub fn shl(&self, e: &BigInt) -> Self {
        DyadicValue {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    mantissa: t.mantissa.clone(),
                    exp: &t.exp + e,
                })
                .collect(),
        }
    }
}

impl PartialEq for DyadicValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DyadicValue {}

impl PartialOrd for DyadicValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicValue {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl Neg for &DyadicValue {
    type Output = DyadicValue;
    fn neg(self) -> DyadicValue {
        DyadicValue {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    mantissa: -&t.mantissa,
                    exp: t.exp.clone(),
                })
                .collect(),
        }
    }
}

impl Neg for DyadicValue {
    type Output = DyadicValue;
    fn neg(self) -> DyadicValue {
        -&self
    }
}

impl Add for &DyadicValue {
    type Output = DyadicValue;
    fn add(self, rhs: &DyadicValue) -> DyadicValue {
        let mut v = DyadicValue {
            terms: self.terms.iter().chain(&rhs.terms).cloned().collect(),
        };
        v.normalize();
        v
    }
}

impl Sub for &DyadicValue {
    type Output = DyadicValue;
    fn sub(self, rhs: &DyadicValue) -> DyadicValue {
        self + &(-rhs)
    }
}

impl Mul for &DyadicValue {
    type Output = DyadicValue;
    fn mul(self, rhs: &DyadicValue) -> DyadicValue {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(Term {
                    mantissa: &a.mantissa * &b.mantissa,
                    exp: &a.exp + &b.exp,
                });
            }
        }
        let mut v = DyadicValue { terms };
        v.normalize();
        v
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for DyadicValue {
            type Output = DyadicValue;
            fn $m(self, rhs: DyadicValue) -> DyadicValue {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for DyadicValue {
    /// Highest cluster first: `m*2^e + m*2^e ...`; zero prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*2^{}", t.mantissa, t.exp)?;
        }
        Ok(())
    }
}

impl FromStr for DyadicValue {
    type Err = Error;

    /// Accepts the `Display` form, or a plain dyadic rational such as `3/4`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad dyadic value `{s}`"));
        let mut acc = DyadicValue::zero();
        for part in s.split('+') {
            let part = part.trim();
            let term = match part.split_once("*2^") {
                Some((m, e)) => {
                    let m: BigInt = m.trim().parse().map_err(|_| bad())?;
                    let e: BigInt = e.trim().parse().map_err(|_| bad())?;
                    DyadicValue::from_parts(m, e)
                }
                None => {
                    let r = crate::rational::parse_rational(part).ok_or_else(bad)?;
                    DyadicValue::from_rational(&r)?
                }
            };
            acc = &acc + &term;
        }
        Ok(acc)
    }
}

impl Serialize for DyadicValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DyadicValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
