//! Realization parameters: the scale `K` at which `t` is replaced by `2^K`
//! and the integer exponent each constant becomes.
//!
//! `W = 2 + max(|p| + q)` over constants `p/q`, `D` is the product of the
//! distinct denominators, and `K = 2 D W^(M n)`. Every constant times `K` is
//! then an integer, and `2^K` exceeds the doubly exponential threshold
//! `2^(W^(M n))` that a large enough `M` guarantees is safe.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxavg::{Constraint, MaxAvgInstance};
use crate::rational::{format_rational, Rational};

pub const DEFAULT_M: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealizationParams {
    pub w: BigInt,
    pub d: BigInt,
    pub m: u32,
    pub n: usize,
    pub k: BigInt,
    /// `K` was supplied by the caller instead of derived from `W`, `D`, `M`.
    pub overridden: bool,
    /// Distinct constants in order of appearance with their exponents `c K`.
    pub exponents: Vec<(Rational, BigInt)>,
}

/// JSON summary of the parameters, embedded in emitted instances.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsReport {
    #[serde(rename = "W")]
    pub w: String,
    #[serde(rename = "D")]
    pub d: String,
    #[serde(rename = "M")]
    pub m: u32,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "K_bits")]
    pub k_bits: u64,
    pub overridden: bool,
}

fn ceil_log2(x: &BigInt) -> u64 {
    if x <= &BigInt::one() {
        0
    } else {
        (x - 1u32).bits()
    }
}

fn exponent_of(c: &Rational, k: &BigInt) -> Result<BigInt> {
    let scaled = c * Rational::from_integer(k.clone());
    if !scaled.is_integer() {
        return Err(Error::Internal(format!(
            "constant {} times K = {k} is not an integer",
            format_rational(c)
        )));
    }
    Ok(scaled.to_integer())
}

impl RealizationParams {
    /// `W^(M n)`, the exponent of two in the threshold `K` must exceed.
    pub fn threshold_exponent(&self) -> BigInt {
        num_traits::pow(self.w.clone(), self.m as usize * self.n)
    }

    /// `2 + bits(D) + M n ceil(log2 W)`, an upper bound on `bits(K)` for the
    /// derived `K`.
    pub fn k_bit_bound(&self) -> u64 {
        2 + self.d.bits() + self.m as u64 * self.n as u64 * ceil_log2(&self.w)
    }

    pub fn exponent(&self, c: &Rational) -> Option<&BigInt> {
        self.exponents.iter().find(|(v, _)| v == c).map(|(_, e)| e)
    }

    /// Replaces `K` by a caller-chosen positive multiple of `D`. Outputs
    /// built from the result are not covered by the threshold guarantee.
    pub fn with_override_k(&self, k: BigInt) -> Result<Self> {
        if !k.is_positive() {
            return Err(Error::InvalidArgument(format!("K override {k} must be positive")));
        }
        if !k.is_multiple_of(&self.d) {
            return Err(Error::InvalidArgument(format!("K override {k} is not a multiple of D = {}", self.d)));
        }
        let exponents = self
            .exponents
            .iter()
            .map(|(c, _)| Ok((c.clone(), exponent_of(c, &k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RealizationParams {
            k,
            overridden: true,
            exponents,
            ..self.clone()
        })
    }

    pub fn report(&self) -> ParamsReport {
        ParamsReport {
            w: self.w.to_string(),
            d: self.d.to_string(),
            m: self.m,
            n: self.n,
            k: self.k.to_string(),
            k_bits: self.k.bits(),
            overridden: self.overridden,
        }
    }
}

pub fn compute_params(inst: &MaxAvgInstance, m: u32) -> Result<RealizationParams> {
    compute_params_with_vars(inst, m, inst.vars)
}

/// As [`compute_params`] but with the variable count `n` given explicitly,
/// for instances whose fresh normalization variables should not count.
pub fn compute_params_with_vars(inst: &MaxAvgInstance, m: u32, n: usize) -> Result<RealizationParams> {
    if m < 1 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let constants = inst.distinct_constants();
    let w = constants
        .iter()
        .map(|c| c.numer().abs() + c.denom())
        .max()
        .unwrap_or_else(BigInt::zero)
        + 2u32;
    let d = constants.iter().fold(BigInt::one(), |acc, c| acc * c.denom());
    let threshold = num_traits::pow(w.clone(), m as usize * n);
    let k = BigInt::from(2u32) * &d * &threshold;
    let exponents = constants
        .iter()
        .map(|c| Ok((c.clone(), exponent_of(c, &k)?)))
        .collect::<Result<Vec<_>>>()?;
    let params = RealizationParams {
        w,
        d,
        m,
        n,
        k,
        overridden: false,
        exponents,
    };
    debug_assert!(params.k > threshold);
    debug_assert!(params.k.bits() <= params.k_bit_bound());
    Ok(params)
}

/// Exponent `c K` for every constant constraint, keyed by constraint index.
pub fn integer_exponents(params: &RealizationParams, inst: &MaxAvgInstance) -> Result<BTreeMap<usize, BigInt>> {
    let mut out = BTreeMap::new();
    for (i, c) in inst.constraints.iter().enumerate() {
        if let Constraint::Const { value, .. } = c {
            out.insert(i, exponent_of(value, &params.k)?);
        }
    }
    Ok(out)
}

/// `W^(M n)` for the instance: the exponent of two in the threshold.
pub fn theoretical_threshold(inst: &MaxAvgInstance, m: u32) -> Result<BigInt> {
    Ok(compute_params(inst, m)?.threshold_exponent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn consts(vars: usize, cs: &[Rational]) -> MaxAvgInstance {
        MaxAvgInstance::new(
            vars,
            cs.iter()
                .enumerate()
                .map(|(i, c)| Constraint::Const {
                    var: i % vars.max(1),
                    value: c.clone(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn three_constants() {
        let inst = consts(3, &[int(0), int(1), rat(1, 2)]);
        let p = compute_params(&inst, 1).unwrap();
        assert_eq!(p.w, BigInt::from(5));
        assert_eq!(p.d, BigInt::from(2));
        assert_eq!(p.k, BigInt::from(500));
        assert_eq!(p.threshold_exponent(), BigInt::from(125));
        let e = integer_exponents(&p, &inst).unwrap();
        assert_eq!(e[&2], BigInt::from(250));
        assert_eq!(e[&0], BigInt::zero());
    }

    #[test]
    fn no_constants() {
        let inst = MaxAvgInstance::new(2, vec![]).unwrap();
        let p = compute_params(&inst, 1).unwrap();
        assert_eq!((p.w.clone(), p.d.clone(), p.k.clone()), (BigInt::from(2), BigInt::one(), BigInt::from(8)));
        assert_eq!(theoretical_threshold(&inst, 1).unwrap(), BigInt::from(4));
        let empty = MaxAvgInstance::default();
        assert_eq!(theoretical_threshold(&empty, 1).unwrap(), BigInt::one());
    }

    #[test]
    fn single_constant_with_m_two() {
        let p = compute_params(&consts(1, &[int(1)]), 2).unwrap();
        assert_eq!((p.w.clone(), p.d.clone(), p.k.clone()), (BigInt::from(4), BigInt::one(), BigInt::from(32)));
    }

    #[test]
    fn negative_constant_override() {
        let inst = consts(1, &[rat(-3, 4)]);
        let p = compute_params(&inst, 1).unwrap().with_override_k(BigInt::from(8)).unwrap();
        assert!(p.overridden);
        assert_eq!(integer_exponents(&p, &inst).unwrap()[&0], BigInt::from(-6));
        assert_eq!(p.exponent(&rat(-3, 4)), Some(&BigInt::from(-6)));
    }

    #[test]
    fn override_must_be_a_positive_multiple_of_d() {
        let p = compute_params(&consts(1, &[rat(1, 2)]), 1).unwrap();
        assert!(p.with_override_k(BigInt::from(3)).is_err());
        assert!(p.with_override_k(BigInt::zero()).is_err());
        assert!(p.with_override_k(BigInt::from(4)).is_ok());
    }

    #[test]
    fn m_must_be_positive() {
        assert!(matches!(compute_params(&MaxAvgInstance::default(), 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bit_length_bound() {
        for n in 1..6 {
            let cs: Vec<Rational> = (1..=n as i64).map(|i| rat(i, i + 1)).collect();
            let inst = consts(n, &cs);
            for m in 1..4 {
                let p = compute_params(&inst, m).unwrap();
                assert!(p.k.bits() <= p.k_bit_bound());
                assert!(p.k > p.threshold_exponent());
                for (c, e) in &p.exponents {
                    assert_eq!(c * Rational::from_integer(p.k.clone()), Rational::from_integer(e.clone()));
                }
            }
        }
    }

    #[test]
    fn report_fields() {
        let r = compute_params(&consts(3, &[int(0), int(1), rat(1, 2)]), 1).unwrap().report();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["W"], "5");
        assert_eq!(json["K"], "500");
        assert_eq!(json["K_bits"], 9);
        assert_eq!(json["overridden"], false);
    }
}
