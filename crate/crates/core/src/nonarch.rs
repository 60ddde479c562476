//! The lift of a max-average instance to a constraint system over Puiseux
//! series in `t`, and exact checking of monomial witnesses `c * t^q`.
//!
//! For nonnegative series the valuation turns `+` into `max` and `*` into
//! `+`, so `x <= y + z` mirrors a max constraint, `x^2 <= y z` an average
//! constraint, and `x = t^c` a constant.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxavg::{Assignment, Constraint, ExtValue, MaxAvgInstance};
use crate::rational::{format_rational, serde_str, Rational};

/// `coeff * t^exp` with `coeff >= 0`. A zero coefficient is the zero
/// series, whose valuation is −∞; its exponent is normalized to 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    #[serde(with = "serde_str")]
    coeff: Rational,
    #[serde(with = "serde_str")]
    exp: Rational,
}

impl Monomial {
    pub fn new(coeff: Rational, exp: Rational) -> Result<Self> {
        if coeff.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "monomial coefficient {} is negative",
                format_rational(&coeff)
            )));
        }
        let exp = if coeff.is_zero() { Rational::zero() } else { exp };
        Ok(Monomial { coeff, exp })
    }

    pub fn zero() -> Self {
        Monomial {
            coeff: Rational::zero(),
            exp: Rational::zero(),
        }
    }

    /// `t^exp`.
    pub fn t_pow(exp: Rational) -> Self {
        Monomial {
            coeff: Rational::one(),
            exp,
        }
    }

    pub fn coeff(&self) -> &Rational {
        &self.coeff
    }

    pub fn exp(&self) -> &Rational {
        &self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn valuation(&self) -> ExtValue {
        if self.is_zero() {
            ExtValue::NegInf
        } else {
            ExtValue::Finite(self.exp.clone())
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        if self.is_zero() || other.is_zero() {
            return Monomial::zero();
        }
        Monomial {
            coeff: &self.coeff * &other.coeff,
            exp: &self.exp + &other.exp,
        }
    }

    /// Leading monomial of a sum of nonnegative monomials.
    pub fn leading_of_sum<'a>(terms: impl IntoIterator<Item = &'a Monomial>) -> Monomial {
        let mut best = Monomial::zero();
        for t in terms.into_iter().filter(|t| !t.is_zero()) {
            if best.is_zero() || t.exp > best.exp {
                best = t.clone();
            } else if t.exp == best.exp {
                best.coeff += &t.coeff;
            }
        }
        best
    }

    /// Order of the ordered field on nonnegative monomials: by valuation,
    /// then by coefficient.
    pub fn cmp_value(&self, other: &Monomial) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.exp.cmp(&other.exp).then_with(|| self.coeff.cmp(&other.coeff)),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        write!(f, "{}*t^{}", format_rational(&self.coeff), format_rational(&self.exp))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NonArchConstraint {
    /// `x[lhs] <= x[rhs[0]] + ... + x[rhs[k-1]]`; the empty sum is 0.
    SumGe { lhs: usize, rhs: Vec<usize> },
    /// `x[lhs]^2 <= x[a] * x[b]`.
    SquareLe { lhs: usize, a: usize, b: usize },
    /// `x[var] = t^exp`.
    PowerEq {
        var: usize,
        #[serde(with = "serde_str")]
        exp: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonArchSystem {
    pub vars: usize,
    pub constraints: Vec<NonArchConstraint>,
    /// Index of the source constraint each lifted constraint came from.
    pub provenance: Vec<usize>,
    /// Variables constrained to be nonnegative: all of them.
    pub nonnegative: Vec<usize>,
}

pub fn lift(inst: &MaxAvgInstance) -> NonArchSystem {
    let constraints = inst
        .constraints
        .iter()
        .map(|c| match c {
            Constraint::MaxLe { lhs, rhs } => NonArchConstraint::SumGe {
                lhs: *lhs,
                rhs: rhs.clone(),
            },
            Constraint::AvgLe { lhs, a, b } => NonArchConstraint::SquareLe {
                lhs: *lhs,
                a: *a,
                b: *b,
            },
            Constraint::Const { var, value } => NonArchConstraint::PowerEq {
                var: *var,
                exp: value.clone(),
            },
        })
        .collect();
    NonArchSystem {
        vars: inst.vars,
        constraints,
        provenance: (0..inst.constraints.len()).collect(),
        nonnegative: (0..inst.vars).collect(),
    }
}

/// `t^a_i` per coordinate, with `t^−∞ = 0`.
pub fn monomial_witness(a: &[ExtValue]) -> Vec<Monomial> {
    a.iter()
        .map(|v| match v {
            ExtValue::NegInf => Monomial::zero(),
            ExtValue::Finite(q) => Monomial::t_pow(q.clone()),
        })
        .collect()
}

/// Valuation of each coordinate.
pub fn valuations(w: &[Monomial]) -> Assignment {
    w.iter().map(Monomial::valuation).collect()
}

impl NonArchConstraint {
    pub fn holds(&self, w: &[Monomial]) -> bool {
        match self {
            NonArchConstraint::SumGe { lhs, rhs } => {
                let sum = Monomial::leading_of_sum(rhs.iter().map(|&i| &w[i]));
                w[*lhs].cmp_value(&sum) != Ordering::Greater
            }
            NonArchConstraint::SquareLe { lhs, a, b } => {
                let sq = w[*lhs].mul(&w[*lhs]);
                sq.cmp_value(&w[*a].mul(&w[*b])) != Ordering::Greater
            }
            NonArchConstraint::PowerEq { var, exp } => w[*var].coeff.is_one() && &w[*var].exp == exp,
        }
    }
}

/// Exact check of a monomial vector. Nonnegativity holds by construction of
/// [`Monomial`].
pub fn verify_nonarch(sys: &NonArchSystem, w: &[Monomial]) -> bool {
    w.len() == sys.vars && sys.constraints.iter().all(|c| c.holds(w))
}
