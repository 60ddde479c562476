//! Final SDP instance from a lifted constraint system: each variable becomes
//! `X_i = 2^(K v_i)`, each constraint a small block, and each constant a
//! power-of-two gadget.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::One;

use crate::dyadic::DyadicValue;
use crate::error::{Error, Result};
use crate::gadget::{build_pow2_gadget, Pow2Gadget};
use crate::maxavg::ExtValue;
use crate::nonarch::{NonArchConstraint, NonArchSystem};
use crate::rational::{format_rational, Rational};
use crate::realize::RealizationParams;

use super::{conjoin, SdpInstance, SdpVar, SymBlock, VarKind, WitnessAssignment};

/// Gadgets keyed by exponent, each with the name prefix of its variables.
#[derive(Clone, Debug, Default)]
pub struct GadgetTable {
    pub by_exponent: BTreeMap<BigInt, (String, Pow2Gadget)>,
}

impl GadgetTable {
    pub fn get(&self, e: &BigInt) -> Option<&(String, Pow2Gadget)> {
        self.by_exponent.get(e)
    }

    pub fn len(&self) -> usize {
        self.by_exponent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_exponent.is_empty()
    }
}

/// One gadget per distinct constant, numbered in order of appearance.
pub fn build_gadgets(params: &RealizationParams) -> GadgetTable {
    let mut by_exponent = BTreeMap::new();
    for (j, (_, e)) in params.exponents.iter().enumerate() {
        by_exponent
            .entry(e.clone())
            .or_insert_with(|| (format!("g{j}"), build_pow2_gadget(e)));
    }
    GadgetTable { by_exponent }
}

pub fn csp_name(i: usize) -> String {
    format!("x{i}")
}

fn exponent_for<'a>(params: &'a RealizationParams, c: &Rational) -> Result<&'a BigInt> {
    params
        .exponent(c)
        .ok_or_else(|| Error::InvalidArgument(format!("no exponent for constant {}", format_rational(c))))
}

/// Gadgets the system refers to, in table order.
fn used_gadgets<'a>(
    sys: &NonArchSystem,
    params: &RealizationParams,
    gadgets: &'a GadgetTable,
) -> Result<Vec<&'a (String, Pow2Gadget)>> {
    let mut used = BTreeSet::new();
    for c in &sys.constraints {
        if let NonArchConstraint::PowerEq { exp, .. } = c {
            let e = exponent_for(params, exp)?;
            if gadgets.get(e).is_none() {
                return Err(Error::InvalidArgument(format!("no gadget for exponent {e}")));
            }
            used.insert(e.clone());
        }
    }
    Ok(used.iter().map(|e| &gadgets.by_exponent[e]).collect())
}

pub fn assemble(sys: &NonArchSystem, params: &RealizationParams, gadgets: &GadgetTable) -> Result<SdpInstance> {
    let one = Rational::one();
    let used = used_gadgets(sys, params, gadgets)?;
    let mut vars: Vec<SdpVar> = (0..sys.vars)
        .map(|i| SdpVar {
            name: csp_name(i),
            kind: VarKind::Csp,
        })
        .collect();
    let mut blocks = Vec::new();
    for (j, c) in sys.constraints.iter().enumerate() {
        match c {
            NonArchConstraint::SumGe { lhs, rhs } => {
                let label = format!(
                    "c{j} max x{lhs} <= {}",
                    if rhs.is_empty() {
                        "0".to_string()
                    } else {
                        rhs.iter().map(|i| csp_name(*i)).collect::<Vec<_>>().join(" + ")
                    }
                );
                let mut b = SymBlock::new(label, 1);
                for i in rhs {
                    b.add_term(&csp_name(*i), 0, 0, &one)?;
                }
                b.add_term(&csp_name(*lhs), 0, 0, &-one.clone())?;
                blocks.push(b);
            }
            NonArchConstraint::SquareLe { lhs, a, b } => {
                let mut blk = SymBlock::new(format!("c{j} avg x{lhs}^2 <= x{a} * x{b}"), 2);
                blk.add_term(&csp_name(*a), 0, 0, &one)?;
                blk.add_term(&csp_name(*lhs), 0, 1, &one)?;
                blk.add_term(&csp_name(*b), 1, 1, &one)?;
                blocks.push(blk);
            }
            NonArchConstraint::PowerEq { var, exp } => {
                let e = exponent_for(params, exp)?;
                let (prefix, g) = gadgets.get(e).expect("checked by used_gadgets");
                let out = g.output(prefix);
                let x = csp_name(*var);
                blocks.extend(SymBlock::equality(
                    &format!("c{j} const x{var} = {out}"),
                    &[(x.as_str(), one.clone()), (out.as_str(), -one.clone())],
                    Rational::from_integer(0.into()),
                ));
            }
        }
    }
    for &i in &sys.nonnegative {
        blocks.push(SymBlock::scalar(format!("nonneg x{i}"), &[(csp_name(i).as_str(), one.clone())], Rational::from_integer(0.into())));
    }
    for (prefix, g) in &used {
        vars.push(SdpVar {
            name: g.output(prefix),
            kind: VarKind::GadgetPrimal,
        });
    }
    let mut parts = vec![SdpInstance::new(vars, blocks)?];
    parts.extend(used.iter().map(|(prefix, g)| g.to_instance(prefix)));
    conjoin(&parts)
}

/// `X_i = 2^(a_i K)` (zero for `-inf`) together with every gadget witness.
/// Fails unless each finite `a_i K` is an integer.
pub fn forward_witness(
    sys: &NonArchSystem,
    params: &RealizationParams,
    gadgets: &GadgetTable,
    a: &[ExtValue],
) -> Result<WitnessAssignment> {
    if a.len() != sys.vars {
        return Err(Error::InvalidArgument(format!("assignment has {} values for {} variables", a.len(), sys.vars)));
    }
    let k = Rational::from_integer(params.k.clone());
    let mut values = BTreeMap::new();
    for (i, v) in a.iter().enumerate() {
        let x = match v {
            ExtValue::NegInf => DyadicValue::zero(),
            ExtValue::Finite(q) => {
                let e = q * &k;
                if !e.is_integer() {
                    return Err(Error::InvalidArgument(format!(
                        "value {} of x{i} times K = {} is not an integer",
                        format_rational(q),
                        params.k
                    )));
                }
                DyadicValue::pow2(e.to_integer())
            }
        };
        values.insert(csp_name(i), x);
    }
    for (prefix, g) in used_gadgets(sys, params, gadgets)? {
        values.extend(g.witness(prefix));
    }
    Ok(WitnessAssignment::new(values))
}
