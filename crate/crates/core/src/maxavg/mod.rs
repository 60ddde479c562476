//! Max-average constraint systems over ℚ ∪ {−∞}: the three base forms, the
//! sugar that desugars into them, assignment checking, and a text format.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, half, parse_rational, serde_str, Rational};

pub mod oracle;

pub use oracle::{oracle_feasible, OracleVerdict};

/// A value in ℚ ∪ {−∞}. `NegInf` orders below every finite value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtValue {
    NegInf,
    Finite(Rational),
}

impl ExtValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtValue::NegInf => None,
            ExtValue::Finite(r) => Some(r),
        }
    }

    /// `(a + b) / 2`, absorbing at −∞.
    pub fn average(a: &ExtValue, b: &ExtValue) -> ExtValue {
        match (a, b) {
            (ExtValue::Finite(a), ExtValue::Finite(b)) => ExtValue::Finite((a + b) * half()),
            _ => ExtValue::NegInf,
        }
    }
}

impl From<Rational> for ExtValue {
    fn from(r: Rational) -> Self {
        ExtValue::Finite(r)
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::NegInf => f.write_str("-inf"),
            ExtValue::Finite(r) => f.write_str(&format_rational(r)),
        }
    }
}

impl FromStr for ExtValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" | "-oo" => Ok(ExtValue::NegInf),
            t => parse_rational(t)
                .map(ExtValue::Finite)
                .ok_or_else(|| Error::InvalidArgument(format!("bad value `{t}`"))),
        }
    }
}

impl Serialize for ExtValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub type Assignment = Vec<ExtValue>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Constraint {
    /// `x[lhs] <= max(x[rhs])`; an empty `rhs` forces `x[lhs] = −∞`.
    #[serde(rename = "LEMAX")]
    MaxLe { lhs: usize, rhs: Vec<usize> },
    /// `x[lhs] <= (x[a] + x[b]) / 2`.
    #[serde(rename = "LEAVG")]
    AvgLe { lhs: usize, a: usize, b: usize },
    /// `x[var] = value`.
    #[serde(rename = "CONST")]
    Const {
        var: usize,
        #[serde(with = "serde_str")]
        value: Rational,
    },
}

impl Constraint {
    pub fn lhs(&self) -> usize {
        match self {
            Constraint::MaxLe { lhs, .. } | Constraint::AvgLe { lhs, .. } => *lhs,
            Constraint::Const { var, .. } => *var,
        }
    }

    fn vars(&self) -> Vec<usize> {
        match self {
            Constraint::MaxLe { lhs, rhs } => std::iter::once(*lhs).chain(rhs.iter().copied()).collect(),
            Constraint::AvgLe { lhs, a, b } => vec![*lhs, *a, *b],
            Constraint::Const { var, .. } => vec![*var],
        }
    }

    /// Whether the constraint holds under `a`.
    pub fn holds(&self, a: &[ExtValue]) -> bool {
        match self {
            Constraint::MaxLe { lhs, rhs } => {
                let bound = rhs.iter().map(|&i| &a[i]).max().unwrap_or(&ExtValue::NegInf);
                &a[*lhs] <= bound
            }
            Constraint::AvgLe { lhs, a: i, b: j } => a[*lhs] <= ExtValue::average(&a[*i], &a[*j]),
            Constraint::Const { var, value } => a[*var].finite() == Some(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SugaredConstraint {
    #[serde(rename = "LEMAX")]
    MaxLe { lhs: usize, rhs: Vec<usize> },
    #[serde(rename = "LEAVG")]
    AvgLe { lhs: usize, a: usize, b: usize },
    #[serde(rename = "CONST")]
    Const {
        var: usize,
        #[serde(with = "serde_str")]
        value: Rational,
    },
    /// `x[lhs] <= min(x[rhs])`.
    #[serde(rename = "LEMIN")]
    MinLe { lhs: usize, rhs: Vec<usize> },
    /// `x[var] <= value`.
    #[serde(rename = "LECONST")]
    LeConst {
        var: usize,
        #[serde(with = "serde_str")]
        value: Rational,
    },
    /// `x[var] >= value`.
    #[serde(rename = "GECONST")]
    GeConst {
        var: usize,
        #[serde(with = "serde_str")]
        value: Rational,
    },
}

impl From<Constraint> for SugaredConstraint {
    fn from(c: Constraint) -> Self {
        match c {
            Constraint::MaxLe { lhs, rhs } => SugaredConstraint::MaxLe { lhs, rhs },
            Constraint::AvgLe { lhs, a, b } => SugaredConstraint::AvgLe { lhs, a, b },
            Constraint::Const { var, value } => SugaredConstraint::Const { var, value },
        }
    }
}

impl SugaredConstraint {
    fn base(&self) -> Option<Constraint> {
        match self {
            SugaredConstraint::MaxLe { lhs, rhs } => Some(Constraint::MaxLe {
                lhs: *lhs,
                rhs: rhs.clone(),
            }),
            SugaredConstraint::AvgLe { lhs, a, b } => Some(Constraint::AvgLe {
                lhs: *lhs,
                a: *a,
                b: *b,
            }),
            SugaredConstraint::Const { var, value } => Some(Constraint::Const {
                var: *var,
                value: value.clone(),
            }),
            _ => None,
        }
    }

    fn vars(&self) -> Vec<usize> {
        match self {
            SugaredConstraint::MinLe { lhs, rhs } => std::iter::once(*lhs).chain(rhs.iter().copied()).collect(),
            SugaredConstraint::LeConst { var, .. } | SugaredConstraint::GeConst { var, .. } => vec![*var],
            other => other.base().unwrap().vars(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxAvgInstance {
    pub vars: usize,
    pub constraints: Vec<Constraint>,
}

impl MaxAvgInstance {
    pub fn new(vars: usize, constraints: Vec<Constraint>) -> Result<Self> {
        for (i, c) in constraints.iter().enumerate() {
            if let Some(v) = c.vars().into_iter().find(|&v| v >= vars) {
                return Err(Error::InvalidInstance(format!(
                    "constraint {i} uses variable {v} but there are only {vars}"
                )));
            }
        }
        Ok(MaxAvgInstance { vars, constraints })
    }

    /// Constants in order of first appearance, without repetition.
    pub fn distinct_constants(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = Vec::new();
        for c in &self.constraints {
            if let Constraint::Const { value, .. } = c {
                if !out.contains(value) {
                    out.push(value.clone());
                }
            }
        }
        out
    }

    pub fn to_sugared(&self) -> SugaredInstance {
        SugaredInstance {
            vars: self.vars,
            constraints: self.constraints.iter().cloned().map(Into::into).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        self.to_sugared().to_text()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SugaredInstance {
    pub vars: usize,
    pub constraints: Vec<SugaredConstraint>,
}

impl SugaredInstance {
    pub fn new(vars: usize, constraints: Vec<SugaredConstraint>) -> Result<Self> {
        for (i, c) in constraints.iter().enumerate() {
            if let Some(v) = c.vars().into_iter().find(|&v| v >= vars) {
                return Err(Error::InvalidInstance(format!(
                    "constraint {i} uses variable {v} but there are only {vars}"
                )));
            }
        }
        Ok(SugaredInstance { vars, constraints })
    }

    pub fn is_normal(&self) -> bool {
        self.constraints.iter().all(|c| c.base().is_some())
    }

    /// One constraint per line: `LEMAX i0 i1 ...`, `LEAVG i0 i1 i2`,
    /// `CONST i0 p/q`, `LEMIN ...`, `LECONST i0 p/q`, `GECONST i0 p/q`,
    /// after a `maxavg <n>` header.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "maxavg {}", self.vars);
        let list = |v: &[usize]| v.iter().map(|i| format!(" {i}")).collect::<String>();
        for c in &self.constraints {
            let _ = match c {
                SugaredConstraint::MaxLe { lhs, rhs } => writeln!(out, "LEMAX {lhs}{}", list(rhs)),
                SugaredConstraint::MinLe { lhs, rhs } => writeln!(out, "LEMIN {lhs}{}", list(rhs)),
                SugaredConstraint::AvgLe { lhs, a, b } => writeln!(out, "LEAVG {lhs} {a} {b}"),
                SugaredConstraint::Const { var, value } => writeln!(out, "CONST {var} {}", format_rational(value)),
                SugaredConstraint::LeConst { var, value } => writeln!(out, "LECONST {var} {}", format_rational(value)),
                SugaredConstraint::GeConst { var, value } => writeln!(out, "GECONST {var} {}", format_rational(value)),
            };
        }
        out
    }
}

/// Where a variable of a normalized instance came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarOrigin {
    Source(usize),
    /// Introduced for the sugared constraint with this index.
    Fresh { constraint: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub instance: MaxAvgInstance,
    pub origin: Vec<VarOrigin>,
}

impl Normalized {
    /// Extends a solution of the source instance: each fresh variable takes
    /// the value of the constant it was introduced for.
    pub fn extend(&self, source: &SugaredInstance, a: &[ExtValue]) -> Assignment {
        self.origin
            .iter()
            .map(|o| match o {
                VarOrigin::Source(i) => a[*i].clone(),
                VarOrigin::Fresh { constraint } => match &source.constraints[*constraint] {
                    SugaredConstraint::LeConst { value, .. } | SugaredConstraint::GeConst { value, .. } => {
                        ExtValue::Finite(value.clone())
                    }
                    _ => unreachable!("fresh variable for a non-constant constraint"),
                },
            })
            .collect()
    }

    /// The source-variable part of an assignment to the normalized instance.
    pub fn restrict(&self, a: &[ExtValue]) -> Assignment {
        self.origin
            .iter()
            .zip(a)
            .filter(|(o, _)| matches!(o, VarOrigin::Source(_)))
            .map(|(_, v)| v.clone())
            .collect()
    }
}

/// Rewrites sugar into the three base forms. Source variables keep their
/// indices; fresh ones follow in order of the constraints that need them.
pub fn normalize(inst: &SugaredInstance) -> Normalized {
    let mut origin: Vec<VarOrigin> = (0..inst.vars).map(VarOrigin::Source).collect();
    let mut out = Vec::with_capacity(inst.constraints.len());
    for (ci, c) in inst.constraints.iter().enumerate() {
        if let Some(b) = c.base() {
            out.push(b);
            continue;
        }
        match c {
            SugaredConstraint::MinLe { lhs, rhs } => {
                out.extend(rhs.iter().map(|&r| Constraint::MaxLe {
                    lhs: *lhs,
                    rhs: vec![r],
                }));
            }
            SugaredConstraint::LeConst { var, value } | SugaredConstraint::GeConst { var, value } => {
                let y = origin.len();
                origin.push(VarOrigin::Fresh { constraint: ci });
                out.push(Constraint::Const {
                    var: y,
                    value: value.clone(),
                });
                out.push(if matches!(c, SugaredConstraint::LeConst { .. }) {
                    Constraint::MaxLe { lhs: *var, rhs: vec![y] }
                } else {
                    Constraint::MaxLe { lhs: y, rhs: vec![*var] }
                });
            }
            _ => unreachable!(),
        }
    }
    Normalized {
        instance: MaxAvgInstance {
            vars: origin.len(),
            constraints: out,
        },
        origin,
    }
}

/// True iff every constraint holds. An assignment of the wrong length
/// satisfies nothing.
pub fn check_assignment(inst: &MaxAvgInstance, a: &[ExtValue]) -> bool {
    a.len() == inst.vars && inst.constraints.iter().all(|c| c.holds(a))
}

/// Indices of the constraints `a` violates.
pub fn violated(inst: &MaxAvgInstance, a: &[ExtValue]) -> Vec<usize> {
    assert_eq!(a.len(), inst.vars, "assignment length");
    (0..inst.constraints.len()).filter(|&i| !inst.constraints[i].holds(a)).collect()
}

pub fn parse_maxavg(text: &str) -> Result<SugaredInstance> {
    let mut declared = None;
    let mut constraints = Vec::new();
    let mut max_var = None::<usize>;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let tok: Vec<&str> = l.split_whitespace().collect();
        let idx = |t: &str| -> Result<usize> {
            t.parse()
                .map_err(|_| Error::syntax(line, format!("bad variable index `{t}`")))
        };
        let val = |t: &str| -> Result<Rational> {
            parse_rational(t).ok_or_else(|| Error::syntax(line, format!("bad rational `{t}`")))
        };
        let want = |n: usize| -> Result<()> {
            if tok.len() == n {
                Ok(())
            } else {
                Err(Error::syntax(line, format!("`{}` takes {} operands", tok[0], n - 1)))
            }
        };
        let keyword = tok[0].to_ascii_uppercase();
        let c = match keyword.as_str() {
            "MAXAVG" => {
                if declared.is_some() || !constraints.is_empty() {
                    return Err(Error::syntax(line, "header must come first"));
                }
                want(2)?;
                declared = Some(idx(tok[1])?);
                continue;
            }
            "LEMAX" | "LEMIN" => {
                if tok.len() < 2 {
                    return Err(Error::syntax(line, "missing left-hand variable"));
                }
                let lhs = idx(tok[1])?;
                let rhs = tok[2..].iter().map(|t| idx(t)).collect::<Result<Vec<_>>>()?;
                if keyword == "LEMAX" {
                    SugaredConstraint::MaxLe { lhs, rhs }
                } else {
                    SugaredConstraint::MinLe { lhs, rhs }
                }
            }
            "LEAVG" => {
                want(4)?;
                SugaredConstraint::AvgLe {
                    lhs: idx(tok[1])?,
                    a: idx(tok[2])?,
                    b: idx(tok[3])?,
                }
            }
            "CONST" | "LECONST" | "GECONST" => {
                want(3)?;
                let var = idx(tok[1])?;
                let value = val(tok[2])?;
                match keyword.as_str() {
                    "CONST" => SugaredConstraint::Const { var, value },
                    "LECONST" => SugaredConstraint::LeConst { var, value },
                    _ => SugaredConstraint::GeConst { var, value },
                }
            }
            other => return Err(Error::syntax(line, format!("unknown constraint `{other}`"))),
        };
        if let Some(m) = c.vars().into_iter().max() {
            if let Some(n) = declared {
                if m >= n {
                    return Err(Error::syntax(line, format!("variable {m} out of range for {n} variables")));
                }
            }
            max_var = Some(max_var.map_or(m, |x| x.max(m)));
        }
        constraints.push(c);
    }
    let vars = declared.unwrap_or_else(|| max_var.map_or(0, |m| m + 1));
    SugaredInstance::new(vars, constraints)
}

/// Parses text and requires it to use only the base forms.
pub fn parse_normal(text: &str) -> Result<MaxAvgInstance> {
    let s = parse_maxavg(text)?;
    if !s.is_normal() {
        return Err(Error::InvalidInstance("instance uses sugar; normalize it first".into()));
    }
    Ok(normalize(&s).instance)
}
