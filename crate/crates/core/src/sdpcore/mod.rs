//! Block-diagonal linear matrix inequalities over named variables.
//!
//! A [`SymBlock`] is the affine pencil `sum_v x_v A_v - B` that must be PSD.
//! An [`SdpInstance`] is a conjunction of blocks plus a variable registry.

pub mod assemble;
pub mod emit;
pub mod psd;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicValue;
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

pub use assemble::{assemble, build_gadgets, forward_witness, GadgetTable};
pub use emit::{emit_json, emit_sdpa, parse_json, parse_sdpa, EmitOptions, SdpaFile};
pub use psd::{psd_by_principal_minors, psd_exact, PsdScalar};

pub const JSON_SCHEMA: &str = "tropic2sdp/1";
pub const WITNESS_SCHEMA: &str = "tropic2sdp-witness/1";

/// Sparse symmetric matrix storing the upper triangle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SparseWire", try_from = "SparseWire")]
pub struct SparseSym {
    dim: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

#[derive(Serialize, Deserialize)]
struct SparseWire {
    dim: usize,
    entries: Vec<(usize, usize, String)>,
}

impl From<SparseSym> for SparseWire {
    fn from(s: SparseSym) -> Self {
        SparseWire {
            dim: s.dim,
            entries: s.entries.iter().map(|(&(i, j), v)| (i, j, format_rational(v))).collect(),
        }
    }
}

impl TryFrom<SparseWire> for SparseSym {
    type Error = Error;
    fn try_from(w: SparseWire) -> Result<Self> {
        let mut s = SparseSym::new(w.dim);
        for (i, j, v) in w.entries {
            let v = parse_rational(&v).ok_or_else(|| Error::InvalidInstance(format!("bad matrix entry {v:?}")))?;
            s.add(i, j, &v)?;
        }
        Ok(s)
    }
}

impl SparseSym {
    pub fn new(dim: usize) -> Self {
        SparseSym {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut s = Self::new(dim);
        for i in 0..dim {
            s.entries.insert((i, i), Rational::from_integer(1.into()));
        }
        s
    }

    pub fn from_dense(m: &[Vec<Rational>]) -> Result<Self> {
        let n = m.len();
        let mut s = Self::new(n);
        for i in 0..n {
            if m[i].len() != n {
                return Err(Error::InvalidArgument("matrix is not square".into()));
            }
            for j in 0..i {
                if m[i][j] != m[j][i] {
                    return Err(Error::InvalidArgument(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
            for j in i..n {
                if !m[i][j].is_zero() {
                    s.entries.insert((i, j), m[i][j].clone());
                }
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `v` at `(i, j)` and, by symmetry, at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: &Rational) -> Result<()> {
        if i >= self.dim || j >= self.dim {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside a {0}x{0} matrix", self.dim)));
        }
        let key = (i.min(j), i.max(j));
        let e = self.entries.entry(key).or_insert_with(Rational::zero);
        *e += v;
        if e.is_zero() {
            self.entries.remove(&key);
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.entries.get(&(i.min(j), i.max(j))).cloned().unwrap_or_else(Rational::zero)
    }

    /// Upper-triangle entries `(i, j, value)` with `i <= j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> Vec<Vec<Rational>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// `<S, T> = trace(S T) = sum_ij S_ij T_ij`.
pub fn frobenius(s: &SparseSym, t: &SparseSym) -> Result<Rational> {
    if s.dim != t.dim {
        return Err(Error::InvalidArgument(format!("dimension mismatch {} vs {}", s.dim, t.dim)));
    }
    let two = Rational::from_integer(2.into());
    let mut acc = Rational::zero();
    for (&(i, j), v) in &s.entries {
        if let Some(w) = t.entries.get(&(i, j)) {
            let p = v * w;
            acc += if i == j { p } else { p * &two };
        }
    }
    Ok(acc)
}

/// Frobenius pairing of a rational matrix with a dense dyadic one.
pub fn frobenius_dyadic(s: &SparseSym, t: &[Vec<DyadicValue>]) -> Result<DyadicValue> {
    if s.dim != t.len() {
        return Err(Error::InvalidArgument(format!("dimension mismatch {} vs {}", s.dim, t.len())));
    }
    let mut acc = DyadicValue::zero();
    for (i, j, v) in s.entries() {
        let c = DyadicValue::from_rational(v)?;
        let p = &c * &t[i][j];
        acc = &acc + &p;
        if i != j {
            acc = &acc + &(&c * &t[j][i]);
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarKind {
    Csp,
    GadgetPrimal,
    GadgetDual,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdpVar {
    pub name: String,
    pub kind: VarKind,
}

/// `sum_v x_v * terms[v] - constant` must be PSD.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymBlock {
    pub label: String,
    pub dim: usize,
    pub terms: BTreeMap<String, SparseSym>,
    pub constant: SparseSym,
}

impl SymBlock {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        SymBlock {
            label: label.into(),
            dim,
            terms: BTreeMap::new(),
            constant: SparseSym::new(dim),
        }
    }

    /// 1x1 block `sum c_v x_v - rhs >= 0`.
    pub fn scalar(label: impl Into<String>, terms: &[(&str, Rational)], rhs: Rational) -> Self {
        let mut b = Self::new(label, 1);
        for (name, c) in terms {
            b.add_term(name, 0, 0, c).expect("1x1 index");
        }
        b.add_constant(0, 0, &rhs).expect("1x1 index");
        b
    }

    /// `sum c_v x_v = rhs` as the pair `>= rhs` and `<= rhs`.
    pub fn equality(label: &str, terms: &[(&str, Rational)], rhs: Rational) -> [SymBlock; 2] {
        let neg: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, -c.clone())).collect();
        [
            Self::scalar(format!("{label} (+)"), terms, rhs.clone()),
            Self::scalar(format!("{label} (-)"), &neg, -rhs),
        ]
    }

    /// Adds `c` to the coefficient matrix of `name` at `(i, j)` and `(j, i)`.
    pub fn add_term(&mut self, name: &str, i: usize, j: usize, c: &Rational) -> Result<()> {
        let dim = self.dim;
        let m = self.terms.entry(name.to_string()).or_insert_with(|| SparseSym::new(dim));
        m.add(i, j, c)?;
        if m.is_zero() {
            self.terms.remove(name);
        }
        Ok(())
    }

    /// Adds `c` to the constant matrix `B` (which is subtracted).
    pub fn add_constant(&mut self, i: usize, j: usize, c: &Rational) -> Result<()> {
        self.constant.add(i, j, c)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn nnz(&self) -> usize {
        self.constant.nnz() + self.terms.values().map(SparseSym::nnz).sum::<usize>()
    }

    /// The pencil evaluated at `w`.
    pub fn evaluate(&self, w: &BTreeMap<String, DyadicValue>) -> Result<Vec<Vec<DyadicValue>>> {
        let mut m = vec![vec![DyadicValue::zero(); self.dim]; self.dim];
        for (i, j, v) in self.constant.entries() {
            let c = -DyadicValue::from_rational(v)?;
            m[i][j] = &m[i][j] + &c;
            if i != j {
                m[j][i] = &m[j][i] + &c;
            }
        }
        for (name, a) in &self.terms {
            let x = w
                .get(name)
                .ok_or_else(|| Error::WitnessMismatch(format!("no value for variable {name}")))?;
            for (i, j, v) in a.entries() {
                let p = &DyadicValue::from_rational(v)? * x;
                m[i][j] = &m[i][j] + &p;
                if i != j {
                    m[j][i] = &m[j][i] + &p;
                }
            }
        }
        Ok(m)
    }

    fn check_dims(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInstance(format!("block {:?} has dimension 0", self.label)));
        }
        if self.constant.dim != self.dim || self.terms.values().any(|m| m.dim != self.dim) {
            return Err(Error::InvalidInstance(format!("block {:?} mixes matrix dimensions", self.label)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdpInstance {
    pub vars: Vec<SdpVar>,
    pub blocks: Vec<SymBlock>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl SdpInstance {
    /// Validates that the registry has unique names, every block variable is
    /// registered, and every registered variable occurs in some block.
    pub fn new(vars: Vec<SdpVar>, blocks: Vec<SymBlock>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for v in &vars {
            if !names.insert(v.name.as_str()) {
                return Err(Error::InvalidInstance(format!("variable {} registered twice", v.name)));
            }
        }
        let mut used = BTreeSet::new();
        for b in &blocks {
            b.check_dims()?;
            for name in b.variables() {
                if !names.contains(name) {
                    return Err(Error::InvalidInstance(format!("block {:?} uses unregistered variable {name}", b.label)));
                }
                used.insert(name);
            }
        }
        if let Some(v) = vars.iter().find(|v| !used.contains(v.name.as_str())) {
            return Err(Error::InvalidInstance(format!("variable {} occurs in no block", v.name)));
        }
        Ok(SdpInstance {
            vars,
            blocks,
            metadata: BTreeMap::new(),
        })
    }

    /// Registers every variable of `blocks` with `kind`.
    pub fn from_blocks(blocks: Vec<SymBlock>, kind: VarKind) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut vars = Vec::new();
        for b in &blocks {
            for name in b.variables() {
                if seen.insert(name.to_string()) {
                    vars.push(SdpVar {
                        name: name.to_string(),
                        kind,
                    });
                }
            }
        }
        Self::new(vars, blocks)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Nonzero matrix entries over all blocks.
    pub fn size(&self) -> usize {
        self.blocks.iter().map(SymBlock::nnz).sum()
    }
}

/// Conjunction: blocks are concatenated and equal names denote the same
/// variable.
pub fn conjoin(parts: &[SdpInstance]) -> Result<SdpInstance> {
    let mut kinds: BTreeMap<&str, VarKind> = BTreeMap::new();
    let mut vars = Vec::new();
    let mut blocks = Vec::new();
    for p in parts {
        for v in &p.vars {
            match kinds.get(v.name.as_str()) {
                Some(&k) if k != v.kind => {
                    return Err(Error::InvalidInstance(format!(
                        "variable {} is {:?} in one part and {:?} in another",
                        v.name, k, v.kind
                    )))
                }
                Some(_) => {}
                None => {
                    kinds.insert(&v.name, v.kind);
                    vars.push(v.clone());
                }
            }
        }
        blocks.extend(p.blocks.iter().cloned());
    }
    let out = SdpInstance::new(vars, blocks)?;
    debug_assert!(out.size() <= parts.iter().map(SdpInstance::size).sum());
    Ok(out)
}

/// Exact values for every registered variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessAssignment {
    pub schema: String,
    pub values: BTreeMap<String, DyadicValue>,
}

impl WitnessAssignment {
    pub fn new(values: BTreeMap<String, DyadicValue>) -> Self {
        WitnessAssignment {
            schema: WITNESS_SCHEMA.to_string(),
            values,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: WitnessAssignment =
            serde_json::from_str(text).map_err(|e| Error::WitnessMismatch(format!("unreadable witness: {e}")))?;
        if w.schema != WITNESS_SCHEMA {
            return Err(Error::WitnessMismatch(format!("unknown witness schema {:?}", w.schema)));
        }
        Ok(w)
    }
}

fn check_total(inst: &SdpInstance, w: &WitnessAssignment) -> Result<()> {
    if let Some(v) = inst.vars.iter().find(|v| !w.values.contains_key(&v.name)) {
        return Err(Error::WitnessMismatch(format!("no value for variable {}", v.name)));
    }
    if let Some(name) = w.values.keys().find(|n| inst.var_index(n).is_none()) {
        return Err(Error::WitnessMismatch(format!("value for unknown variable {name}")));
    }
    Ok(())
}

/// Labels of the blocks that are not PSD at `w`, in block order.
pub fn witness_failures(inst: &SdpInstance, w: &WitnessAssignment) -> Result<Vec<String>> {
    check_total(inst, w)?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let chunk = inst.blocks.len().div_ceil(threads).max(16);
    let results: Vec<Result<Vec<String>>> = std::thread::scope(|s| {
        let handles: Vec<_> = inst
            .blocks
            .chunks(chunk)
            .map(|blocks| {
                s.spawn(move || {
                    let mut bad = Vec::new();
                    for b in blocks {
                        if !psd_exact(&b.evaluate(&w.values)?)? {
                            bad.push(b.label.clone());
                        }
                    }
                    Ok(bad)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("witness worker panicked")).collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub fn check_witness(inst: &SdpInstance, w: &WitnessAssignment) -> Result<bool> {
    Ok(witness_failures(inst, w)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn wit(pairs: &[(&str, DyadicValue)]) -> WitnessAssignment {
        WitnessAssignment::new(pairs.iter().map(|(n, v)| (n.to_string(), v.clone())).collect())
    }

    fn diag(d: &[i64]) -> SparseSym {
        SparseSym::from_dense(
            &(0..d.len())
                .map(|i| (0..d.len()).map(|j| if i == j { int(d[i]) } else { int(0) }).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius(&SparseSym::identity(2), &SparseSym::identity(2)).unwrap(), int(2));
        let swap = SparseSym::from_dense(&[vec![int(0), int(1)], vec![int(1), int(0)]]).unwrap();
        assert_eq!(frobenius(&swap, &swap).unwrap(), int(2));
        assert_eq!(frobenius(&diag(&[1, 2]), &diag(&[3, 4])).unwrap(), int(11));
        assert!(frobenius(&diag(&[1]), &diag(&[1, 2])).is_err());
    }

    #[test]
    fn frobenius_dyadic_matches_rational() {
        let s = SparseSym::from_dense(&[vec![int(1), int(-1)], vec![int(-1), int(2)]]).unwrap();
        let t = [
            vec![DyadicValue::from_int(3), DyadicValue::from_int(5)],
            vec![DyadicValue::from_int(5), DyadicValue::from_int(7)],
        ];
        assert_eq!(frobenius_dyadic(&s, &t).unwrap(), DyadicValue::from_int(3 - 10 + 14));
    }

    #[test]
    fn conjoin_empty_is_feasible() {
        let inst = conjoin(&[]).unwrap();
        assert!(inst.blocks.is_empty());
        assert!(check_witness(&inst, &wit(&[])).unwrap());
    }

    #[test]
    fn interval_by_conjunction() {
        let lo = SdpInstance::from_blocks(vec![SymBlock::scalar("x >= 0", &[("x", int(1))], int(0))], VarKind::Csp).unwrap();
        let hi = SdpInstance::from_blocks(vec![SymBlock::scalar("x <= 1", &[("x", int(-1))], int(-1))], VarKind::Csp).unwrap();
        let inst = conjoin(&[lo.clone(), hi.clone()]).unwrap();
        assert_eq!(inst.vars.len(), 1);
        assert!(inst.size() <= lo.size() + hi.size());
        for (v, ok) in [(DyadicValue::zero(), true), (DyadicValue::pow2(-1), true), (DyadicValue::one(), true)] {
            assert_eq!(check_witness(&inst, &wit(&[("x", v)])).unwrap(), ok);
        }
        assert_eq!(witness_failures(&inst, &wit(&[("x", DyadicValue::from_int(2))])).unwrap(), vec!["x <= 1"]);
        assert_eq!(witness_failures(&inst, &wit(&[("x", DyadicValue::from_int(-1))])).unwrap(), vec!["x >= 0"]);
    }

    #[test]
    fn kind_conflict() {
        let a = SdpInstance::from_blocks(vec![SymBlock::scalar("a", &[("x", int(1))], int(0))], VarKind::Csp).unwrap();
        let b = SdpInstance::from_blocks(vec![SymBlock::scalar("b", &[("x", int(1))], int(0))], VarKind::GadgetDual).unwrap();
        assert!(matches!(conjoin(&[a, b]), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn registry_validation() {
        let b = SymBlock::scalar("b", &[("x", int(1))], int(0));
        let var = |n: &str| SdpVar {
            name: n.into(),
            kind: VarKind::Csp,
        };
        assert!(SdpInstance::new(vec![], vec![b.clone()]).is_err());
        assert!(SdpInstance::new(vec![var("x"), var("y")], vec![b.clone()]).is_err());
        assert!(SdpInstance::new(vec![var("x"), var("x")], vec![b.clone()]).is_err());
        assert!(SdpInstance::new(vec![var("x")], vec![b]).is_ok());
    }

    #[test]
    fn witness_must_be_total_and_known() {
        let inst = SdpInstance::from_blocks(vec![SymBlock::scalar("b", &[("x", int(1))], int(0))], VarKind::Csp).unwrap();
        assert!(matches!(check_witness(&inst, &wit(&[])), Err(Error::WitnessMismatch(_))));
        let extra = wit(&[("x", DyadicValue::one()), ("y", DyadicValue::one())]);
        assert!(matches!(check_witness(&inst, &extra), Err(Error::WitnessMismatch(_))));
    }

    #[test]
    fn equality_pair() {
        let [ge, le] = SymBlock::equality("x = 2", &[("x", int(1))], int(2));
        let inst = SdpInstance::from_blocks(vec![ge, le], VarKind::Csp).unwrap();
        assert!(check_witness(&inst, &wit(&[("x", DyadicValue::from_int(2))])).unwrap());
        assert_eq!(
            witness_failures(&inst, &wit(&[("x", DyadicValue::from_int(3))])).unwrap(),
            vec!["x = 2 (-)"]
        );
    }

    #[test]
    fn cancelling_terms_are_dropped() {
        let mut b = SymBlock::new("b", 1);
        b.add_term("x", 0, 0, &int(1)).unwrap();
        b.add_term("x", 0, 0, &int(-1)).unwrap();
        assert_eq!(b.variables().count(), 0);
        assert!(b.add_term("x", 1, 0, &int(1)).is_err());
    }

    #[test]
    fn witness_json_round_trip() {
        let w = wit(&[("x0", DyadicValue::pow2(1000)), ("y", DyadicValue::from_parts(-3, -2))]);
        let back = WitnessAssignment::from_json(&w.to_json()).unwrap();
        assert_eq!(back, w);
        assert!(WitnessAssignment::from_json(r#"{"schema":"other","values":{}}"#).is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let mut b = SymBlock::new("blk", 2);
        b.add_term("x", 0, 0, &int(1)).unwrap();
        b.add_term("y", 0, 1, &crate::rational::rat(1, 2)).unwrap();
        b.add_constant(1, 1, &int(-2)).unwrap();
        let inst = SdpInstance::from_blocks(vec![b], VarKind::GadgetPrimal).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: SdpInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
    }
}
