//! Spectrahedral shadow pinning a variable to `2^n`.
//!
//! With signed binary digits `b_0 .. b_k` of `n` (most significant first),
//! the blocks `[[x_0, 1], [1, 2^-b_0]]` and `[[x_l, x_{l-1}], [x_{l-1}, 2^-b_l]]`
//! force `x_0 >= 2^b_0` and `x_l >= 2^b_l x_{l-1}^2`, hence `x_k >= 2^n`.
//! The upper bound comes from SDP duality: the dual constraints plus the link
//! `x_k = <B, Y>` cap `x_k` at the primal optimum `2^n`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::dyadic::DyadicValue;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::sdpcore::{frobenius_dyadic, psd_exact, SdpInstance, SdpVar, SparseSym, SymBlock, VarKind};

/// Signed binary digits of a nonzero integer, most significant first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedBits {
    pub sign: i8,
    pub bits: Vec<i8>,
}

impl SignedBits {
    /// Index of the last digit.
    pub fn k(&self) -> usize {
        self.bits.len() - 1
    }

    pub fn value(&self) -> BigInt {
        self.bits
            .iter()
            .fold(BigInt::zero(), |acc, &b| acc * 2 + BigInt::from(b))
    }
}

pub fn signed_bits(n: &BigInt) -> Result<SignedBits> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("signed bits of 0 are undefined".into()));
    }
    let sign: i8 = if n.is_negative() { -1 } else { 1 };
    let mag = n.magnitude();
    let len = mag.bits();
    let bits = (0..len).rev().map(|i| if mag.bit(i) { sign } else { 0 }).collect();
    Ok(SignedBits { sign, bits })
}

fn pow2_rational(e: i8) -> Rational {
    match e {
        1 => Rational::from_integer(2.into()),
        0 => Rational::one(),
        -1 => Rational::new(1.into(), 2.into()),
        _ => unreachable!("digits are in -1..=1"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pow2Gadget {
    pub n: BigInt,
    /// `None` for `n = 0`, whose gadget is the equation `x = 1`.
    pub bits: Option<SignedBits>,
}

/// Dual 2x2 block entries `(y11, y12, y22)`.
pub type DualBlock = [DyadicValue; 3];

pub fn build_pow2_gadget(n: &BigInt) -> Pow2Gadget {
    Pow2Gadget {
        n: n.clone(),
        bits: if n.is_zero() { None } else { Some(signed_bits(n).expect("nonzero")) },
    }
}

impl Pow2Gadget {
    pub fn primal_name(prefix: &str, l: usize) -> String {
        format!("{prefix}.x{l}")
    }

    pub fn dual_name(prefix: &str, l: usize, entry: &str) -> String {
        format!("{prefix}.y{l}_{entry}")
    }

    /// Number of primal variables `k + 1` (one for `n = 0`).
    pub fn len(&self) -> usize {
        self.bits.as_ref().map_or(1, |b| b.bits.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The variable that equals `2^n`.
    pub fn output(&self, prefix: &str) -> String {
        Self::primal_name(prefix, self.len() - 1)
    }

    /// Primal LMI blocks, `x_l` in the (1,1) slot and `x_{l-1}` off the diagonal.
    pub fn primal_blocks(&self, prefix: &str) -> Vec<SymBlock> {
        let Some(sb) = &self.bits else {
            return Vec::new();
        };
        let one = Rational::one();
        sb.bits
            .iter()
            .enumerate()
            .map(|(l, &b)| {
                let mut blk = SymBlock::new(format!("{prefix} primal {l}"), 2);
                blk.add_term(&Self::primal_name(prefix, l), 0, 0, &one).unwrap();
                if l == 0 {
                    blk.add_constant(0, 1, &-one.clone()).unwrap();
                } else {
                    blk.add_term(&Self::primal_name(prefix, l - 1), 0, 1, &one).unwrap();
                }
                blk.add_constant(1, 1, &-pow2_rational(-b)).unwrap();
                blk
            })
            .collect()
    }

    /// `Y^l = [[y11, y12], [y12, y22]]` must be PSD.
    pub fn dual_psd_blocks(&self, prefix: &str) -> Vec<SymBlock> {
        let one = Rational::one();
        (0..self.bits.as_ref().map_or(0, |b| b.bits.len()))
            .map(|l| {
                let mut blk = SymBlock::new(format!("{prefix} dual {l}"), 2);
                blk.add_term(&Self::dual_name(prefix, l, "11"), 0, 0, &one).unwrap();
                blk.add_term(&Self::dual_name(prefix, l, "12"), 0, 1, &one).unwrap();
                blk.add_term(&Self::dual_name(prefix, l, "22"), 1, 1, &one).unwrap();
                blk
            })
            .collect()
    }

    /// Dual equalities `<A_i, Y> = c_i` and the link `x_k = <B, Y>`, each as
    /// `(label, terms, rhs)`. The coefficients are read off the primal blocks.
    pub fn equalities(&self, prefix: &str) -> Vec<(String, Vec<(String, Rational)>, Rational)> {
        let Some(sb) = &self.bits else {
            return vec![(
                format!("{prefix} unit"),
                vec![(Self::primal_name(prefix, 0), Rational::one())],
                Rational::one(),
            )];
        };
        let primal = self.primal_blocks(prefix);
        let k = sb.k();
        let mut out = Vec::new();
        for i in 0..=k {
            let xi = Self::primal_name(prefix, i);
            let mut terms = BTreeMap::new();
            for (l, blk) in primal.iter().enumerate() {
                if let Some(a) = blk.terms.get(&xi) {
                    for (entry, name) in pairing_terms(a, prefix, l) {
                        *terms.entry(name).or_insert_with(Rational::zero) += entry;
                    }
                }
            }
            let rhs = if i == k { Rational::one() } else { Rational::zero() };
            out.push((format!("{prefix} dual-eq {i}"), terms.into_iter().collect(), rhs));
        }
        // x_k - <B, Y> = 0
        let mut link = BTreeMap::new();
        link.insert(Self::primal_name(prefix, k), Rational::one());
        for (l, blk) in primal.iter().enumerate() {
            for (entry, name) in pairing_terms(&blk.constant, prefix, l) {
                *link.entry(name).or_insert_with(Rational::zero) -= entry;
            }
        }
        out.push((format!("{prefix} link"), link.into_iter().collect(), Rational::zero()));
        out
    }

    /// Every block of the gadget: primal LMIs, dual PSD blocks and the
    /// equalities as opposed 1x1 pairs.
    pub fn to_instance(&self, prefix: &str) -> SdpInstance {
        let mut blocks = self.primal_blocks(prefix);
        blocks.extend(self.dual_psd_blocks(prefix));
        for (label, terms, rhs) in self.equalities(prefix) {
            let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (n.as_str(), c.clone())).collect();
            blocks.extend(SymBlock::equality(&label, &t, rhs));
        }
        let mut vars: Vec<SdpVar> = (0..self.len())
            .map(|l| SdpVar {
                name: Self::primal_name(prefix, l),
                kind: VarKind::GadgetPrimal,
            })
            .collect();
        if self.bits.is_some() {
            for l in 0..self.len() {
                for e in ["11", "12", "22"] {
                    vars.push(SdpVar {
                        name: Self::dual_name(prefix, l, e),
                        kind: VarKind::GadgetDual,
                    });
                }
            }
        }
        SdpInstance::new(vars, blocks).expect("gadget blocks are well formed")
    }

    /// Primal and dual witness values keyed by variable name.
    pub fn witness(&self, prefix: &str) -> BTreeMap<String, DyadicValue> {
        let mut out = BTreeMap::new();
        if self.bits.is_none() {
            out.insert(Self::primal_name(prefix, 0), DyadicValue::one());
            return out;
        }
        for (l, x) in primal_witness(&self.n).into_iter().enumerate() {
            out.insert(Self::primal_name(prefix, l), x);
        }
        for (l, y) in dual_witness(&self.n).into_iter().enumerate() {
            for (e, v) in ["11", "12", "22"].into_iter().zip(y) {
                out.insert(Self::dual_name(prefix, l, e), v);
            }
        }
        out
    }
}

/// `<S, Y^l>` as a linear form in the dual variables of block `l`.
fn pairing_terms(s: &SparseSym, prefix: &str, l: usize) -> Vec<(Rational, String)> {
    s.entries()
        .map(|(i, j, v)| {
            let (name, mult) = match (i, j) {
                (0, 0) => ("11", 1),
                (0, 1) => ("12", 2),
                (1, 1) => ("22", 1),
                _ => unreachable!("gadget blocks are 2x2"),
            };
            (v * Rational::from_integer(mult.into()), Pow2Gadget::dual_name(prefix, l, name))
        })
        .collect()
}

/// Exponents `e_l = 2 e_{l-1} + b_l` of the primal witness.
fn primal_exponents(sb: &SignedBits) -> Vec<BigInt> {
    let mut e = BigInt::zero();
    sb.bits
        .iter()
        .map(|&b| {
            e = &e * 2 + BigInt::from(b);
            e.clone()
        })
        .collect()
}

/// `x_l = 2^(e_l)`, tight in every primal block.
pub fn primal_witness(n: &BigInt) -> Vec<DyadicValue> {
    let sb = signed_bits(n).expect("primal witness needs n != 0");
    let es = primal_exponents(&sb);
    assert_eq!(es.last(), Some(n));
    es.into_iter().map(DyadicValue::pow2).collect()
}

/// Rank-one blocks `a_l [[1, -v_l], [-v_l, v_l^2]]` where `(1, -v_l)` spans
/// the kernel of primal block `l` at the witness: `v_0 = x_0`,
/// `v_l = x_l / x_{l-1}`. The scales satisfy `a_k = 1` and
/// `a_l = 2 a_{l+1} v_{l+1}`.
pub fn dual_witness(n: &BigInt) -> Vec<DualBlock> {
    let sb = signed_bits(n).expect("dual witness needs n != 0");
    let es = primal_exponents(&sb);
    // log2 of v_l
    let vs: Vec<BigInt> = (0..es.len())
        .map(|l| if l == 0 { es[0].clone() } else { &es[l] - &es[l - 1] })
        .collect();
    let k = es.len() - 1;
    let mut alphas = vec![BigInt::zero(); k + 1];
    for l in (0..k).rev() {
        alphas[l] = &alphas[l + 1] + 1 + &vs[l + 1];
    }
    (0..=k)
        .map(|l| {
            let a = &alphas[l];
            let v = &vs[l];
            [
                DyadicValue::pow2(a.clone()),
                -DyadicValue::pow2(a + v),
                DyadicValue::pow2(a + v * 2),
            ]
        })
        .collect()
}

/// Exact certificate checks for a gadget: primal blocks PSD at the primal
/// witness, dual blocks PSD, dual equalities satisfied, and `<B, Y> = 2^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetCheck {
    pub primal_psd: bool,
    pub dual_psd: bool,
    pub dual_equalities: bool,
    pub pairing_is_pow2: bool,
}

impl GadgetCheck {
    pub fn all(&self) -> bool {
        self.primal_psd && self.dual_psd && self.dual_equalities && self.pairing_is_pow2
    }
}

/// Verifies the witnesses of `gadget(n)` against the blocks by direct
/// evaluation, independently of the equality encoding in [`Pow2Gadget::to_instance`].
pub fn check_gadget_witnesses(n: &BigInt) -> Result<GadgetCheck> {
    let g = build_pow2_gadget(n);
    if n.is_zero() {
        return Ok(GadgetCheck {
            primal_psd: true,
            dual_psd: true,
            dual_equalities: true,
            pairing_is_pow2: true,
        });
    }
    let p = "g";
    let w = g.witness(p);
    let primal = g.primal_blocks(p);
    let mut primal_psd = true;
    for b in &primal {
        primal_psd &= psd_exact(&b.evaluate(&w)?)?;
    }
    let ys: Vec<Vec<Vec<DyadicValue>>> = dual_witness(n)
        .into_iter()
        .map(|[a, b, c]| vec![vec![a, b.clone()], vec![b, c]])
        .collect();
    let mut dual_psd = true;
    for y in &ys {
        dual_psd &= psd_exact(y)?;
    }
    // <A_i, Y> summed over blocks for each primal variable
    let k = g.len() - 1;
    let mut dual_equalities = true;
    for i in 0..=k {
        let xi = Pow2Gadget::primal_name(p, i);
        let mut acc = DyadicValue::zero();
        for (l, b) in primal.iter().enumerate() {
            if let Some(a) = b.terms.get(&xi) {
                acc = &acc + &frobenius_dyadic(a, &ys[l])?;
            }
        }
        let want = if i == k { DyadicValue::one() } else { DyadicValue::zero() };
        dual_equalities &= acc == want;
    }
    let mut pairing = DyadicValue::zero();
    for (l, b) in primal.iter().enumerate() {
        pairing = &pairing + &frobenius_dyadic(&b.constant, &ys[l])?;
    }
    Ok(GadgetCheck {
        primal_psd,
        dual_psd,
        dual_equalities,
        pairing_is_pow2: pairing == DyadicValue::pow2(n.clone()),
    })
}
