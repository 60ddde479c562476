//! SDPA sparse and JSON serializations.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{parse_rational, Rational};

use super::{SdpInstance, JSON_SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmitOptions {
    /// Bundle all 1x1 blocks into one trailing diagonal block.
    pub diag_pack: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { diag_pack: true }
    }
}

/// Exact decimal rendering of a dyadic rational; integers keep a `.0`.
pub fn render_decimal(r: &Rational) -> Result<String> {
    let den = r.denom();
    let twos = den.trailing_zeros().unwrap_or(0);
    if den.magnitude().count_ones() != 1 {
        return Err(Error::NotDyadic(crate::rational::format_rational(r)));
    }
    let num = r.numer();
    let sign = if num.is_negative() { "-" } else { "" };
    let scaled = num.abs() * num_traits::pow(BigInt::from(5), twos as usize);
    let digits = twos as usize;
    let ten = num_traits::pow(BigInt::from(10), digits);
    let (int_part, frac) = scaled.div_rem(&ten);
    if frac.is_zero() {
        return Ok(format!("{sign}{int_part}.0"));
    }
    let frac = format!("{:0>width$}", frac.to_string(), width = digits);
    Ok(format!("{sign}{int_part}.{}", frac.trim_end_matches('0')))
}

/// SDPA sparse format, `sum_i x_i F_i - F_0 >= 0` with a zero objective.
pub fn emit_sdpa(inst: &SdpInstance, opts: EmitOptions) -> Result<String> {
    // (sdpa block number, row offset) for every instance block
    let mut placement = vec![(0usize, 0usize); inst.blocks.len()];
    let mut sizes: Vec<i64> = Vec::new();
    let packed: Vec<usize> = if opts.diag_pack {
        (0..inst.blocks.len()).filter(|&b| inst.blocks[b].dim == 1).collect()
    } else {
        Vec::new()
    };
    for (b, blk) in inst.blocks.iter().enumerate() {
        if opts.diag_pack && blk.dim == 1 {
            continue;
        }
        sizes.push(blk.dim as i64);
        placement[b] = (sizes.len(), 0);
    }
    if !packed.is_empty() {
        sizes.push(-(packed.len() as i64));
        let no = sizes.len();
        for (pos, &b) in packed.iter().enumerate() {
            placement[b] = (no, pos);
        }
    }

    let mut lines: Vec<((usize, usize, usize, bool, usize), String)> = Vec::new();
    for (b, blk) in inst.blocks.iter().enumerate() {
        let (no, off) = placement[b];
        for (name, m) in &blk.terms {
            let matno = inst
                .var_index(name)
                .ok_or_else(|| Error::InvalidInstance(format!("unregistered variable {name}")))?
                + 1;
            for (i, j, v) in m.entries() {
                let (i, j) = (i + off + 1, j + off + 1);
                lines.push(((no, i, j, false, matno), format!("{matno} {no} {i} {j} {}", render_decimal(v)?)));
            }
        }
        for (i, j, v) in blk.constant.entries() {
            let (i, j) = (i + off + 1, j + off + 1);
            lines.push(((no, i, j, true, 0), format!("0 {no} {i} {j} {}", render_decimal(v)?)));
        }
    }
    lines.sort_by(|a, b| a.0.cmp(&b.0));

    let mut out = String::new();
    let meta = serde_json::to_string(&inst.metadata).expect("metadata serializes");
    writeln!(out, "* tropic2sdp {meta}").unwrap();
    writeln!(out, "{}", inst.vars.len()).unwrap();
    writeln!(out, "{}", sizes.len()).unwrap();
    writeln!(out, "{}", sizes.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "{}", vec!["0"; inst.vars.len()].join(" ")).unwrap();
    for (_, l) in lines {
        out.push_str(&l);
        out.push('\n');
    }
    Ok(out)
}

/// Structural content of an SDPA sparse file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpaFile {
    pub comments: Vec<String>,
    pub vars: usize,
    pub block_sizes: Vec<i64>,
    pub objective: Vec<Rational>,
    /// `(matno, block, i, j, value)`.
    pub entries: Vec<(usize, usize, usize, usize, Rational)>,
}

pub fn parse_sdpa(text: &str) -> Result<SdpaFile> {
    let mut comments = Vec::new();
    let mut tokens: Vec<(usize, String)> = Vec::new();
    let mut in_header = true;
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim();
        if in_header && (t.starts_with('*') || t.starts_with('"')) {
            comments.push(t.to_string());
            continue;
        }
        in_header = false;
        for tok in t.split(|c: char| c.is_whitespace() || "{}(),".contains(c)) {
            if !tok.is_empty() {
                tokens.push((ln + 1, tok.to_string()));
            }
        }
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| Error::syntax(0, format!("unexpected end of file, expected {what}")));
    fn num<T: std::str::FromStr>(tok: (usize, String), what: &str) -> Result<T> {
        tok.1.parse().map_err(|_| Error::syntax(tok.0, format!("bad {what} {:?}", tok.1)))
    }
    fn value(tok: (usize, String)) -> Result<Rational> {
        parse_rational(&tok.1)
            .or_else(|| parse_decimal(&tok.1))
            .ok_or_else(|| Error::syntax(tok.0, format!("bad number {:?}", tok.1)))
    }
    let vars: usize = num(next("variable count")?, "variable count")?;
    let nblocks: usize = num(next("block count")?, "block count")?;
    let mut block_sizes: Vec<i64> = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        block_sizes.push(num(next("block size")?, "block size")?);
    }
    let mut objective = Vec::with_capacity(vars);
    for _ in 0..vars {
        objective.push(value(next("objective entry")?)?);
    }
    let mut entries = Vec::new();
    while let Some(first) = it.next() {
        let line = first.0;
        let mut field = |what: &str| it.next().ok_or_else(|| Error::syntax(line, format!("truncated entry, missing {what}")));
        let matno: usize = num(first, "matrix number")?;
        let block: usize = num(field("block")?, "block")?;
        let i: usize = num(field("row")?, "row")?;
        let j: usize = num(field("column")?, "column")?;
        let v = value(field("value")?)?;
        if matno > vars || block == 0 || block > nblocks {
            return Err(Error::syntax(line, "entry refers to a missing matrix or block"));
        }
        let size = block_sizes[block - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > size || j > size || (block_sizes[block - 1] < 0 && i != j) {
            return Err(Error::syntax(line, format!("entry ({i}, {j}) outside block {block}")));
        }
        entries.push((matno, block, i, j, v));
    }
    Ok(SdpaFile {
        comments,
        vars,
        block_sizes,
        objective,
        entries,
    })
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{ip}{fp}").parse().ok()?;
    let r = Rational::new(digits, num_traits::pow(BigInt::from(10), fp.len()));
    Some(if neg { -r } else { r })
}

#[derive(serde::Serialize, serde::Deserialize)]
struct JsonDoc {
    schema: String,
    #[serde(flatten)]
    instance: SdpInstance,
}

pub fn emit_json(inst: &SdpInstance) -> String {
    let doc = JsonDoc {
        schema: JSON_SCHEMA.to_string(),
        instance: inst.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("instance serializes")
}

pub fn parse_json(text: &str) -> Result<SdpInstance> {
    let doc: JsonDoc =
        serde_json::from_str(text).map_err(|e| Error::syntax(e.line(), format!("bad instance JSON: {e}")))?;
    if doc.schema != JSON_SCHEMA {
        return Err(Error::InvalidInstance(format!("unknown schema {:?}", doc.schema)));
    }
    let mut inst = SdpInstance::new(doc.instance.vars, doc.instance.blocks)?;
    inst.metadata = doc.instance.metadata;
    Ok(inst)
}
