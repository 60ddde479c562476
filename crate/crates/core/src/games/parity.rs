//! Parity games in the pgsolver text format and a recursive
//! attractor-decomposition solver used as an independent oracle.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParityOwner {
    Even,
    Odd,
}

impl ParityOwner {
    pub fn of_priority(p: u32) -> Self {
        if p % 2 == 0 {
            ParityOwner::Even
        } else {
            ParityOwner::Odd
        }
    }

    pub fn opponent(self) -> Self {
        match self {
            ParityOwner::Even => ParityOwner::Odd,
            ParityOwner::Odd => ParityOwner::Even,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityGame {
    pub owner: Vec<ParityOwner>,
    pub priority: Vec<u32>,
    pub succ: Vec<Vec<NodeId>>,
    pub labels: Vec<Option<String>>,
    /// Identifier each node carried in the source text.
    pub source_ids: Vec<u64>,
}

impl ParityGame {
    pub fn new(owner: Vec<ParityOwner>, priority: Vec<u32>, succ: Vec<Vec<NodeId>>) -> Result<Self> {
        let n = owner.len();
        if priority.len() != n || succ.len() != n {
            return Err(Error::InvalidGame("field lengths differ".into()));
        }
        for (u, s) in succ.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::NoSuccessors(u.to_string()));
            }
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(Error::DanglingSuccessor {
                    node: u.to_string(),
                    succ: v.to_string(),
                });
            }
        }
        Ok(ParityGame {
            owner,
            priority,
            succ,
            labels: vec![None; n],
            source_ids: (0..n as u64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn max_priority(&self) -> u32 {
        self.priority.iter().copied().max().unwrap_or(0)
    }

    /// Dense index of the node written as `id` in the source text.
    pub fn node_of_source_id(&self, id: u64) -> Option<NodeId> {
        self.source_ids.iter().position(|&s| s == id)
    }

    /// pgsolver text using dense ids.
    pub fn to_pgsolver(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "parity {};", self.len().saturating_sub(1));
        for u in 0..self.len() {
            let owner = match self.owner[u] {
                ParityOwner::Even => 0,
                ParityOwner::Odd => 1,
            };
            let succ: Vec<String> = self.succ[u].iter().map(ToString::to_string).collect();
            let _ = write!(out, "{u} {} {owner} {}", self.priority[u], succ.join(","));
            if let Some(label) = &self.labels[u] {
                let _ = write!(out, " \"{}\"", label.replace('"', "'"));
            }
            out.push_str(";\n");
        }
        out
    }
}

/// Splits on `;`, keeping the line each statement starts on and ignoring
/// `;` inside quoted names.
fn statements(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = None;
    let mut line = 1;
    let mut quoted = false;
    for ch in text.chars() {
        if ch == '"' {
            quoted = !quoted;
        }
        if ch == ';' && !quoted {
            out.push((start.unwrap_or(line), std::mem::take(&mut cur)));
            start = None;
        } else {
            if start.is_none() && !ch.is_whitespace() {
                start = Some(line);
            }
            cur.push(ch);
        }
        if ch == '\n' {
            line += 1;
        }
    }
    if !cur.trim().is_empty() {
        out.push((start.unwrap_or(line), cur));
    }
    out
}

/// Parses `parity N; id priority owner succ,succ,... ["name"]; ...`.
///
/// Node ids may be sparse; they are renumbered densely in order of
/// appearance and the originals kept in `source_ids`. A `start` statement is
/// accepted and ignored.
pub fn parse_pgsolver(text: &str) -> Result<ParityGame> {
    let stmts = statements(text);
    let mut iter = stmts.into_iter().filter(|(_, s)| !s.trim().is_empty());
    let (hline, header) = iter.next().ok_or_else(|| Error::syntax(1, "empty input"))?;
    let mut htok = header.split_whitespace();
    if htok.next() != Some("parity") {
        return Err(Error::syntax(hline, "expected `parity <N>` header"));
    }
    let declared: u64 = htok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::syntax(hline, "header needs a node bound"))?;
    if htok.next().is_some() {
        return Err(Error::syntax(hline, "trailing tokens after header"));
    }

    struct Raw {
        line: usize,
        id: u64,
        priority: u32,
        owner: ParityOwner,
        succ: Vec<u64>,
        label: Option<String>,
    }
    let mut raws = Vec::new();
    for (line, stmt) in iter {
        let stmt = stmt.trim();
        if stmt.starts_with("start") {
            continue;
        }
        let (body, label) = match stmt.find('"') {
            Some(q) => {
                let rest = &stmt[q + 1..];
                let end = rest
                    .find('"')
                    .ok_or_else(|| Error::syntax(line, "unterminated node name"))?;
                (&stmt[..q], Some(rest[..end].to_string()))
            }
            None => (stmt, None),
        };
        let tok: Vec<&str> = body.split_whitespace().collect();
        if !(3..=4).contains(&tok.len()) {
            return Err(Error::syntax(
                line,
                format!("expected `id priority owner successors`, found {} fields", tok.len()),
            ));
        }
        let num = |t: &str, what: &str| -> Result<u64> {
            t.parse()
                .map_err(|_| Error::syntax(line, format!("bad {what} `{t}`")))
        };
        let id = num(tok[0], "node id")?;
        if id > declared {
            return Err(Error::syntax(line, format!("node id {id} exceeds declared bound {declared}")));
        }
        let priority = u32::try_from(num(tok[1], "priority")?)
            .map_err(|_| Error::syntax(line, "priority too large"))?;
        let owner = match tok[2] {
            "0" => ParityOwner::Even,
            "1" => ParityOwner::Odd,
            t => return Err(Error::syntax(line, format!("owner must be 0 or 1, found `{t}`"))),
        };
        let succ = tok
            .get(3)
            .copied()
            .unwrap_or("")
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| num(s, "successor"))
            .collect::<Result<Vec<_>>>()?;
        raws.push(Raw {
            line,
            id,
            priority,
            owner,
            succ,
            label,
        });
    }

    let mut index: HashMap<u64, NodeId> = HashMap::new();
    for (i, r) in raws.iter().enumerate() {
        if index.insert(r.id, i).is_some() {
            return Err(Error::syntax(r.line, format!("node {} defined twice", r.id)));
        }
    }
    let mut succ = Vec::with_capacity(raws.len());
    for r in &raws {
        if r.succ.is_empty() {
            return Err(Error::NoSuccessors(r.id.to_string()));
        }
        let mut s = Vec::with_capacity(r.succ.len());
        for v in &r.succ {
            let &dv = index.get(v).ok_or_else(|| Error::DanglingSuccessor {
                node: r.id.to_string(),
                succ: v.to_string(),
            })?;
            if !s.contains(&dv) {
                s.push(dv);
            }
        }
        succ.push(s);
    }
    Ok(ParityGame {
        owner: raws.iter().map(|r| r.owner).collect(),
        priority: raws.iter().map(|r| r.priority).collect(),
        succ,
        labels: raws.iter().map(|r| r.label.clone()).collect(),
        source_ids: raws.iter().map(|r| r.id).collect(),
    })
}

/// Winner at every node (the highest priority seen infinitely often decides:
/// even for Even). Recursive attractor decomposition.
pub fn solve_zielonka(g: &ParityGame) -> Vec<ParityOwner> {
    let all: BTreeSet<NodeId> = (0..g.len()).collect();
    let (even, _odd) = zielonka(g, &all);
    (0..g.len())
        .map(|u| {
            if even.contains(&u) {
                ParityOwner::Even
            } else {
                ParityOwner::Odd
            }
        })
        .collect()
}

fn attractor(g: &ParityGame, arena: &BTreeSet<NodeId>, player: ParityOwner, target: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let mut attr: BTreeSet<NodeId> = target.clone();
    loop {
        let added: Vec<NodeId> = arena
            .iter()
            .copied()
            .filter(|u| !attr.contains(u))
            .filter(|&u| {
                let mut moves = g.succ[u].iter().filter(|v| arena.contains(v));
                if g.owner[u] == player {
                    moves.any(|v| attr.contains(v))
                } else {
                    moves.all(|v| attr.contains(v))
                }
            })
            .collect();
        if added.is_empty() {
            return attr;
        }
        attr.extend(added);
    }
}

fn zielonka(g: &ParityGame, arena: &BTreeSet<NodeId>) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    if arena.is_empty() {
        return (BTreeSet::new(), BTreeSet::new());
    }
    let d = arena.iter().map(|&u| g.priority[u]).max().unwrap();
    let player = ParityOwner::of_priority(d);
    let top: BTreeSet<NodeId> = arena.iter().copied().filter(|&u| g.priority[u] == d).collect();
    let a = attractor(g, arena, player, &top);
    let rest: BTreeSet<NodeId> = arena.difference(&a).copied().collect();
    let (w_even, w_odd) = zielonka(g, &rest);
    let (w_player, w_opp) = match player {
        ParityOwner::Even => (w_even, w_odd),
        ParityOwner::Odd => (w_odd, w_even),
    };
    let _ = w_player;
    let (win_player, win_opp) = if w_opp.is_empty() {
        (arena.clone(), BTreeSet::new())
    } else {
        let b = attractor(g, arena, player.opponent(), &w_opp);
        let rest: BTreeSet<NodeId> = arena.difference(&b).copied().collect();
        let (e2, o2) = zielonka(g, &rest);
        let (p2, mut opp2) = match player {
            ParityOwner::Even => (e2, o2),
            ParityOwner::Odd => (o2, e2),
        };
        opp2.extend(b);
        (p2, opp2)
    };
    match player {
        ParityOwner::Even => (win_player, win_opp),
        ParityOwner::Odd => (win_opp, win_player),
    }
}
