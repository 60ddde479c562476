//! Stochastic mean payoff games, the parity encoding into them, and a
//! policy-enumeration oracle for the deterministic case.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

use super::parity::{ParityGame, ParityOwner};
use super::{all_policies, saddle, GameValue, NodeId, Policy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Min,
    Max,
    Rand,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: NodeId,
    pub weight: Rational,
    /// Transition probability; only meaningful at `Rand` nodes.
    pub prob: Option<Rational>,
}

impl Edge {
    pub fn new(to: NodeId, weight: Rational) -> Self {
        Edge {
            to,
            weight,
            prob: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochasticMeanPayoffGame {
    pub owner: Vec<Owner>,
    pub edges: Vec<Vec<Edge>>,
}

impl StochasticMeanPayoffGame {
    pub fn new(owner: Vec<Owner>, edges: Vec<Vec<Edge>>) -> Result<Self> {
        let g = StochasticMeanPayoffGame { owner, edges };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.owner.len();
        if self.edges.len() != n {
            return Err(Error::InvalidGame("owner and edge lists differ in length".into()));
        }
        for (u, out) in self.edges.iter().enumerate() {
            if out.is_empty() {
                return Err(Error::NoSuccessors(u.to_string()));
            }
            for e in out {
                if e.to >= n {
                    return Err(Error::DanglingSuccessor {
                        node: u.to_string(),
                        succ: e.to.to_string(),
                    });
                }
            }
            if self.owner[u] == Owner::Rand {
                let mut total = Rational::zero();
                for e in out {
                    let p = e.prob.as_ref().ok_or_else(|| {
                        Error::InvalidGame(format!("random node {u} has an edge without probability"))
                    })?;
                    if p.is_negative() {
                        return Err(Error::InvalidGame(format!("negative probability at node {u}")));
                    }
                    total += p;
                }
                if !total.is_one() {
                    return Err(Error::InvalidGame(format!(
                        "probabilities at node {u} sum to {}",
                        format_rational(&total)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        !self.owner.contains(&Owner::Rand)
    }

    /// Text form: header `mpg <n>`, then `id MAX|MIN|RAND to:weight[@prob] ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mpg {}", self.len());
        for (u, edges) in self.edges.iter().enumerate() {
            let kind = match self.owner[u] {
                Owner::Min => "MIN",
                Owner::Max => "MAX",
                Owner::Rand => "RAND",
            };
            let _ = write!(out, "{u} {kind}");
            for e in edges {
                let _ = write!(out, " {}:{}", e.to, format_rational(&e.weight));
                if let Some(p) = &e.prob {
                    let _ = write!(out, "@{}", format_rational(p));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_mpg(text: &str) -> Result<StochasticMeanPayoffGame> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::syntax(1, "empty input"))?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["mpg", n] => n
            .parse()
            .map_err(|_| Error::syntax(hline, format!("bad node count `{n}`")))?,
        _ => return Err(Error::syntax(hline, "expected `mpg <n>` header")),
    };
    let mut owner = vec![None; n];
    let mut edges = vec![Vec::new(); n];
    for (line, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() < 2 {
            return Err(Error::syntax(line, "expected `id KIND edges...`"));
        }
        let u: usize = tok[0]
            .parse()
            .map_err(|_| Error::syntax(line, format!("bad node id `{}`", tok[0])))?;
        if u >= n {
            return Err(Error::syntax(line, format!("node id {u} out of range")));
        }
        if owner[u].is_some() {
            return Err(Error::syntax(line, format!("node {u} defined twice")));
        }
        owner[u] = Some(match tok[1] {
            "MIN" => Owner::Min,
            "MAX" => Owner::Max,
            "RAND" => Owner::Rand,
            k => return Err(Error::syntax(line, format!("unknown node kind `{k}`"))),
        });
        for t in &tok[2..] {
            let (to, rest) = t
                .split_once(':')
                .ok_or_else(|| Error::syntax(line, format!("edge `{t}` needs `to:weight`")))?;
            let (w, p) = match rest.split_once('@') {
                Some((w, p)) => (w, Some(p)),
                None => (rest, None),
            };
            let to: usize = to
                .parse()
                .map_err(|_| Error::syntax(line, format!("bad successor `{to}`")))?;
            if to >= n {
                return Err(Error::DanglingSuccessor {
                    node: u.to_string(),
                    succ: to.to_string(),
                });
            }
            let weight = parse_rational(w).ok_or_else(|| Error::syntax(line, format!("bad weight `{w}`")))?;
            let prob = p
                .map(|p| parse_rational(p).ok_or_else(|| Error::syntax(line, format!("bad probability `{p}`"))))
                .transpose()?;
            edges[u].push(Edge { to, weight, prob });
        }
    }
    let owner = owner
        .into_iter()
        .enumerate()
        .map(|(u, o)| o.ok_or_else(|| Error::InvalidGame(format!("node {u} never defined"))))
        .collect::<Result<Vec<_>>>()?;
    StochasticMeanPayoffGame::new(owner, edges)
}

/// Deterministic mean payoff game on the same graph. Every edge leaving a
/// node of priority `p` weighs `(-(n+1))^p`; Even nodes maximize. Even wins
/// a node iff its mean payoff value is nonnegative.
pub fn parity_to_mpg(g: &ParityGame) -> StochasticMeanPayoffGame {
    let base = -BigInt::from(g.len() as u64 + 1);
    let owner = g
        .owner
        .iter()
        .map(|o| match o {
            ParityOwner::Even => Owner::Max,
            ParityOwner::Odd => Owner::Min,
        })
        .collect();
    let edges = (0..g.len())
        .map(|u| {
            let w = Rational::from_integer(num_traits::pow(base.clone(), g.priority[u] as usize));
            g.succ[u].iter().map(|&v| Edge::new(v, w.clone())).collect()
        })
        .collect();
    StochasticMeanPayoffGame { owner, edges }
}

/// Mean of the cycle the play from each node eventually enters when every
/// node follows the edge index in `choice`.
fn cycle_means(g: &StochasticMeanPayoffGame, choice: &[usize]) -> Vec<Rational> {
    let n = g.len();
    let mut value: Vec<Option<Rational>> = vec![None; n];
    for start in 0..n {
        if value[start].is_some() {
            continue;
        }
        let mut pos = vec![usize::MAX; n];
        let mut path = Vec::new();
        let mut u = start;
        while pos[u] == usize::MAX && value[u].is_none() {
            pos[u] = path.len();
            path.push(u);
            u = g.edges[u][choice[u]].to;
        }
        let v = match &value[u] {
            Some(v) => v.clone(),
            None => {
                let cycle = &path[pos[u]..];
                let total: Rational = cycle.iter().map(|&c| &g.edges[c][choice[c]].weight).sum();
                total / Rational::from_integer(BigInt::from(cycle.len()))
            }
        };
        for &p in &path {
            value[p] = Some(v.clone());
        }
    }
    value.into_iter().map(Option::unwrap).collect()
}

/// Exact values of a deterministic mean payoff game by enumerating all
/// positional policy pairs. Values are Max's long-run average reward.
pub fn mpg_value_bruteforce(g: &StochasticMeanPayoffGame, cap: usize) -> Result<GameValue> {
    if !g.is_deterministic() {
        return Err(Error::InvalidGame("brute-force mean payoff oracle needs a game without random nodes".into()));
    }
    if g.len() > cap {
        return Err(Error::CapExceeded { nodes: g.len(), cap });
    }
    let choices = |who: Owner| -> Vec<(NodeId, Vec<NodeId>)> {
        (0..g.len())
            .filter(|&u| g.owner[u] == who)
            .map(|u| (u, (0..g.edges[u].len()).collect()))
            .collect()
    };
    let min_pols = all_policies(&choices(Owner::Min));
    let max_pols = all_policies(&choices(Owner::Max));
    let payoff: Vec<Vec<Vec<Rational>>> = min_pols
        .iter()
        .map(|s| {
            max_pols
                .iter()
                .map(|t| {
                    let choice: Vec<usize> = (0..g.len())
                        .map(|u| s.get(u).or_else(|| t.get(u)).unwrap())
                        .collect();
                    cycle_means(g, &choice)
                })
                .collect()
        })
        .collect();
    let (values, s, t) = saddle(&payoff, g.len())
        .ok_or_else(|| Error::Internal("max-min and min-max differ for a mean payoff game".into()))?;
    let to_succ = |p: &Policy| Policy {
        choice: p.choice.iter().map(|(&u, &i)| (u, g.edges[u][i].to)).collect(),
    };
    Ok(GameValue {
        values,
        optimal: Some((to_succ(&min_pols[s]), to_succ(&max_pols[t]))),
    })
}
