//! Simple stochastic games: text format, stopping checks, exact values by
//! policy enumeration, and value iteration.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linsolve;
use crate::rational::{half, Rational};

use super::mpg::{Edge, Owner, StochasticMeanPayoffGame};
use super::{all_policies, saddle, GameValue, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SsgKind {
    Min,
    Max,
    Avg,
    Win,
    Lose,
}

impl SsgKind {
    pub fn is_terminal(self) -> bool {
        matches!(self, SsgKind::Win | SsgKind::Lose)
    }

    fn keyword(self) -> &'static str {
        match self {
            SsgKind::Min => "MIN",
            SsgKind::Max => "MAX",
            SsgKind::Avg => "AVG",
            SsgKind::Win => "WIN",
            SsgKind::Lose => "LOSE",
        }
    }
}

/// Terminals carry an empty successor list; they are absorbing by
/// convention. Average nodes have exactly two successors taken with
/// probability one half each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleStochasticGame {
    pub kind: Vec<SsgKind>,
    pub succ: Vec<Vec<NodeId>>,
    pub labels: Vec<Option<String>>,
}

impl SimpleStochasticGame {
    pub fn new(kind: Vec<SsgKind>, succ: Vec<Vec<NodeId>>) -> Result<Self> {
        let n = kind.len();
        let g = SimpleStochasticGame {
            kind,
            succ,
            labels: vec![None; n],
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.kind.len();
        if self.succ.len() != n || self.labels.len() != n {
            return Err(Error::InvalidGame("field lengths differ".into()));
        }
        for u in 0..n {
            let s = &self.succ[u];
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(Error::DanglingSuccessor {
                    node: u.to_string(),
                    succ: v.to_string(),
                });
            }
            match self.kind[u] {
                SsgKind::Win | SsgKind::Lose => {
                    if !s.is_empty() {
                        return Err(Error::InvalidGame(format!("terminal {u} lists successors")));
                    }
                }
                SsgKind::Avg => {
                    if s.len() != 2 {
                        return Err(Error::InvalidGame(format!(
                            "average node {u} has {} successors, needs 2",
                            s.len()
                        )));
                    }
                }
                SsgKind::Min | SsgKind::Max => {
                    if s.is_empty() {
                        return Err(Error::NoSuccessors(u.to_string()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    pub fn nodes_of(&self, kind: SsgKind) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len()).filter(move |&u| self.kind[u] == kind)
    }

    /// Text form: `ssg <n>` then `id KIND succ...` per node.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ssg {}", self.len());
        for u in 0..self.len() {
            let _ = write!(out, "{u} {}", self.kind[u].keyword());
            for v in &self.succ[u] {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// The same game as a stochastic mean payoff game: terminals become
    /// self-loops, weight 1 on the loop at Win and 0 elsewhere.
    pub fn to_mean_payoff(&self) -> StochasticMeanPayoffGame {
        let owner = self
            .kind
            .iter()
            .map(|k| match k {
                SsgKind::Min => Owner::Min,
                SsgKind::Max | SsgKind::Win | SsgKind::Lose => Owner::Max,
                SsgKind::Avg => Owner::Rand,
            })
            .collect();
        let edges = (0..self.len())
            .map(|u| match self.kind[u] {
                SsgKind::Win => vec![Edge::new(u, Rational::one())],
                SsgKind::Lose => vec![Edge::new(u, Rational::zero())],
                SsgKind::Avg => self.succ[u]
                    .iter()
                    .map(|&v| Edge {
                        to: v,
                        weight: Rational::zero(),
                        prob: Some(half()),
                    })
                    .collect(),
                _ => self.succ[u].iter().map(|&v| Edge::new(v, Rational::zero())).collect(),
            })
            .collect();
        StochasticMeanPayoffGame { owner, edges }
    }
}

/// Parses the SSG text format. `#` starts a comment; a trailing `;` is
/// ignored; terminals may list their own id as an explicit self-loop.
pub fn parse_ssg(text: &str) -> Result<SimpleStochasticGame> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (i + 1, l.strip_suffix(';').unwrap_or(l).trim())
        })
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::syntax(1, "empty input"))?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["ssg", n] => n
            .parse()
            .map_err(|_| Error::syntax(hline, format!("bad node count `{n}`")))?,
        _ => return Err(Error::syntax(hline, "expected `ssg <n>` header")),
    };
    let mut kind = vec![None; n];
    let mut succ = vec![Vec::new(); n];
    for (line, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() < 2 {
            return Err(Error::syntax(line, "expected `id KIND successors...`"));
        }
        let u: usize = tok[0]
            .parse()
            .map_err(|_| Error::syntax(line, format!("bad node id `{}`", tok[0])))?;
        if u >= n {
            return Err(Error::syntax(line, format!("node id {u} out of range for {n} nodes")));
        }
        if kind[u].is_some() {
            return Err(Error::syntax(line, format!("node {u} defined twice")));
        }
        let k = match tok[1].to_ascii_uppercase().as_str() {
            "MIN" => SsgKind::Min,
            "MAX" => SsgKind::Max,
            "AVG" => SsgKind::Avg,
            "WIN" => SsgKind::Win,
            "LOSE" => SsgKind::Lose,
            other => return Err(Error::syntax(line, format!("unknown node kind `{other}`"))),
        };
        let mut s = Vec::new();
        for t in &tok[2..] {
            let v: usize = t
                .parse()
                .map_err(|_| Error::syntax(line, format!("bad successor `{t}`")))?;
            if v >= n {
                return Err(Error::DanglingSuccessor {
                    node: u.to_string(),
                    succ: v.to_string(),
                });
            }
            s.push(v);
        }
        match k {
            SsgKind::Win | SsgKind::Lose => {
                if s.iter().any(|&v| v != u) {
                    return Err(Error::syntax(line, "terminals may only loop to themselves"));
                }
                s.clear();
            }
            SsgKind::Min | SsgKind::Max => {
                let mut seen = Vec::with_capacity(s.len());
                for v in s {
                    if !seen.contains(&v) {
                        seen.push(v);
                    }
                }
                s = seen;
            }
            SsgKind::Avg => {}
        }
        kind[u] = Some(k);
        succ[u] = s;
    }
    let kind = kind
        .into_iter()
        .enumerate()
        .map(|(u, k)| k.ok_or_else(|| Error::InvalidGame(format!("node {u} never defined"))))
        .collect::<Result<Vec<_>>>()?;
    SimpleStochasticGame::new(kind, succ)
}

/// Nodes that can reach a terminal when player nodes follow `choice`.
fn reaches_terminal(g: &SimpleStochasticGame, choice: &[Option<NodeId>]) -> Vec<bool> {
    let n = g.len();
    let mut pred = vec![Vec::new(); n];
    for u in 0..n {
        match choice[u] {
            Some(v) => pred[v].push(u),
            None => g.succ[u].iter().for_each(|&v| pred[v].push(u)),
        }
    }
    let mut seen: Vec<bool> = g.kind.iter().map(|k| k.is_terminal()).collect();
    let mut stack: Vec<NodeId> = (0..n).filter(|&u| seen[u]).collect();
    while let Some(v) = stack.pop() {
        for &u in &pred[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}

fn player_choices(g: &SimpleStochasticGame, kind: SsgKind) -> Vec<(NodeId, Vec<NodeId>)> {
    g.nodes_of(kind).map(|u| (u, g.succ[u].clone())).collect()
}

/// Stopping check by enumeration: under every policy pair every node must
/// be able to reach a terminal, so no bottom component of the induced chain
/// avoids the terminals.
pub fn ssg_check_stopping(g: &SimpleStochasticGame, cap: usize) -> Result<bool> {
    if g.len() > cap {
        return Err(Error::CapExceeded { nodes: g.len(), cap });
    }
    let mut players = player_choices(g, SsgKind::Min);
    players.extend(player_choices(g, SsgKind::Max));
    for p in all_policies(&players) {
        let choice: Vec<Option<NodeId>> = (0..g.len()).map(|u| p.get(u)).collect();
        if reaches_terminal(g, &choice).contains(&false) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest set of non-terminal nodes the two players together can keep the
/// play inside forever: player nodes need one successor in the set, average
/// nodes need both.
pub fn trap_region(g: &SimpleStochasticGame) -> Vec<bool> {
    let mut inside: Vec<bool> = g.kind.iter().map(|k| !k.is_terminal()).collect();
    loop {
        let mut changed = false;
        for u in 0..g.len() {
            if !inside[u] {
                continue;
            }
            let keep = match g.kind[u] {
                SsgKind::Avg => g.succ[u].iter().all(|&v| inside[v]),
                _ => g.succ[u].iter().any(|&v| inside[v]),
            };
            if !keep {
                inside[u] = false;
                changed = true;
            }
        }
        if !changed {
            return inside;
        }
    }
}

/// Polynomial stopping check: stopping iff the trap region is empty.
pub fn is_stopping(g: &SimpleStochasticGame) -> bool {
    !trap_region(g).contains(&true)
}

/// Probability of reaching Win from each node when player nodes follow
/// `choice`. Requires every node to reach a terminal.
fn reach_win(g: &SimpleStochasticGame, choice: &[Option<NodeId>]) -> Result<Vec<Rational>> {
    let n = g.len();
    let mut a = vec![vec![Rational::zero(); n]; n];
    let mut b = vec![Rational::zero(); n];
    for u in 0..n {
        a[u][u] = Rational::one();
        match g.kind[u] {
            SsgKind::Win => b[u] = Rational::one(),
            SsgKind::Lose => {}
            SsgKind::Avg => {
                for &v in &g.succ[u] {
                    a[u][v] -= half();
                }
            }
            SsgKind::Min | SsgKind::Max => {
                let v = choice[u].expect("player node without a choice");
                a[u][v] -= Rational::one();
            }
        }
    }
    linsolve::solve(&a, &b).ok_or_else(|| Error::Internal("singular reachability system".into()))
}

/// Exact values by enumerating all positional policy pairs and solving each
/// induced chain. Checks that max-min equals min-max.
pub fn ssg_value_bruteforce(g: &SimpleStochasticGame, cap: usize) -> Result<GameValue> {
    if g.len() > cap {
        return Err(Error::CapExceeded { nodes: g.len(), cap });
    }
    if !is_stopping(g) {
        return Err(Error::NotStopping("some policy pair avoids the terminals forever".into()));
    }
    let min_pols = all_policies(&player_choices(g, SsgKind::Min));
    let max_pols = all_policies(&player_choices(g, SsgKind::Max));
    let mut payoff = Vec::with_capacity(min_pols.len());
    for s in &min_pols {
        let mut row = Vec::with_capacity(max_pols.len());
        for t in &max_pols {
            let choice: Vec<Option<NodeId>> = (0..g.len()).map(|u| s.get(u).or_else(|| t.get(u))).collect();
            row.push(reach_win(g, &choice)?);
        }
        payoff.push(row);
    }
    let (values, s, t) = saddle(&payoff, g.len())
        .ok_or_else(|| Error::Internal("max-min and min-max differ for a stopping game".into()))?;
    Ok(GameValue {
        values,
        optimal: Some((min_pols[s].clone(), max_pols[t].clone())),
    })
}

/// `iters` applications of the one-step operator from the all-zero vector
/// with terminals pinned. Exact: after `t` steps every value is an integer
/// over `2^t`, so the numerators are iterated directly.
pub fn ssg_value_iteration(g: &SimpleStochasticGame, iters: usize) -> Vec<Rational> {
    let n = g.len();
    let pinned = |u: usize, scale: usize| -> BigInt {
        match g.kind[u] {
            SsgKind::Win => BigInt::one() << scale,
            _ => BigInt::zero(),
        }
    };
    let mut num: Vec<BigInt> = (0..n).map(|u| pinned(u, 0)).collect();
    for t in 0..iters {
        num = (0..n)
            .map(|u| match g.kind[u] {
                SsgKind::Win | SsgKind::Lose => pinned(u, t + 1),
                SsgKind::Avg => &num[g.succ[u][0]] + &num[g.succ[u][1]],
                SsgKind::Max => g.succ[u].iter().map(|&v| &num[v]).max().unwrap() << 1,
                SsgKind::Min => g.succ[u].iter().map(|&v| &num[v]).min().unwrap() << 1,
            })
            .collect();
    }
    let den = BigInt::one() << iters;
    num.into_iter().map(|x| Rational::new(x, den.clone())).collect()
}

/// Largest probability, over all joint behaviours of both players, of
/// staying off the terminals for `steps` moves.
pub fn survival_bound(g: &SimpleStochasticGame, steps: usize) -> Rational {
    let mut s: Vec<Rational> = g
        .kind
        .iter()
        .map(|k| if k.is_terminal() { Rational::zero() } else { Rational::one() })
        .collect();
    for _ in 0..steps {
        s = (0..g.len())
            .map(|u| match g.kind[u] {
                SsgKind::Win | SsgKind::Lose => Rational::zero(),
                SsgKind::Avg => (&s[g.succ[u][0]] + &s[g.succ[u][1]]) * half(),
                _ => g.succ[u].iter().map(|&v| s[v].clone()).max().unwrap(),
            })
            .collect();
    }
    s.into_iter().max().unwrap_or_else(Rational::zero)
}

/// Iteration count after which value iteration is within `2^-bits` of the
/// value at every node.
///
/// With `m` non-terminal nodes and `rho` the `m`-step survival bound, the
/// gap after `t` steps is at most `rho^floor(t/m)`. Taking
/// `floor(t/m) >= bits * 0.7 / (1 - rho)` suffices since `0.7 > ln 2`.
pub fn value_iteration_budget(g: &SimpleStochasticGame, bits: u32) -> Result<usize> {
    if !is_stopping(g) {
        return Err(Error::NotStopping("value iteration budget needs a stopping game".into()));
    }
    let m = g.kind.iter().filter(|k| !k.is_terminal()).count().max(1);
    let rho = survival_bound(g, m);
    let gap = Rational::one() - rho;
    let rounds = (Rational::new(BigInt::from(7 * bits as u64), BigInt::from(10)) / gap).ceil();
    let rounds = usize::try_from(rounds.to_integer())
        .map_err(|_| Error::InvalidArgument("value iteration budget does not fit in memory".into()))?;
    Ok(m * rounds.max(1))
}
