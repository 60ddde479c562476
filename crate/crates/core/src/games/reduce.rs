//! Reductions between game models and into max-average instances.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::maxavg::{normalize, MaxAvgInstance, SugaredConstraint, SugaredInstance};
use crate::rational::{half, Rational};

use super::mpg::{Owner, StochasticMeanPayoffGame};
use super::ssg::{is_stopping, SimpleStochasticGame, SsgKind};
use super::NodeId;

/// Constraint system whose solvability says `value(k) >= 1/2`, before the
/// `min` and `>=` sugar is removed. Variable `i` is node `i`.
pub fn ssg_to_sugared(g: &SimpleStochasticGame, k: NodeId) -> Result<SugaredInstance> {
    if k >= g.len() {
        return Err(Error::InvalidArgument(format!("target node {k} out of range for {} nodes", g.len())));
    }
    if !is_stopping(g) {
        return Err(Error::NotStopping(
            "the two players together can avoid the terminals forever".into(),
        ));
    }
    let mut cs = Vec::with_capacity(g.len() + 1);
    for u in 0..g.len() {
        let s = &g.succ[u];
        cs.push(match g.kind[u] {
            SsgKind::Max => SugaredConstraint::MaxLe { lhs: u, rhs: s.clone() },
            SsgKind::Min => SugaredConstraint::MinLe { lhs: u, rhs: s.clone() },
            SsgKind::Avg => SugaredConstraint::AvgLe {
                lhs: u,
                a: s[0],
                b: s[1],
            },
            SsgKind::Win => SugaredConstraint::Const {
                var: u,
                value: Rational::one(),
            },
            SsgKind::Lose => SugaredConstraint::Const {
                var: u,
                value: Rational::zero(),
            },
        });
    }
    cs.push(SugaredConstraint::GeConst { var: k, value: half() });
    SugaredInstance::new(g.len(), cs)
}

/// Normalized form of [`ssg_to_sugared`]: feasible iff `value(k) >= 1/2`.
pub fn ssg_to_maxavg(g: &SimpleStochasticGame, k: NodeId) -> Result<MaxAvgInstance> {
    Ok(normalize(&ssg_to_sugared(g, k)?).instance)
}

/// A stopping game built from a mean payoff game, with the node whose
/// value decides the mean payoff sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsgEmbedding {
    pub game: SimpleStochasticGame,
    /// `value(query) >= 1/2` iff the mean payoff value of the source node is
    /// nonnegative.
    pub query: NodeId,
    /// Source node `u` is node `node_map[u]` of `game`.
    pub node_map: Vec<NodeId>,
    /// Stopping probability per step is `2^-discount_bits`.
    pub discount_bits: u32,
}

struct Builder {
    kind: Vec<SsgKind>,
    succ: Vec<Vec<NodeId>>,
    win: NodeId,
    lose: NodeId,
    lotteries: HashMap<Rational, NodeId>,
}

impl Builder {
    fn push(&mut self, kind: SsgKind, succ: Vec<NodeId>) -> NodeId {
        self.kind.push(kind);
        self.succ.push(succ);
        self.kind.len() - 1
    }

    /// A node reaching Win with probability `p`, a dyadic rational in [0, 1]:
    /// one coin per binary digit after the point.
    fn lottery(&mut self, p: &Rational) -> NodeId {
        if p.is_zero() {
            return self.lose;
        }
        if p.is_one() {
            return self.win;
        }
        if let Some(&u) = self.lotteries.get(p) {
            return u;
        }
        let digits = p.denom().bits() as usize - 1;
        let numer = p.numer().clone();
        // Built from the last digit (always 1) backwards.
        let mut next = self.lose;
        for i in (1..=digits).rev() {
            let bit = numer.bit((digits - i) as u64);
            let term = if bit { self.win } else { self.lose };
            next = self.push(SsgKind::Avg, vec![term, next]);
        }
        self.lotteries.insert(p.clone(), next);
        next
    }
}

fn ceil_log2(x: &BigInt) -> u32 {
    if x <= &BigInt::one() {
        0
    } else {
        (x - 1u32).bits() as u32
    }
}

/// Discounting reduction from a deterministic mean payoff game to a stopping
/// simple stochastic game deciding `value(source) >= 0`.
///
/// Weights are scaled to integers and bounded by a power of two `W`. Every
/// edge stops with probability `eps = 2^-m`, `2^m >= 8 n^2 W`, paying a
/// lottery won with probability `(w + W) / (2W)`; the stopping game's value is
/// then `(nu + W) / (2W)` for the discounted value `nu`, which lies within
/// `1/(4n)` of the mean payoff value. Mean payoff values have denominators at
/// most `n`, so the threshold `-2^-j` with `2^j >= 2n` separates `>= 0` from
/// `< 0`. A final coin averages the source with a lottery at the complementary
/// threshold so the question becomes `>= 1/2`.
pub fn mpg_to_ssg(g: &StochasticMeanPayoffGame, source: NodeId) -> Result<SsgEmbedding> {
    if !g.is_deterministic() {
        return Err(Error::InvalidGame("discounting reduction needs a game without random nodes".into()));
    }
    if source >= g.len() {
        return Err(Error::InvalidArgument(format!("node {source} out of range for {} nodes", g.len())));
    }
    let n = g.len();
    let scale = g
        .edges
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, e| acc.lcm(e.weight.denom()));
    let weight = |w: &Rational| (w * Rational::from_integer(scale.clone())).to_integer();
    let max_abs = g
        .edges
        .iter()
        .flatten()
        .map(|e| weight(&e.weight).abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let log_w = ceil_log2(&max_abs);
    let big_w = BigInt::one() << log_w;
    let m = ceil_log2(&(BigInt::from(8 * n * n) << log_w));
    let j = ceil_log2(&BigInt::from(2 * n));

    let mut b = Builder {
        kind: Vec::new(),
        succ: Vec::new(),
        win: n,
        lose: n + 1,
        lotteries: HashMap::new(),
    };
    for u in 0..n {
        let kind = if g.owner[u] == Owner::Max { SsgKind::Max } else { SsgKind::Min };
        b.push(kind, Vec::new());
    }
    b.push(SsgKind::Win, Vec::new());
    b.push(SsgKind::Lose, Vec::new());

    let two_w = Rational::from_integer(&big_w * 2);
    let mut heads: HashMap<(NodeId, BigInt), NodeId> = HashMap::new();
    for u in 0..n {
        let mut succ = Vec::new();
        for e in &g.edges[u] {
            let w = weight(&e.weight);
            let key = (e.to, w.clone());
            let head = match heads.get(&key) {
                Some(&h) => h,
                None => {
                    let p = Rational::from_integer(&w + &big_w) / &two_w;
                    let mut next = b.lottery(&p);
                    for _ in 0..m {
                        next = b.push(SsgKind::Avg, vec![e.to, next]);
                    }
                    heads.insert(key, next);
                    next
                }
            };
            if !succ.contains(&head) {
                succ.push(head);
            }
        }
        b.succ[u] = succ;
    }
    let h = half() + Rational::new(BigInt::one(), BigInt::one() << (j + 1 + log_w));
    let hedge = b.lottery(&h);
    let query = b.push(SsgKind::Avg, vec![source, hedge]);
    let game = SimpleStochasticGame::new(b.kind, b.succ)?;
    debug_assert!(is_stopping(&game));
    Ok(SsgEmbedding {
        game,
        query,
        node_map: (0..n).collect(),
        discount_bits: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::mpg::{mpg_value_bruteforce, parity_to_mpg, Edge};
    use crate::games::parity::{parse_pgsolver, solve_zielonka, ParityOwner};
    use crate::games::ssg::{parse_ssg, ssg_value_bruteforce, ssg_value_iteration};
    use crate::maxavg::{check_assignment, oracle_feasible, Constraint, ExtValue, OracleVerdict};
    use crate::rational::{int, rat};

    fn coin() -> SimpleStochasticGame {
        parse_ssg("ssg 3\n0 AVG 1 2\n1 WIN\n2 LOSE\n").unwrap()
    }

    #[test]
    fn coin_flip_instance() {
        let s = ssg_to_sugared(&coin(), 0).unwrap();
        assert_eq!(
            s.constraints,
            vec![
                SugaredConstraint::AvgLe { lhs: 0, a: 1, b: 2 },
                SugaredConstraint::Const { var: 1, value: int(1) },
                SugaredConstraint::Const { var: 2, value: int(0) },
                SugaredConstraint::GeConst { var: 0, value: rat(1, 2) },
            ]
        );
        let inst = ssg_to_maxavg(&coin(), 0).unwrap();
        let w = vec![
            ExtValue::Finite(rat(1, 2)),
            ExtValue::Finite(int(1)),
            ExtValue::Finite(int(0)),
            ExtValue::Finite(rat(1, 2)),
        ];
        assert!(check_assignment(&inst, &w));
        assert!(oracle_feasible(&inst, 100).unwrap().is_feasible());
    }

    #[test]
    fn lose_bias_instance_is_infeasible() {
        let g = parse_ssg("ssg 4\n0 AVG 1 2\n1 WIN\n2 LOSE\n3 AVG 0 2\n").unwrap();
        assert_eq!(ssg_value_bruteforce(&g, 10).unwrap().values[3], rat(1, 4));
        let inst = ssg_to_maxavg(&g, 3).unwrap();
        assert_eq!(oracle_feasible(&inst, 100).unwrap(), OracleVerdict::Infeasible);
    }

    #[test]
    fn terminal_query() {
        let inst = ssg_to_maxavg(&coin(), 1).unwrap();
        assert!(inst.constraints.contains(&Constraint::Const { var: 1, value: int(1) }));
        assert!(inst.constraints.contains(&Constraint::MaxLe { lhs: 3, rhs: vec![1] }));
        assert!(oracle_feasible(&inst, 100).unwrap().is_feasible());
    }

    #[test]
    fn rejects_non_stopping_and_bad_target() {
        let g = parse_ssg("ssg 3\n0 MAX 0 1\n1 WIN\n2 LOSE\n").unwrap();
        assert!(matches!(ssg_to_maxavg(&g, 0), Err(Error::NotStopping(_))));
        assert!(matches!(ssg_to_maxavg(&coin(), 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn lottery_probabilities() {
        let mut b = Builder {
            kind: vec![SsgKind::Win, SsgKind::Lose],
            succ: vec![vec![], vec![]],
            win: 0,
            lose: 1,
            lotteries: HashMap::new(),
        };
        let targets = [rat(5, 8), rat(1, 2), rat(3, 4), rat(1, 16)];
        let nodes: Vec<NodeId> = targets.iter().map(|p| b.lottery(p)).collect();
        let g = SimpleStochasticGame::new(b.kind, b.succ).unwrap();
        let v = ssg_value_iteration(&g, 8);
        for (p, u) in targets.iter().zip(nodes) {
            assert_eq!(&v[u], p);
        }
    }

    fn sign_via_ssg(g: &StochasticMeanPayoffGame, u: NodeId) -> bool {
        let emb = mpg_to_ssg(g, u).unwrap();
        let inst = ssg_to_maxavg(&emb.game, emb.query).unwrap();
        match oracle_feasible(&inst, 10_000).unwrap() {
            OracleVerdict::Feasible(_) => true,
            OracleVerdict::Infeasible => false,
            OracleVerdict::Unknown => panic!("oracle undecided"),
        }
    }

    #[test]
    fn discounting_preserves_sign() {
        let det = |owner: Vec<Owner>, edges: Vec<Vec<(usize, Rational)>>| {
            StochasticMeanPayoffGame::new(
                owner,
                edges
                    .into_iter()
                    .map(|es| es.into_iter().map(|(v, w)| Edge::new(v, w)).collect())
                    .collect(),
            )
            .unwrap()
        };
        let games = [
            det(vec![Owner::Max], vec![vec![(0, int(0))]]),
            det(vec![Owner::Min], vec![vec![(0, rat(-1, 3))]]),
            det(vec![Owner::Max, Owner::Min], vec![vec![(1, int(1))], vec![(0, int(-1))]]),
            det(vec![Owner::Max, Owner::Min], vec![vec![(1, int(1))], vec![(0, int(-2))]]),
            det(
                vec![Owner::Min, Owner::Max, Owner::Max],
                vec![
                    vec![(1, int(3)), (2, int(-1))],
                    vec![(0, int(-4)), (1, int(-1))],
                    vec![(2, int(1)), (0, int(0))],
                ],
            ),
        ];
        for g in &games {
            let exact = mpg_value_bruteforce(g, 10).unwrap();
            for u in 0..g.len() {
                assert_eq!(sign_via_ssg(g, u), !exact.values[u].is_negative(), "node {u} of {g:?}");
            }
        }
    }

    #[test]
    fn parity_through_discounting() {
        let p = parse_pgsolver("parity 2; 0 1 1 1,2; 1 2 0 0; 2 1 1 2;").unwrap();
        let g = parity_to_mpg(&p);
        let win = solve_zielonka(&p);
        for u in 0..p.len() {
            assert_eq!(sign_via_ssg(&g, u), win[u] == ParityOwner::Even);
        }
    }
}
