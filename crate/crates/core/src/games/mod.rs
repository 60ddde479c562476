//! Game models, their text formats, brute-force oracles, and the reductions
//! into max-average constraint systems.

use std::collections::BTreeMap;

use crate::rational::Rational;

pub mod mpg;
pub mod parity;
pub mod reduce;
pub mod ssg;

pub use mpg::{mpg_value_bruteforce, parity_to_mpg, parse_mpg, Edge, Owner, StochasticMeanPayoffGame};
pub use parity::{parse_pgsolver, solve_zielonka, ParityGame, ParityOwner};
pub use reduce::{mpg_to_ssg, ssg_to_maxavg, ssg_to_sugared, SsgEmbedding};
pub use ssg::{
    is_stopping, parse_ssg, ssg_check_stopping, ssg_value_bruteforce, ssg_value_iteration,
    survival_bound, trap_region, value_iteration_budget, SimpleStochasticGame, SsgKind,
};

pub type NodeId = usize;

/// Policy-pair enumeration is exponential; games above this many nodes are
/// rejected by the brute-force oracles unless a larger cap is passed.
pub const DEFAULT_CAP: usize = 10;

/// A positional strategy: the successor chosen at each node a player owns.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Policy {
    pub choice: BTreeMap<NodeId, NodeId>,
}

impl Policy {
    pub fn get(&self, node: NodeId) -> Option<NodeId> {
        self.choice.get(&node).copied()
    }
}

/// Exact per-node values with an optimal `(min, max)` policy pair when the
/// oracle produced one.
#[derive(Clone, Debug, PartialEq)]
pub struct GameValue {
    pub values: Vec<Rational>,
    pub optimal: Option<(Policy, Policy)>,
}

/// All positional policies over `nodes`, each given as `(node, successors)`.
/// Enumerated in odometer order so results are reproducible.
pub(crate) fn all_policies(nodes: &[(NodeId, Vec<NodeId>)]) -> Vec<Policy> {
    let mut out = Vec::new();
    let mut digits = vec![0usize; nodes.len()];
    loop {
        out.push(Policy {
            choice: nodes
                .iter()
                .zip(&digits)
                .map(|((u, succ), &d)| (*u, succ[d]))
                .collect(),
        });
        let mut i = 0;
        loop {
            if i == nodes.len() {
                return out;
            }
            digits[i] += 1;
            if digits[i] < nodes[i].1.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Per-node max-min and min-max over a table `payoff[min_idx][max_idx][node]`.
/// Returns the values and the index of a uniformly optimal policy for each
/// player, or `None` if the two orders disagree (no positional saddle point).
pub(crate) fn saddle(payoff: &[Vec<Vec<Rational>>], nodes: usize) -> Option<(Vec<Rational>, usize, usize)> {
    let n_min = payoff.len();
    let n_max = payoff.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(nodes);
    for u in 0..nodes {
        let max_min = (0..n_max)
            .map(|t| (0..n_min).map(|s| &payoff[s][t][u]).min().unwrap())
            .max()
            .unwrap()
            .clone();
        let min_max = (0..n_min)
            .map(|s| (0..n_max).map(|t| &payoff[s][t][u]).max().unwrap())
            .min()
            .unwrap()
            .clone();
        if max_min != min_max {
            return None;
        }
        values.push(max_min);
    }
    let best_max = (0..n_max).find(|&t| {
        (0..nodes).all(|u| (0..n_min).all(|s| payoff[s][t][u] >= values[u]))
    })?;
    let best_min = (0..n_min).find(|&s| {
        (0..nodes).all(|u| (0..n_max).all(|t| payoff[s][t][u] <= values[u]))
    })?;
    Some((values, best_min, best_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_enumerates_product() {
        let p = all_policies(&[(0, vec![1, 2]), (3, vec![4, 5, 6])]);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0].get(0), Some(1));
        assert_eq!(p[1].get(0), Some(2));
        assert_eq!(p[2].get(3), Some(5));
        assert_eq!(all_policies(&[]).len(), 1);
    }
}
