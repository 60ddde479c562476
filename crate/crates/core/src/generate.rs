//! Seeded random instances for tests, benchmarks and the `gen` command.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::games::{Edge, Owner, ParityGame, ParityOwner, SimpleStochasticGame, SsgKind, StochasticMeanPayoffGame};
use crate::maxavg::{Constraint, MaxAvgInstance};
use crate::rational::{rat, Rational};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stopping game with `size` player/coin nodes followed by Win and Lose.
///
/// Max and Min nodes only move forward or to a terminal; a coin node has one
/// such branch and one arbitrary branch. Every policy pair therefore moves
/// forward with probability at least 1/2 per step and stops surely.
pub fn gen_random_ssg(seed: u64, size: usize) -> SimpleStochasticGame {
    let size = size.max(1);
    let mut r = rng(seed);
    let win = size;
    let lose = size + 1;
    let mut kind = Vec::with_capacity(size + 2);
    let mut succ = Vec::with_capacity(size + 2);
    for u in 0..size {
        let forward: Vec<usize> = (u + 1..size).chain([win, lose]).collect();
        let k = match r.random_range(0..3) {
            0 => SsgKind::Max,
            1 => SsgKind::Min,
            _ => SsgKind::Avg,
        };
        let s = match k {
            SsgKind::Avg => vec![*forward.choose(&mut r).unwrap(), r.random_range(0..size + 2)],
            _ => {
                let mut s: Vec<usize> = (0..r.random_range(1..=3)).map(|_| *forward.choose(&mut r).unwrap()).collect();
                s.sort_unstable();
                s.dedup();
                s
            }
        };
        kind.push(k);
        succ.push(s);
    }
    kind.extend([SsgKind::Win, SsgKind::Lose]);
    succ.extend([Vec::new(), Vec::new()]);
    SimpleStochasticGame::new(kind, succ).expect("generated game is well formed")
}

/// `n` coins in a row, each continuing or losing: node 0 has value `2^-n`.
pub fn gen_chain_ssg(n: usize) -> SimpleStochasticGame {
    let n = n.max(1);
    let (win, lose) = (n, n + 1);
    let mut kind = vec![SsgKind::Avg; n];
    let mut succ: Vec<Vec<usize>> = (0..n).map(|i| vec![if i + 1 < n { i + 1 } else { win }, lose]).collect();
    kind.extend([SsgKind::Win, SsgKind::Lose]);
    succ.extend([Vec::new(), Vec::new()]);
    SimpleStochasticGame::new(kind, succ).expect("chain is well formed")
}

fn random_constant(r: &mut ChaCha8Rng) -> Rational {
    let den = *[1i64, 2, 4].choose(r).unwrap();
    rat(r.random_range(-2 * den..=2 * den), den)
}

/// Random normal-form instance over `size` variables.
pub fn gen_random_maxavg(seed: u64, size: usize) -> MaxAvgInstance {
    let size = size.max(1);
    let mut r = rng(seed);
    let count = r.random_range(size..=2 * size);
    let constraints = (0..count)
        .map(|_| {
            let lhs = r.random_range(0..size);
            match r.random_range(0..10) {
                0..=3 => {
                    let k = if r.random_bool(0.05) { 0 } else { r.random_range(1..=3) };
                    Constraint::MaxLe {
                        lhs,
                        rhs: (0..k).map(|_| r.random_range(0..size)).collect(),
                    }
                }
                4..=7 => Constraint::AvgLe {
                    lhs,
                    a: r.random_range(0..size),
                    b: r.random_range(0..size),
                },
                _ => Constraint::Const {
                    var: lhs,
                    value: random_constant(&mut r),
                },
            }
        })
        .collect();
    MaxAvgInstance::new(size, constraints).expect("generated instance is well formed")
}

/// Random parity game on `size` nodes with priorities below `size + 1`.
pub fn gen_random_parity(seed: u64, size: usize) -> ParityGame {
    let size = size.max(1);
    let mut r = rng(seed);
    let owner = (0..size)
        .map(|_| if r.random_bool(0.5) { ParityOwner::Even } else { ParityOwner::Odd })
        .collect();
    let priority = (0..size).map(|_| r.random_range(0..=size as u32)).collect();
    let succ = (0..size)
        .map(|_| {
            let mut s: Vec<usize> = (0..r.random_range(1..=3)).map(|_| r.random_range(0..size)).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    ParityGame::new(owner, priority, succ).expect("generated parity game is well formed")
}

/// Random deterministic mean payoff game with integer weights in `-5..=5`.
pub fn gen_random_mpg(seed: u64, size: usize) -> StochasticMeanPayoffGame {
    let size = size.max(1);
    let mut r = rng(seed);
    let owner = (0..size).map(|_| if r.random_bool(0.5) { Owner::Max } else { Owner::Min }).collect();
    let edges = (0..size)
        .map(|_| {
            let mut targets: Vec<usize> = (0..r.random_range(1..=3)).map(|_| r.random_range(0..size)).collect();
            targets.sort_unstable();
            targets.dedup();
            targets
                .into_iter()
                .map(|t| Edge::new(t, Rational::from_integer(r.random_range(-5i64..=5).into())))
                .collect()
        })
        .collect();
    StochasticMeanPayoffGame::new(owner, edges).expect("generated game is well formed")
}
