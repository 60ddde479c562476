//! Exact feasibility oracle for max-average instances of moderate size.
//!
//! The largest solution of the upper-bound constraints is the value of a
//! reachability game: each variable is a minimizer choosing one of the
//! constraints it appears on the left of, `MaxLe` is a maximizer, `AvgLe` a
//! fair coin and `Const` a terminal paying its constant. Plays that never hit
//! a terminal are worth +∞. The instance is feasible iff that value meets
//! every constant exactly.
//!
//! Steps:
//! 1. constant clashes and variables forced to −∞ (empty max, or an average
//!    with a forced operand) give immediate verdicts;
//! 2. the region where the minimizer reaches a terminal almost surely is
//!    computed by the usual attractor loop;
//! 3. on that region the game is solved by strategy iteration with exact
//!    linear solves: an inner loop for the maximizer, an outer one switching
//!    the minimizer only on strict improvement.
//!
//! Every intermediate value vector (after the inner loop settles) bounds all
//! solutions from above, so an `Infeasible` verdict is sound whenever it is
//! issued. `Feasible` witnesses are always re-checked.

use log::debug;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linsolve;
use crate::rational::{half, Rational};

use super::{check_assignment, Assignment, Constraint, ExtValue, MaxAvgInstance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Feasible(Assignment),
    Infeasible,
    Unknown,
}

impl OracleVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OracleVerdict::Feasible(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            OracleVerdict::Feasible(_) => "Feasible",
            OracleVerdict::Infeasible => "Infeasible",
            OracleVerdict::Unknown => "Unknown",
        }
    }
}

struct Game<'a> {
    inst: &'a MaxAvgInstance,
    /// Constraints with each variable on the left.
    options: Vec<Vec<usize>>,
    forced: Vec<bool>,
    /// Right-hand sides of `MaxLe` constraints with forced variables dropped.
    live_rhs: Vec<Vec<usize>>,
}

impl<'a> Game<'a> {
    fn new(inst: &'a MaxAvgInstance) -> Self {
        let mut options = vec![Vec::new(); inst.vars];
        for (k, c) in inst.constraints.iter().enumerate() {
            options[c.lhs()].push(k);
        }
        let forced = forced_neg_inf(inst);
        let live_rhs = inst
            .constraints
            .iter()
            .map(|c| match c {
                Constraint::MaxLe { rhs, .. } => rhs.iter().copied().filter(|&v| !forced[v]).collect(),
                _ => Vec::new(),
            })
            .collect();
        Game {
            inst,
            options,
            forced,
            live_rhs,
        }
    }

    fn succ(&self, k: usize) -> Vec<usize> {
        match &self.inst.constraints[k] {
            Constraint::MaxLe { .. } => self.live_rhs[k].clone(),
            Constraint::AvgLe { a, b, .. } => vec![*a, *b],
            Constraint::Const { .. } => Vec::new(),
        }
    }

    /// Minimizer's almost-sure region, with an attractor strategy on it.
    fn almost_sure_region(&self) -> (Vec<bool>, Vec<Option<usize>>) {
        let n = self.inst.vars;
        let m = self.inst.constraints.len();
        let mut var_in: Vec<bool> = self.forced.iter().map(|f| !f).collect();
        let mut con_in: Vec<bool> = self.inst.constraints.iter().map(|c| var_in[c.lhs()]).collect();
        loop {
            let mut var_att = vec![false; n];
            let mut con_att = vec![false; m];
            let mut strategy = vec![None; n];
            loop {
                let mut grew = false;
                for k in 0..m {
                    if !con_in[k] || con_att[k] {
                        continue;
                    }
                    let hit = match &self.inst.constraints[k] {
                        Constraint::Const { .. } => true,
                        Constraint::MaxLe { .. } => self.live_rhs[k].iter().all(|&v| var_att[v]),
                        Constraint::AvgLe { a, b, .. } => var_att[*a] || var_att[*b],
                    };
                    if hit {
                        con_att[k] = true;
                        grew = true;
                    }
                }
                for v in 0..n {
                    if !var_in[v] || var_att[v] {
                        continue;
                    }
                    if let Some(&k) = self.options[v].iter().find(|&&k| con_in[k] && con_att[k]) {
                        var_att[v] = true;
                        strategy[v] = Some(k);
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            let mut removed: Vec<bool> = (0..n).map(|v| var_in[v] && !var_att[v]).collect();
            if !removed.contains(&true) {
                return (var_in, strategy);
            }
            // The maximizer's attractor to the removed part leaves the region too.
            loop {
                let mut grew = false;
                for k in 0..m {
                    if !con_in[k] {
                        continue;
                    }
                    if self.succ(k).iter().any(|&v| removed[v] || !var_in[v]) {
                        con_in[k] = false;
                        grew = true;
                    }
                }
                for v in 0..n {
                    if !var_in[v] || removed[v] {
                        continue;
                    }
                    if self.options[v].iter().all(|&k| !con_in[k]) {
                        removed[v] = true;
                        grew = true;
                    }
                }
                for v in (0..n).filter(|&v| removed[v]) {
                    var_in[v] = false;
                }
                if !grew {
                    break;
                }
            }
            for k in 0..m {
                if !var_in[self.inst.constraints[k].lhs()] {
                    con_in[k] = false;
                }
            }
        }
    }
}

/// Least set of variables every solution sends to −∞.
fn forced_neg_inf(inst: &MaxAvgInstance) -> Vec<bool> {
    let mut forced = vec![false; inst.vars];
    loop {
        let mut grew = false;
        for c in &inst.constraints {
            let lhs = c.lhs();
            if forced[lhs] {
                continue;
            }
            let hit = match c {
                Constraint::MaxLe { rhs, .. } => rhs.iter().all(|&v| forced[v]),
                Constraint::AvgLe { a, b, .. } => forced[*a] || forced[*b],
                Constraint::Const { .. } => false,
            };
            if hit {
                forced[lhs] = true;
                grew = true;
            }
        }
        if !grew {
            return forced;
        }
    }
}

enum Outcome {
    Done(Vec<Rational>),
    /// Budget ran out; carries the last value vector known to be an upper
    /// bound on all solutions, if any.
    OutOfBudget(Option<Vec<Rational>>),
    Singular,
}

/// Values of the region when the minimizer plays `sigma` and the maximizer
/// `tau`, indexed by variable (entries outside the region are unused).
fn evaluate(g: &Game, region: &[bool], sigma: &[Option<usize>], tau: &[usize]) -> Option<Vec<Rational>> {
    let idx: Vec<usize> = (0..g.inst.vars).filter(|&v| region[v]).collect();
    let mut pos = vec![usize::MAX; g.inst.vars];
    for (i, &v) in idx.iter().enumerate() {
        pos[v] = i;
    }
    let r = idx.len();
    let mut a = vec![vec![Rational::zero(); r]; r];
    let mut b = vec![Rational::zero(); r];
    for (i, &v) in idx.iter().enumerate() {
        a[i][i] = Rational::one();
        let k = sigma[v].expect("region variable without a strategy");
        match &g.inst.constraints[k] {
            Constraint::Const { value, .. } => b[i] = value.clone(),
            Constraint::MaxLe { .. } => a[i][pos[tau[k]]] -= Rational::one(),
            Constraint::AvgLe { a: x, b: y, .. } => {
                a[i][pos[*x]] -= half();
                a[i][pos[*y]] -= half();
            }
        }
    }
    let sol = linsolve::solve(&a, &b)?;
    let mut out = vec![Rational::zero(); g.inst.vars];
    for (i, &v) in idx.iter().enumerate() {
        out[v] = sol[i].clone();
    }
    Some(out)
}

fn option_value(g: &Game, k: usize, x: &[Rational]) -> Rational {
    match &g.inst.constraints[k] {
        Constraint::Const { value, .. } => value.clone(),
        Constraint::MaxLe { .. } => g.live_rhs[k].iter().map(|&v| x[v].clone()).max().unwrap(),
        Constraint::AvgLe { a, b, .. } => (&x[*a] + &x[*b]) * half(),
    }
}

fn strategy_iteration(g: &Game, region: &[bool], mut sigma: Vec<Option<usize>>, budget: usize) -> Result<Outcome> {
    let m = g.inst.constraints.len();
    let mut rounds = 0usize;
    let mut bound: Option<Vec<Rational>> = None;
    let mut tau: Vec<usize> = (0..m).map(|k| g.live_rhs[k].first().copied().unwrap_or(0)).collect();
    loop {
        // Maximizer's best response to sigma.
        let values = loop {
            rounds += 1;
            if rounds > budget {
                return Ok(Outcome::OutOfBudget(bound));
            }
            let Some(x) = evaluate(g, region, &sigma, &tau) else {
                return Ok(Outcome::Singular);
            };
            let mut switched = false;
            for v in (0..g.inst.vars).filter(|&v| region[v]) {
                let k = sigma[v].unwrap();
                if !matches!(g.inst.constraints[k], Constraint::MaxLe { .. }) {
                    continue;
                }
                let best = *g.live_rhs[k]
                    .iter()
                    .reduce(|best, w| if x[*w] > x[*best] { w } else { best })
                    .unwrap();
                if x[best] > x[tau[k]] {
                    tau[k] = best;
                    switched = true;
                }
            }
            if !switched {
                break x;
            }
        };
        if let Some(prev) = &bound {
            for v in (0..g.inst.vars).filter(|&v| region[v]) {
                if values[v] > prev[v] {
                    return Err(Error::Internal(format!("strategy iteration raised the value of variable {v}")));
                }
            }
        }
        let mut switched = false;
        for v in (0..g.inst.vars).filter(|&v| region[v]) {
            let current = option_value(g, sigma[v].unwrap(), &values);
            let mut best: Option<(usize, Rational)> = None;
            for &k in &g.options[v] {
                if !option_in_region(g, region, k) {
                    continue;
                }
                let val = option_value(g, k, &values);
                if best.as_ref().is_none_or(|(_, b)| val < *b) {
                    best = Some((k, val));
                }
            }
            if let Some((k, val)) = best {
                if val < current {
                    sigma[v] = Some(k);
                    switched = true;
                }
            }
        }
        bound = Some(values);
        if !switched {
            return Ok(Outcome::Done(bound.unwrap()));
        }
    }
}

fn option_in_region(g: &Game, region: &[bool], k: usize) -> bool {
    match &g.inst.constraints[k] {
        Constraint::Const { .. } => true,
        Constraint::MaxLe { .. } => g.live_rhs[k].iter().all(|&v| region[v]),
        Constraint::AvgLe { a, b, .. } => region[*a] && region[*b],
    }
}

/// Decides feasibility. `budget` caps the number of exact linear solves.
pub fn oracle_feasible(inst: &MaxAvgInstance, budget: usize) -> Result<OracleVerdict> {
    if budget == 0 {
        return Err(Error::InvalidArgument("oracle budget must be positive".into()));
    }
    let mut pinned: Vec<Option<&Rational>> = vec![None; inst.vars];
    for c in &inst.constraints {
        if let Constraint::Const { var, value } = c {
            match pinned[*var] {
                Some(prev) if prev != value => {
                    debug!("variable {var} pinned to two different constants");
                    return Ok(OracleVerdict::Infeasible);
                }
                _ => pinned[*var] = Some(value),
            }
        }
    }
    let g = Game::new(inst);
    if let Some(v) = (0..inst.vars).find(|&v| g.forced[v] && pinned[v].is_some()) {
        debug!("constant variable {v} is forced to -inf");
        return Ok(OracleVerdict::Infeasible);
    }
    let (region, sigma) = g.almost_sure_region();
    let violates = |x: &[Rational]| (0..inst.vars).any(|v| pinned[v].is_some_and(|c| x[v] < *c));

    let values = match strategy_iteration(&g, &region, sigma, budget)? {
        Outcome::Done(x) => x,
        Outcome::OutOfBudget(bound) => {
            debug!("oracle budget of {budget} solves exhausted");
            return Ok(match bound {
                Some(x) if violates(&x) => OracleVerdict::Infeasible,
                _ => OracleVerdict::Unknown,
            });
        }
        Outcome::Singular => {
            debug!("singular evaluation system");
            return Ok(OracleVerdict::Unknown);
        }
    };
    if violates(&values) {
        return Ok(OracleVerdict::Infeasible);
    }

    // Variables outside the region are unbounded above. They start at a
    // symbolic large value and settle under their own constraints; values
    // are affine in that symbol and compared lexicographically.
    let mut x: Vec<Symbolic> = (0..inst.vars)
        .map(|v| {
            if g.forced[v] {
                Symbolic::NegInf
            } else if region[v] {
                Symbolic::Affine(Rational::zero(), values[v].clone())
            } else {
                Symbolic::Affine(Rational::one(), Rational::zero())
            }
        })
        .collect();
    let mut settled = false;
    for _ in 0..budget {
        let mut changed = false;
        for c in &inst.constraints {
            let v = c.lhs();
            if g.forced[v] || region[v] {
                continue;
            }
            let rhs = match c {
                Constraint::MaxLe { rhs, .. } => rhs.iter().map(|&w| x[w].clone()).max().unwrap_or(Symbolic::NegInf),
                Constraint::AvgLe { a, b, .. } => Symbolic::average(&x[*a], &x[*b]),
                Constraint::Const { .. } => unreachable!("constant variables lie in the region"),
            };
            if rhs < x[v] {
                x[v] = rhs;
                changed = true;
            }
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled {
        debug!("variables outside the almost-sure region did not settle");
        return Ok(OracleVerdict::Unknown);
    }
    // Every constraint now holds once the symbol is large enough.
    let mut big = Rational::one();
    for _ in 0..256 {
        let a: Assignment = x.iter().map(|s| s.at(&big)).collect();
        if check_assignment(inst, &a) {
            return Ok(OracleVerdict::Feasible(a));
        }
        big = big * Rational::from_integer(2.into());
    }
    debug!("no witness found for variables outside the almost-sure region");
    Ok(OracleVerdict::Unknown)
}

/// `slope * big + offset` for an unspecified large `big`, or −∞.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Symbolic {
    NegInf,
    Affine(Rational, Rational),
}

impl Symbolic {
    fn average(a: &Symbolic, b: &Symbolic) -> Symbolic {
        match (a, b) {
            (Symbolic::Affine(s, o), Symbolic::Affine(t, p)) => Symbolic::Affine((s + t) * half(), (o + p) * half()),
            _ => Symbolic::NegInf,
        }
    }

    fn at(&self, big: &Rational) -> ExtValue {
        match self {
            Symbolic::NegInf => ExtValue::NegInf,
            Symbolic::Affine(s, o) => ExtValue::Finite(s * big + o),
        }
    }
}
