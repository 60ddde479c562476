//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tropic2sdp_core::gadget::check_gadget_witnesses;
use tropic2sdp_core::games::{mpg_value_bruteforce, ParityOwner};
use tropic2sdp_core::generate::{gen_chain_ssg, gen_random_maxavg, gen_random_parity, gen_random_ssg};
use tropic2sdp_core::realize::compute_params_with_vars;
use tropic2sdp_core::sdpcore::{assemble, build_gadgets, forward_witness, psd_by_principal_minors};
use tropic2sdp_core::*;

const GAME_CORPUS: usize = 200;
const GAME_MAX_NODES: usize = 8;
const VI_GAP_BITS: u32 = 60;
const GAME_TIME_LIMIT: Duration = Duration::from_secs(60);
const NONARCH_CORPUS: usize = 500;
const GADGET_RANGE: i64 = 16;
const GADGET_RANDOM: usize = 50;
const GADGET_RANDOM_MAX: i64 = 1 << 20;
const GADGET_TIME_LIMIT: Duration = Duration::from_secs(120);
const FORWARD_CORPUS: usize = 100;
const CHAIN_SIZES: [usize; 5] = [4, 8, 16, 32, 64];
const SIZE_RATIO_MAX: f64 = 9.0;
const PSD_MAX_DIM: usize = 4;
const PSD_ENTRY_RANGE: i128 = 2;
const PARITY_CORPUS: usize = 50;
const PARITY_MAX_NODES: usize = 7;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

/// Seeded games with at most `GAME_MAX_NODES` nodes including terminals.
fn game_corpus() -> Vec<SimpleStochasticGame> {
    (0..GAME_CORPUS as u64)
        .map(|seed| gen_random_ssg(seed, 1 + (seed as usize % (GAME_MAX_NODES - 2))))
        .collect()
}

fn game_oracles(rep: &mut Report) {
    let start = Instant::now();
    let corpus = game_corpus();
    let bound = Rational::new(BigInt::one(), BigInt::one() << VI_GAP_BITS);
    let mut bad = Vec::new();
    for (seed, g) in corpus.iter().enumerate() {
        // the brute-force oracle fails if max-min and min-max differ anywhere
        let bf = match ssg_value_bruteforce(g, 10) {
            Ok(v) => v.values,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let iters = value_iteration_budget(g, VI_GAP_BITS).unwrap();
        let vi = ssg_value_iteration(g, iters);
        for u in 0..g.len() {
            let gap = &bf[u] - &vi[u];
            if gap < Rational::zero() || gap >= bound {
                bad.push(format!("seed {seed} node {u}: gap {gap}"));
            }
        }
    }
    let coin = parse_ssg("ssg 3\n0 AVG 1 2\n1 WIN\n2 LOSE\n").unwrap();
    let coin_ok = ssg_value_bruteforce(&coin, 10).unwrap().values[0] == Rational::new(1.into(), 2.into());
    let chain_ok = ssg_value_bruteforce(&gen_chain_ssg(2), 10).unwrap().values[0] == Rational::new(1.into(), 4.into());
    let elapsed = start.elapsed();
    rep.line(
        "game oracles agree",
        bad.is_empty() && coin_ok && chain_ok && elapsed < GAME_TIME_LIMIT,
        format!(
            "{} games, {} disagreements, coin 1/2 {}, chain 1/4 {}, {:.1?} (limit {:?}){}",
            corpus.len(),
            bad.len(),
            coin_ok,
            chain_ok,
            elapsed,
            GAME_TIME_LIMIT,
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn value_threshold(rep: &mut Report) {
    let half = Rational::new(1.into(), 2.into());
    let mut checked = 0;
    let mut feasible = 0;
    let mut bad = Vec::new();
    for (seed, g) in game_corpus().iter().enumerate() {
        let values = ssg_value_bruteforce(g, 10).unwrap().values;
        for k in 0..g.len() {
            let inst = ssg_to_maxavg(g, k).unwrap();
            let verdict = oracle_feasible(&inst, 10_000).unwrap();
            let expect = values[k] >= half;
            checked += 1;
            let ok = match &verdict {
                OracleVerdict::Feasible(a) => expect && check_assignment(&inst, a),
                OracleVerdict::Infeasible => !expect,
                OracleVerdict::Unknown => false,
            };
            feasible += usize::from(expect);
            if !ok {
                bad.push(format!("seed {seed} node {k}: value {} oracle {}", values[k], verdict.label()));
            }
        }
    }
    rep.line(
        "threshold feasibility matches game value",
        bad.is_empty(),
        format!(
            "{checked} queries ({feasible} with value >= 1/2), {} disagreements{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn random_ext(r: &mut ChaCha8Rng) -> ExtValue {
    if r.random_bool(0.1) {
        ExtValue::NegInf
    } else {
        let den = [1i64, 2, 4][r.random_range(0..3)];
        ExtValue::Finite(Rational::new(r.random_range(-3 * den..=3 * den).into(), den.into()))
    }
}

fn nonarch_equivalence(rep: &mut Report) {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let (mut fwd_cases, mut fwd_bad, mut back_cases, mut back_bad) = (0, 0, 0, 0);
    for seed in 0..NONARCH_CORPUS as u64 {
        let inst = gen_random_maxavg(seed, 2 + (seed as usize % 5));
        let sys = lift(&inst);
        // assignments: the oracle's witness when it has one, plus random ones
        let mut assignments: Vec<Vec<ExtValue>> = Vec::new();
        if let OracleVerdict::Feasible(a) = oracle_feasible(&inst, 10_000).unwrap() {
            assignments.push(a);
        }
        for _ in 0..20 {
            assignments.push((0..inst.vars).map(|_| random_ext(&mut r)).collect());
        }
        for a in &assignments {
            if check_assignment(&inst, a) {
                fwd_cases += 1;
                if !verify_nonarch(&sys, &monomial_witness(a)) {
                    fwd_bad += 1;
                }
            }
        }
        // monomial vectors: scaled versions of the assignments above
        for a in &assignments {
            let w: Vec<Monomial> = monomial_witness(a)
                .into_iter()
                .map(|m| {
                    let c = [Rational::one(), Rational::one(), Rational::new(1.into(), 2.into()), Rational::from_integer(3.into())]
                        [r.random_range(0..4)]
                        .clone();
                    if m.is_zero() {
                        m
                    } else {
                        Monomial::new(c, m.exp().clone()).unwrap()
                    }
                })
                .collect();
            for cand in [monomial_witness(a), w] {
                if verify_nonarch(&sys, &cand) {
                    back_cases += 1;
                    if !check_assignment(&inst, &valuations(&cand)) {
                        back_bad += 1;
                    }
                }
            }
        }
    }
    rep.line(
        "monomial lift both directions",
        fwd_bad == 0 && back_bad == 0 && fwd_cases > 0 && back_cases > 0,
        format!(
            "{NONARCH_CORPUS} instances; forward {}/{fwd_cases}, backward {}/{back_cases}",
            fwd_cases - fwd_bad,
            back_cases - back_bad
        ),
    );
}

fn gadget_case(n: &BigInt) -> Result<(bool, bool, usize, usize)> {
    let certs = check_gadget_witnesses(n)?.all();
    let g = build_pow2_gadget(n);
    let inst = g.to_instance("g");
    let w = g.witness("g");
    let full = check_witness(&inst, &WitnessAssignment::new(w.clone()))?;
    let mut caught = 0;
    let mut tried = 0;
    for l in 0..g.len() {
        let name = Pow2Gadget::primal_name("g", l);
        for shift in [-1i64, 1] {
            let mut p = w.clone();
            p.insert(name.clone(), p[&name].shl(&BigInt::from(shift)));
            tried += 1;
            if !check_witness(&inst, &WitnessAssignment::new(p))? {
                caught += 1;
            }
        }
    }
    Ok((certs, full, caught, tried))
}

fn gadget_exactness(rep: &mut Report) {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut ns: Vec<i64> = (-GADGET_RANGE..=GADGET_RANGE).collect();
    ns.extend((0..GADGET_RANDOM).map(|_| r.random_range(-GADGET_RANDOM_MAX..=GADGET_RANDOM_MAX)));
    let mut bad = Vec::new();
    let (mut caught, mut tried) = (0, 0);
    for &n in &ns {
        match gadget_case(&BigInt::from(n)) {
            Ok((certs, full, c, t)) => {
                caught += c;
                tried += t;
                if !certs || !full || c != t {
                    bad.push(format!("n = {n}: certificates {certs}, instance {full}, perturbations {c}/{t}"));
                }
            }
            Err(e) => bad.push(format!("n = {n}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    rep.line(
        "power-of-two gadget exactness",
        bad.is_empty() && elapsed < GADGET_TIME_LIMIT,
        format!(
            "{} exponents, {caught}/{tried} perturbations rejected, {:.1?} (limit {:?}){}",
            ns.len(),
            elapsed,
            GADGET_TIME_LIMIT,
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn forward_soundness(rep: &mut Report) {
    let half = Rational::new(1.into(), 2.into());
    let mut done = 0;
    let mut bad = Vec::new();
    let mut max_k = BigInt::zero();
    'outer: for seed in 1000u64.. {
        let g = gen_random_ssg(seed, 2 + (seed as usize % 5));
        let values = ssg_value_bruteforce(&g, 10).unwrap().values;
        for k in (0..g.len()).filter(|&k| !g.kind[k].is_terminal() && values[k] >= half) {
            if done == FORWARD_CORPUS {
                break 'outer;
            }
            done += 1;
            let inst = ssg_to_maxavg(&g, k).unwrap();
            let OracleVerdict::Feasible(a) = oracle_feasible(&inst, 10_000).unwrap() else {
                bad.push(format!("seed {seed} node {k}: oracle found no solution"));
                continue;
            };
            let params = compute_params_with_vars(&inst, 1, g.len()).unwrap();
            let k_small = a
                .iter()
                .filter_map(|v| v.finite())
                .fold(params.d.clone(), |acc, q| acc.lcm(q.denom()));
            let params = params.with_override_k(k_small.clone()).unwrap();
            max_k = max_k.max(k_small);
            let sys = lift(&inst);
            let gadgets = build_gadgets(&params);
            let ok = assemble(&sys, &params, &gadgets)
                .and_then(|sdp| check_witness(&sdp, &forward_witness(&sys, &params, &gadgets, &a)?));
            if !matches!(ok, Ok(true)) {
                bad.push(format!("seed {seed} node {k}: {ok:?}"));
            }
        }
    }
    rep.line(
        "forward witness passes the SDP",
        bad.is_empty() && done == FORWARD_CORPUS,
        format!(
            "{}/{done} instances, largest K {max_k}{}",
            done - bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn polynomial_size(rep: &mut Report) {
    let mut sizes = Vec::new();
    let mut bad = Vec::new();
    for &n in &CHAIN_SIZES {
        let cfg = PipelineConfig::default();
        let out = match run_reduce(&gen_chain_ssg(n).to_text(), &cfg) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("chain {n}: {e}"));
                continue;
            }
        };
        let p = &out.params;
        if p.k.bits() > p.k_bit_bound() {
            bad.push(format!("chain {n}: K has {} bits, bound {}", p.k.bits(), p.k_bit_bound()));
        }
        sizes.push((n, out.text.len()));
    }
    let ratios: Vec<f64> = sizes.windows(2).map(|w| w[1].1 as f64 / w[0].1 as f64).collect();
    if let Some(r) = ratios.iter().find(|&&r| r > SIZE_RATIO_MAX) {
        bad.push(format!("ratio {r:.2} exceeds {SIZE_RATIO_MAX}"));
    }
    rep.line(
        "polynomial output size",
        bad.is_empty() && sizes.len() == CHAIN_SIZES.len(),
        format!(
            "bytes {:?}, doubling ratios {:?}, K within bit bound{}",
            sizes,
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn psd_exhaustive(rep: &mut Report) {
    let vals: Vec<i128> = (-PSD_ENTRY_RANGE..=PSD_ENTRY_RANGE).collect();
    let base = vals.len() as u64;
    let mut total = 0u64;
    let mut mismatches = 0u64;
    let mut first = None;
    for dim in 1..=PSD_MAX_DIM {
        let slots: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
        let count = base.pow(slots.len() as u32);
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get()) as u64;
        let per = count.div_ceil(threads);
        let results: Vec<(u64, Option<Vec<Vec<i128>>>)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let (slots, vals) = (&slots, &vals);
                    s.spawn(move || {
                        let mut bad = 0u64;
                        let mut example = None;
                        let mut m = vec![vec![0i128; dim]; dim];
                        for code in t * per..((t + 1) * per).min(count) {
                            let mut c = code;
                            for &(i, j) in slots {
                                let v = vals[(c % base) as usize];
                                c /= base;
                                m[i][j] = v;
                                m[j][i] = v;
                            }
                            if psd_exact(&m).unwrap() != psd_by_principal_minors(&m) {
                                bad += 1;
                                example.get_or_insert_with(|| m.clone());
                            }
                        }
                        (bad, example)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        total += count;
        for (b, ex) in results {
            mismatches += b;
            if first.is_none() {
                first = ex;
            }
        }
    }
    rep.line(
        "exact PSD test matches principal minors",
        mismatches == 0,
        format!(
            "{total} symmetric matrices of dimension <= {PSD_MAX_DIM}, {mismatches} mismatches{}",
            first.map(|m| format!("; first: {m:?}")).unwrap_or_default()
        ),
    );
}

fn parity_reduction(rep: &mut Report) {
    let mut bad = Vec::new();
    let mut nodes = 0;
    for seed in 0..PARITY_CORPUS as u64 {
        let g = gen_random_parity(seed, 1 + (seed as usize % PARITY_MAX_NODES));
        let zielonka = solve_zielonka(&g);
        let values = match mpg_value_bruteforce(&parity_to_mpg(&g), 10) {
            Ok(v) => v.values,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        for u in 0..g.len() {
            nodes += 1;
            let by_sign = if values[u] > Rational::zero() { ParityOwner::Even } else { ParityOwner::Odd };
            if values[u].is_zero() || by_sign != zielonka[u] {
                bad.push(format!("seed {seed} node {u}: mean payoff {} vs {:?}", values[u], zielonka[u]));
            }
        }
    }
    rep.line(
        "parity winners by mean payoff sign",
        bad.is_empty(),
        format!(
            "{PARITY_CORPUS} games, {nodes} nodes, {} disagreements{}",
            bad.len(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn main() -> ExitCode {
    let mut rep = Report { failed: 0 };
    game_oracles(&mut rep);
    value_threshold(&mut rep);
    nonarch_equivalence(&mut rep);
    gadget_exactness(&mut rep);
    forward_soundness(&mut rep);
    polynomial_size(&mut rep);
    psd_exhaustive(&mut rep);
    parity_reduction(&mut rep);
    if rep.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", rep.failed);
        ExitCode::FAILURE
    }
}
