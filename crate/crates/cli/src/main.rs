use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use tropic2sdp_core::games::{mpg_value_bruteforce, ParityOwner, DEFAULT_CAP};
use tropic2sdp_core::generate::{gen_chain_ssg, gen_random_maxavg, gen_random_mpg, gen_random_parity, gen_random_ssg};
use tropic2sdp_core::maxavg::normalize;
use tropic2sdp_core::pipeline::{to_constraints, DEFAULT_BUDGET};
use tropic2sdp_core::rational::format_rational;
use tropic2sdp_core::realize::DEFAULT_M;
use tropic2sdp_core::sdpcore::{parse_json, witness_failures};
use tropic2sdp_core::*;

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CONTRACT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "tropic2sdp", version, about = "Reduce stochastic games to semidefinite feasibility")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce an input file to an SDP feasibility instance.
    Reduce {
        input: PathBuf,
        #[command(flatten)]
        opts: PipelineArgs,
        /// Write the forward witness here when the oracle finds a solution.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Run the exact oracles on an input file and print a JSON report.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        opts: PipelineArgs,
    },
    /// Check a witness against an SDP instance (a JSON instance, or any
    /// input the pipeline accepts).
    Check {
        input: PathBuf,
        witness: PathBuf,
        #[command(flatten)]
        opts: PipelineArgs,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long, value_enum, default_value = "ssg")]
        kind: GenKind,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the pipeline on generated games, several at once.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "qe-constant", default_value_t = DEFAULT_M)]
        m: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum From {
    Parity,
    Mpg,
    Ssg,
    Maxavg,
    /// A JSON instance written by `reduce --format json`.
    Sdp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Sdpa,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Ssg,
    Chain,
    Maxavg,
    Parity,
    Mpg,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value = "ssg")]
    from: From,
    /// Query node (source id for parity games).
    #[arg(long, default_value_t = 0)]
    target: u64,
    #[arg(long = "qe-constant", default_value_t = DEFAULT_M)]
    m: u32,
    /// Use this K instead of the derived one; must be a multiple of D.
    #[arg(long = "override-K")]
    override_k: Option<BigInt>,
    #[arg(long, value_enum, default_value = "sdpa")]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node cap for brute-force oracles.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Linear solves allowed to the max-average oracle.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit every 1x1 block as its own SDPA block.
    #[arg(long)]
    no_diag_pack: bool,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, Failure> {
        let from = match self.from {
            From::Parity => InputFormat::Parity,
            From::Mpg => InputFormat::Mpg,
            From::Ssg => InputFormat::Ssg,
            From::Maxavg => InputFormat::MaxAvg,
            From::Sdp => return Err(Failure::input("--from sdp only applies to check")),
        };
        Ok(PipelineConfig {
            from,
            target: self.target,
            m: self.m,
            override_k: self.override_k.clone(),
            format: match self.format {
                Format::Sdpa => OutputFormat::Sdpa,
                Format::Json => OutputFormat::Json,
            },
            seed: self.seed,
            cap: self.cap,
            budget: self.budget,
            diag_pack: !self.no_diag_pack,
        })
    }
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            msg: msg.into(),
        }
    }
}

impl std::convert::From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotStopping(_) | Error::CapExceeded { .. } => EXIT_CONTRACT,
            Error::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value") + "\n"
}

fn reduce(input: &Path, opts: &PipelineArgs, witness_out: Option<&Path>) -> Result<(), Failure> {
    let cfg = opts.config()?;
    let out = run_reduce(&read(input)?, &cfg)?;
    write_or_print(opts.out.as_deref(), &out.text)?;
    let report = json!({
        "metadata": out.sdp.metadata,
        "blocks": out.sdp.blocks.len(),
        "variables": out.sdp.vars.len(),
        "bytes": out.text.len(),
    });
    if let Some(p) = &opts.out {
        let mut meta = p.clone().into_os_string();
        meta.push(".meta.json");
        write_or_print(Some(Path::new(&meta)), &pretty(&report))?;
    }
    if let Some(p) = witness_out {
        match &out.witness {
            Some(w) => write_or_print(Some(p), &(w.to_json() + "\n"))?,
            None => log::warn!("no forward witness at this K (oracle: {})", out.verdict.label()),
        }
    }
    eprintln!(
        "{} blocks, {} variables, K = {} ({} bits), oracle {}",
        out.sdp.blocks.len(),
        out.sdp.vars.len(),
        out.params.k,
        out.params.k.bits(),
        out.verdict.label()
    );
    Ok(())
}

fn rationals(v: &[Rational]) -> Value {
    json!(v.iter().map(format_rational).collect::<Vec<_>>())
}

fn verdict_json(v: &OracleVerdict) -> Value {
    match v {
        OracleVerdict::Feasible(a) => json!({
            "verdict": v.label(),
            "assignment": a.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        }),
        _ => json!({ "verdict": v.label() }),
    }
}

fn solve(input: &Path, opts: &PipelineArgs) -> Result<(), Failure> {
    let cfg = opts.config()?;
    let text = read(input)?;
    let mut report = serde_json::Map::new();
    match cfg.from {
        InputFormat::Ssg => {
            let g = parse_ssg(&text)?;
            let values = ssg_value_bruteforce(&g, cfg.cap)?;
            let iters = value_iteration_budget(&g, 60)?;
            report.insert("values".into(), rationals(&values.values));
            report.insert("value_iteration_steps".into(), json!(iters));
        }
        InputFormat::Mpg => {
            let g = parse_mpg(&text)?;
            report.insert("values".into(), rationals(&mpg_value_bruteforce(&g, cfg.cap)?.values));
        }
        InputFormat::Parity => {
            let g = parse_pgsolver(&text)?;
            let winners: Vec<&str> = solve_zielonka(&g)
                .into_iter()
                .map(|w| if w == ParityOwner::Even { "even" } else { "odd" })
                .collect();
            report.insert("winners".into(), json!(winners));
            if g.len() <= cfg.cap {
                report.insert("mean_payoff".into(), rationals(&mpg_value_bruteforce(&parity_to_mpg(&g), cfg.cap)?.values));
            }
        }
        InputFormat::MaxAvg => {}
    }
    let inst = normalize(&to_constraints(&text, &cfg)?).instance;
    report.insert("threshold_query".into(), verdict_json(&oracle_feasible(&inst, cfg.budget)?));
    write_or_print(opts.out.as_deref(), &pretty(&Value::Object(report)))
}

fn check(input: &Path, witness: &Path, opts: &PipelineArgs) -> Result<bool, Failure> {
    let inst = match opts.from {
        From::Sdp => parse_json(&read(input)?)?,
        _ => run_reduce(&read(input)?, &opts.config()?)?.sdp,
    };
    let w = WitnessAssignment::from_json(&read(witness)?)?;
    let failures = witness_failures(&inst, &w)?;
    if failures.is_empty() {
        println!("PASS {} blocks", inst.blocks.len());
        Ok(true)
    } else {
        println!("FAIL {} of {} blocks", failures.len(), inst.blocks.len());
        for f in failures {
            println!("  {f}");
        }
        Ok(false)
    }
}

fn gen(kind: GenKind, size: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    if size < 1 {
        return Err(Failure::input("size must be at least 1"));
    }
    let text = match kind {
        GenKind::Ssg => gen_random_ssg(seed, size).to_text(),
        GenKind::Chain => gen_chain_ssg(size).to_text(),
        GenKind::Maxavg => gen_random_maxavg(seed, size).to_text(),
        GenKind::Parity => gen_random_parity(seed, size).to_pgsolver(),
        GenKind::Mpg => gen_random_mpg(seed, size).to_text(),
    };
    write_or_print(out, &text)
}

fn bench(sizes: &[usize], count: u64, seed: u64, m: u32) -> Result<(), Failure> {
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| (seed..seed + count).map(move |s| (n, s)))
        .collect();
    let results: Vec<Result<(usize, u64, usize, u128, &'static str), Error>> = std::thread::scope(|sc| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(n, s)| {
                sc.spawn(move || {
                    let text = gen_random_ssg(s, n).to_text();
                    let cfg = PipelineConfig {
                        m,
                        seed: s,
                        ..PipelineConfig::default()
                    };
                    let start = Instant::now();
                    let out = run_reduce(&text, &cfg)?;
                    Ok((n, s, out.text.len(), start.elapsed().as_millis(), out.verdict.label()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });
    println!("size\tseed\tbytes\tms\toracle");
    for r in results {
        let (n, s, bytes, ms, verdict) = r?;
        println!("{n}\t{s}\t{bytes}\t{ms}\t{verdict}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match &cli.cmd {
        Command::Reduce {
            input,
            opts,
            witness_out,
        } => reduce(input, opts, witness_out.as_deref()).map(|_| true),
        Command::Solve { input, opts } => solve(input, opts).map(|_| true),
        Command::Check { input, witness, opts } => check(input, witness, opts),
        Command::Gen { kind, size, seed, out } => gen(*kind, *size, *seed, out.as_deref()).map(|_| true),
        Command::Bench { sizes, count, seed, m } => bench(sizes, *count, *seed, *m).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TROPIC2SDP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
