//! End-to-end reduction: game or constraint file to SDP feasibility instance.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use serde_json::json;

use crate::error::{Error, Result};
use crate::games::{mpg_to_ssg, parity_to_mpg, parse_mpg, parse_pgsolver, parse_ssg, ssg_to_sugared, DEFAULT_CAP};
use crate::maxavg::{normalize, oracle_feasible, parse_maxavg, MaxAvgInstance, OracleVerdict, SugaredInstance};
use crate::nonarch::{lift, NonArchSystem};
use crate::realize::{compute_params_with_vars, RealizationParams, DEFAULT_M};
use crate::sdpcore::{assemble, build_gadgets, emit_json, emit_sdpa, forward_witness, EmitOptions, GadgetTable, SdpInstance, WitnessAssignment};

pub const DEFAULT_BUDGET: usize = 10_000;
pub const UNSOUND_THRESHOLD_TAG: &str = "unsound-threshold";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    Parity,
    Mpg,
    Ssg,
    MaxAvg,
}

impl FromStr for InputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parity" => Ok(InputFormat::Parity),
            "mpg" => Ok(InputFormat::Mpg),
            "ssg" => Ok(InputFormat::Ssg),
            "maxavg" => Ok(InputFormat::MaxAvg),
            _ => Err(Error::InvalidArgument(format!("unknown input format {s:?}"))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Parity => "parity",
            InputFormat::Mpg => "mpg",
            InputFormat::Ssg => "ssg",
            InputFormat::MaxAvg => "maxavg",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Sdpa,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdpa" => Ok(OutputFormat::Sdpa),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidArgument(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub from: InputFormat,
    /// Query node for game inputs (the source id for parity files).
    pub target: u64,
    pub m: u32,
    pub override_k: Option<BigInt>,
    pub format: OutputFormat,
    pub seed: u64,
    pub cap: usize,
    pub budget: usize,
    pub diag_pack: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            from: InputFormat::Ssg,
            target: 0,
            m: DEFAULT_M,
            override_k: None,
            format: OutputFormat::Sdpa,
            seed: 0,
            cap: DEFAULT_CAP,
            budget: DEFAULT_BUDGET,
            diag_pack: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub sugared: SugaredInstance,
    pub instance: MaxAvgInstance,
    pub system: NonArchSystem,
    pub params: RealizationParams,
    pub gadgets: GadgetTable,
    pub sdp: SdpInstance,
    pub verdict: OracleVerdict,
    /// Forward witness when the oracle found a solution whose values all
    /// become integer exponents at the chosen `K`.
    pub witness: Option<WitnessAssignment>,
    pub text: String,
}

fn target_index(target: u64, len: usize) -> Result<usize> {
    usize::try_from(target)
        .ok()
        .filter(|&t| t < len)
        .ok_or_else(|| Error::InvalidArgument(format!("target {target} out of range for {len} nodes")))
}

/// Parses the input and reduces it to a constraint system whose feasibility
/// answers the query.
pub fn to_constraints(text: &str, cfg: &PipelineConfig) -> Result<SugaredInstance> {
    match cfg.from {
        InputFormat::Parity => {
            let g = parse_pgsolver(text)?;
            let t = g
                .node_of_source_id(cfg.target)
                .ok_or_else(|| Error::InvalidArgument(format!("no node with id {}", cfg.target)))?;
            let emb = mpg_to_ssg(&parity_to_mpg(&g), t)?;
            ssg_to_sugared(&emb.game, emb.query)
        }
        InputFormat::Mpg => {
            let g = parse_mpg(text)?;
            let emb = mpg_to_ssg(&g, target_index(cfg.target, g.len())?)?;
            ssg_to_sugared(&emb.game, emb.query)
        }
        InputFormat::Ssg => {
            let g = parse_ssg(text)?;
            ssg_to_sugared(&g, target_index(cfg.target, g.len())?)
        }
        InputFormat::MaxAvg => parse_maxavg(text),
    }
}

pub fn run_reduce(text: &str, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let sugared = to_constraints(text, cfg)?;
    let normalized = normalize(&sugared);
    let instance = normalized.instance;
    log::info!(
        "constraint system: {} variables ({} before normalization), {} constraints",
        instance.vars,
        sugared.vars,
        instance.constraints.len()
    );
    let mut params = compute_params_with_vars(&instance, cfg.m, sugared.vars)?;
    if let Some(k) = &cfg.override_k {
        params = params.with_override_k(k.clone())?;
    }
    log::info!("K has {} bits", params.k.bits());
    let system = lift(&instance);
    let gadgets = build_gadgets(&params);
    let mut sdp = assemble(&system, &params, &gadgets)?;
    let verdict = oracle_feasible(&instance, cfg.budget)?;
    log::info!("oracle verdict: {}", verdict.label());

    let witness = match &verdict {
        OracleVerdict::Feasible(a) => {
            let integral = a.iter().all(|v| v.finite().is_none_or(|q| params.k.is_multiple_of(q.denom())));
            if integral {
                Some(forward_witness(&system, &params, &gadgets, a)?)
            } else {
                None
            }
        }
        _ => None,
    };

    let mut tags = Vec::new();
    if params.overridden {
        tags.push(UNSOUND_THRESHOLD_TAG);
    }
    sdp.metadata.insert("params".into(), serde_json::to_value(params.report()).expect("report serializes"));
    sdp.metadata.insert(
        "source".into(),
        json!({
            "format": cfg.from.to_string(),
            "target": cfg.target,
            "variables": sugared.vars,
            "normalized_variables": instance.vars,
            "constraints": instance.constraints.len(),
        }),
    );
    sdp.metadata.insert("oracle".into(), json!(verdict.label()));
    sdp.metadata.insert("seed".into(), json!(cfg.seed));
    sdp.metadata.insert("tags".into(), json!(tags));

    let text = match cfg.format {
        OutputFormat::Sdpa => emit_sdpa(&sdp, EmitOptions { diag_pack: cfg.diag_pack })?,
        OutputFormat::Json => emit_json(&sdp),
    };
    Ok(PipelineOutput {
        sugared,
        instance,
        system,
        params,
        gadgets,
        sdp,
        verdict,
        witness,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpcore::check_witness;

    const COIN: &str = "ssg 3\n0 AVG 1 2\n1 WIN\n2 LOSE\n";

    fn cfg(from: InputFormat, m: u32) -> PipelineConfig {
        PipelineConfig {
            from,
            m,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn coin_flip_parameters() {
        let out = run_reduce(COIN, &cfg(InputFormat::Ssg, 1)).unwrap();
        assert_eq!(out.params.w, BigInt::from(5));
        assert_eq!(out.params.d, BigInt::from(2));
        assert_eq!(out.params.k, BigInt::from(500));
        assert!(out.verdict.is_feasible());
        let meta = &out.sdp.metadata;
        assert_eq!(meta["params"]["K"], "500");
        assert_eq!(meta["oracle"], "Feasible");
        assert_eq!(meta["tags"], json!([]));
        assert!(out.text.starts_with("* tropic2sdp {"));
        assert!(check_witness(&out.sdp, out.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn override_is_tagged_and_checked() {
        let mut c = cfg(InputFormat::Ssg, 1);
        c.override_k = Some(BigInt::from(4));
        let out = run_reduce(COIN, &c).unwrap();
        assert_eq!(out.sdp.metadata["tags"], json!([UNSOUND_THRESHOLD_TAG]));
        assert!(check_witness(&out.sdp, out.witness.as_ref().unwrap()).unwrap());
        c.override_k = Some(BigInt::from(3));
        assert!(matches!(run_reduce(COIN, &c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn even_self_loop_is_feasible() {
        let out = run_reduce("parity 0;\n0 0 0 0;\n", &cfg(InputFormat::Parity, 1)).unwrap();
        assert!(out.verdict.is_feasible());
    }

    #[test]
    fn contradictory_constants() {
        let out = run_reduce("maxavg 1\nCONST 0 0\nCONST 0 1\n", &cfg(InputFormat::MaxAvg, 1)).unwrap();
        assert_eq!(out.verdict, OracleVerdict::Infeasible);
        assert!(out.witness.is_none());
        assert_eq!(out.sdp.metadata["oracle"], "Infeasible");
    }

    #[test]
    fn deterministic_output() {
        let a = run_reduce(COIN, &PipelineConfig::default()).unwrap();
        let b = run_reduce(COIN, &PipelineConfig::default()).unwrap();
        assert_eq!(a.text, b.text);
        let j = run_reduce(
            COIN,
            &PipelineConfig {
                format: OutputFormat::Json,
                ..PipelineConfig::default()
            },
        )
        .unwrap();
        assert_eq!(crate::sdpcore::parse_json(&j.text).unwrap(), j.sdp);
    }

    #[test]
    fn input_errors() {
        let c = PipelineConfig {
            target: 7,
            ..PipelineConfig::default()
        };
        assert!(matches!(run_reduce(COIN, &c), Err(Error::InvalidArgument(_))));
        assert!(matches!(run_reduce("ssg 1\n0 MAX 0\n", &PipelineConfig::default()), Err(Error::NotStopping(_))));
        assert!(run_reduce("garbage", &PipelineConfig::default()).is_err());
        assert!("dot".parse::<InputFormat>().is_err());
        assert_eq!("maxavg".parse::<InputFormat>().unwrap(), InputFormat::MaxAvg);
    }
}
