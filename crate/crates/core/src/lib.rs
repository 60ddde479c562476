//! Reduction from stopping simple stochastic games (and parity and mean
//! payoff games) to semidefinite feasibility, with exact oracles at every
//! stage.
//!
//! Pipeline: game → max-average constraints → non-archimedean system over
//! monomials in `t` → SDP instance with `t = 2^K`, where constants become
//! power-of-two gadgets.

pub mod dyadic;
pub mod error;
pub mod gadget;
pub mod games;
pub mod generate;
pub mod linsolve;
pub mod maxavg;
pub mod nonarch;
pub mod pipeline;
pub mod rational;
pub mod realize;
pub mod sdpcore;

pub use dyadic::DyadicValue;
pub use error::{Error, Result};
pub use gadget::{build_pow2_gadget, dual_witness, primal_witness, signed_bits, Pow2Gadget, SignedBits};
pub use games::{
    is_stopping, mpg_to_ssg, parity_to_mpg, parse_mpg, parse_pgsolver, parse_ssg, solve_zielonka, ssg_check_stopping,
    ssg_to_maxavg, ssg_value_bruteforce, ssg_value_iteration, value_iteration_budget, GameValue, ParityGame,
    SimpleStochasticGame, SsgKind, StochasticMeanPayoffGame,
};
pub use maxavg::{
    check_assignment, normalize, oracle_feasible, parse_maxavg, Assignment, Constraint, ExtValue, MaxAvgInstance,
    OracleVerdict, SugaredInstance,
};
pub use nonarch::{lift, monomial_witness, valuations, verify_nonarch, Monomial, NonArchConstraint, NonArchSystem};
pub use pipeline::{run_reduce, InputFormat, OutputFormat, PipelineConfig, PipelineOutput};
pub use rational::Rational;
pub use realize::{compute_params, RealizationParams};
pub use sdpcore::{
    check_witness, conjoin, emit_json, emit_sdpa, frobenius, psd_exact, witness_failures, EmitOptions, SdpInstance,
    SymBlock, WitnessAssignment,
};
