//! The robust soft-threshold Dikin walk and a hit-and-run baseline.

mod chain;
mod hit_and_run;
mod params;
mod target;

pub use chain::{
    acceptance_log_ratio, acceptance_probability, evaluate_metric, log_ratio_from_values, propose, propose_with,
    run_chain, step, ChainOutput, ChainState, ChainSummary, Counters, PhaseTimings, RunReport, StepOutcome,
};
pub use hit_and_run::{hit_and_run_along, hit_and_run_step, run_hit_and_run};
pub use params::{
    auto_thin, default_params, params_from_config, step_count, HessianMode, WalkConfig, WalkParams,
    DEFAULT_KEPT_SAMPLES, EPS_H_WARNING_THRESHOLD,
};
pub use target::{quadratic_from_rows, FnPotential, Linear, Potential, Quadratic, Target, Uniform};
