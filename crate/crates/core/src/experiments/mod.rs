//! Measurements built on the integrator: collapse time scales and Born-rule
//! ensembles.

pub mod born;
pub mod timescale;

pub use born::{
    binomial_ci95, born_ensemble, collapse_trial, gambler_oracle, ruin_probability, BornResult,
    GamblerRule, OracleResult, TrialOutcome, TrialSetup,
};
pub use timescale::{
    fit_power_law, limits_table, localization_time, log_space, relocation_time, scaling_sweep,
    LimitsTable, Measure, ScalingResult, SweepParameter, TimeScaleSetup,
};
