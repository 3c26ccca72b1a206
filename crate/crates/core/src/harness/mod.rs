//! Measurement of every constant in the L∞ estimate chain on computed solutions.

pub mod certify;
pub mod comparison;
pub mod constants;
pub mod degiorgi;
pub mod entropy;
pub mod experiment;
pub mod families;
pub mod sublevel;

pub use certify::{certify_bound, chain_terms, Certificate, CertifyInputs, ChainTerms};
pub use comparison::{
    alpha_scan, alpha_threshold, beta_threshold, comparison_check, comparison_epsilon, comparison_margin, run_comparison, trudinger_alpha_chain,
    trudinger_check, trudinger_constant, ComparisonRun, ExpScan,
};
pub use constants::{
    choose_constants, delta0, power_constant, young_check, young_constant, ConstantLedger, C0_SAFETY,
};
pub use degiorgi::{c1_closed_form, degiorgi_iterate, equality_profile, table_profile, DeGiorgiOutcome};
pub use entropy::{entropy_norm, l1_estimate};
pub use experiment::{
    measure, recovery_error, run_experiment, solve_instance, sweep_members, sweep_summary, write_experiment_tables,
    write_sweep_table, ExperimentRecord, FamilySpec, HarnessConfig, ModelConfig, RunConfig, Solved, SolverConfig,
    SweepMember, SweepRow, SWEEP_COLUMNS,
};
pub use families::{generate, spike_family, FSpec, TrigTerm};
pub use sublevel::{a_phi_fit, phi_a_check, sublevel_scan, BallData, PhiACheck, SublevelStats};
