//! Retention time and environmental cost analysis for small coupled-dipole
//! memories.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] defines the Ising system on a coupling graph and the Glauber
//!   single-site update rule.
//! * [`exact`] computes the mean time to data loss as a first-passage time of
//!   the Glauber Markov chain.
//! * [`mc`] is a seeded, worker-count independent Monte Carlo simulator of the
//!   same chain, including a refresh-cycle energy ledger.
//! * [`cost`] combines material, coupling, field and replenishment costs into a
//!   single cost rate.
//! * [`threshold`] finds the replenishment cost at which two configurations
//!   cost the same.
//! * [`sweep`], [`emit`] and [`config`] produce the tabulated curves and read
//!   flat key/value configuration.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cost;
pub mod emit;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod sweep;
pub mod threshold;

pub use cost::{
    coupling_cost, effective_replenishment, field_cost, generalized_cost, scenario_cost,
    CostBreakdown, CostParams, Scenario,
};
pub use error::{Error, Result};
pub use exact::{
    build_transition_matrix, retention_time_exact, tau_closed_form, AbsorptionRule,
    ClosedFormScenario, Method, RetentionResult, EXACT_DIPOLE_CAP,
};
pub use mc::{
    estimate_retention, estimate_retention_with_workers, simulate_energy_ledger, simulate_trial,
    LedgerEstimate, McConfig, McEstimate, TrialOutcome,
};
pub use model::{delta_energy, flip_probability, total_energy, validate, SpinState, SystemSpec, Topology};
pub use threshold::{
    critical_line_vs_triangle, critical_single, critical_three_uncoupled, generic_crossover,
    Configuration, ThresholdResult,
};
