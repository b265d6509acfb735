//! Time-domain integration of the four-stage switching model, stability
//! classification, the bisection clearing-time oracle, basin mapping and farm
//! aggregation.

mod basin;
mod farm;
pub(crate) mod integrator;
mod oracle;
mod scenario;
mod trajectory;
mod verdict;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

pub use basin::{basin_map, fate_at_stage3_entry, frozen_verdict, BasinMap, BasinWindow, BASIN_HORIZON};
pub use farm::{aggregate_farm, FarmSpec};
pub use integrator::{IntegratorConfig, Method, MIN_ADAPTIVE_STEP};
pub use oracle::{
    oracle_cct, oracle_cct_with, OracleOptions, OracleResult, Probe, BISECTION_TOL,
    MAX_PROBE_DURATION,
};
pub use scenario::{
    default_horizon, recovery_verdict, simulate_gse, simulate_scenario, simulate_scenario_verdict,
    stability_target,
};
pub use trajectory::{JumpEvent, Sample, Stage, Trajectory};
pub use verdict::{
    classify_stability, omega_limit, StabilityReason, StabilityTarget, StabilityVerdict,
    DEFAULT_SETTLE_WINDOW, OMEGA_LIMIT_UNIT, SETTLE_OMEGA_TOL, SETTLE_PHI_TOL, UEP_MARGIN,
};

/// Which end of the clearing-time axis failed to bracket the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoBracketKind {
    /// Even the longest probe recovers.
    AlwaysStable,
    /// Even immediate clearing loses synchronism.
    AlwaysUnstable,
}

impl fmt::Display for NoBracketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoBracketKind::AlwaysStable => "always stable",
            NoBracketKind::AlwaysUnstable => "always unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("adaptive step underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scenario has no clearing time (t_clear)")]
    MissingClearingTime,
    #[error("no-bracket: {0}")]
    NoBracket(NoBracketKind),
    #[error(
        "stability is not monotone in the clearing time: duration {unstable_at} s is unstable \
         but {stable_at} s is stable"
    )]
    MonotonicityViolated { unstable_at: f64, stable_at: f64 },
}
