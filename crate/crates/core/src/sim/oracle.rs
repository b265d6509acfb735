use serde::{Deserialize, Serialize};

use super::integrator::IntegratorConfig;
use super::scenario::{default_horizon, simulate_scenario_verdict};
use super::verdict::StabilityReason;
use super::{NoBracketKind, SimError};
use crate::model::{Scenario, SystemParams};

/// Width of the final stable/unstable bracket on the fault duration, s.
pub const BISECTION_TOL: f64 = 5e-4;
/// Longest fault duration tried before declaring the scenario always stable, s.
pub const MAX_PROBE_DURATION: f64 = 5.0;
/// First upper probe of the bracket expansion, s.
const FIRST_UPPER_PROBE: f64 = 0.1;
/// A `Timeout` probe is re-run with the recovery horizon doubled this many
/// times before it counts as unstable.
const HORIZON_EXTENSIONS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_duration: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: BISECTION_TOL,
            max_duration: MAX_PROBE_DURATION,
        }
    }
}

/// One full-simulation probe at a given fault duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub duration: f64,
    pub stable: bool,
    pub reason: StabilityReason,
    pub phi_clear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Critical clearing time as a fault duration: the largest probed stable one.
    pub t_cr: f64,
    /// Angle on the during-fault trajectory at `t_fault + t_cr`.
    pub phi_cr: f64,
    /// Probes in the order they were run.
    pub probes: Vec<Probe>,
}

/// Critical clearing time by bisection over full four-stage simulations.
///
/// Any `t_clear` on `scenario` is ignored.
pub fn oracle_cct(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
) -> Result<OracleResult, SimError> {
    oracle_cct_with(scenario, params, cfg, OracleOptions::default())
}

pub fn oracle_cct_with(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    opts: OracleOptions,
) -> Result<OracleResult, SimError> {
    if !(opts.tol > 0.0 && opts.max_duration > cfg.step) {
        return Err(SimError::InvalidInput(
            "oracle tolerance must be > 0 and max duration above one step".into(),
        ));
    }
    let mut probes = Vec::new();
    let mut run = |d: f64| -> Result<Probe, SimError> {
        let p = probe(scenario, params, cfg, d)?;
        probes.push(p);
        Ok(p)
    };

    // Clearing after a single step stands in for immediate clearing.
    let mut lo = run(cfg.step)?;
    if !lo.stable {
        return Err(SimError::NoBracket(NoBracketKind::AlwaysUnstable));
    }
    let mut hi_d = FIRST_UPPER_PROBE.min(opts.max_duration).max(cfg.step * 2.0);
    loop {
        let p = run(hi_d)?;
        if !p.stable {
            break;
        }
        lo = p;
        if hi_d >= opts.max_duration {
            return Err(SimError::NoBracket(NoBracketKind::AlwaysStable));
        }
        hi_d = (2.0 * hi_d).min(opts.max_duration);
    }
    while hi_d - lo.duration > opts.tol {
        let mid = 0.5 * (lo.duration + hi_d);
        let p = run(mid)?;
        if p.stable {
            lo = p;
        } else {
            hi_d = mid;
        }
    }
    // One probe past the bracket guards against a second stable window.
    let confirm = (hi_d + (hi_d - lo.duration).max(opts.tol) * 4.0).min(opts.max_duration);
    if confirm > hi_d {
        run(confirm)?;
    }
    check_monotone(&probes)?;
    Ok(OracleResult {
        t_cr: lo.duration,
        phi_cr: lo.phi_clear,
        probes,
    })
}

fn probe(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    duration: f64,
) -> Result<Probe, SimError> {
    let sc = scenario.with_clearing(scenario.t_fault + duration);
    let base = default_horizon(&sc, params);
    let t_clear = scenario.t_fault + duration;
    let mut horizon = base;
    let mut ext = 0;
    loop {
        let (v, phi_clear) = simulate_scenario_verdict(&sc, params, cfg, horizon)?;
        if v.reason != StabilityReason::Timeout || ext == HORIZON_EXTENSIONS {
            return Ok(Probe {
                duration,
                stable: v.stable,
                reason: v.reason,
                phi_clear,
            });
        }
        ext += 1;
        horizon = t_clear + (horizon - t_clear) * 2.0;
    }
}

fn check_monotone(probes: &[Probe]) -> Result<(), SimError> {
    let first_unstable = probes
        .iter()
        .filter(|p| !p.stable)
        .map(|p| p.duration)
        .fold(f64::INFINITY, f64::min);
    match probes
        .iter()
        .filter(|p| p.stable && p.duration > first_unstable)
        .map(|p| p.duration)
        .reduce(f64::max)
    {
        Some(stable_at) => Err(SimError::MonotonicityViolated {
            unstable_at: first_unstable,
            stable_at,
        }),
        None => Ok(()),
    }
}
