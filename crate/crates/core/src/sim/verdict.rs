//! Stability classification of post-fault trajectories.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::model::{PllState, SystemParams};

/// Settling band around the target equilibrium angle, rad.
pub const SETTLE_PHI_TOL: f64 = 0.02;
/// Settling band on the frequency deviation, rad/s.
pub const SETTLE_OMEGA_TOL: f64 = 0.01;
/// Margin past the unstable equilibrium that counts as a lost swing, rad.
pub const UEP_MARGIN: f64 = 0.5;
/// Frequency-deviation divergence bound for `k_ipll = 1`; see [`omega_limit`].
pub const OMEGA_LIMIT_UNIT: f64 = 50.0;
/// Default length of the settled tail required for a stable verdict, s.
pub const DEFAULT_SETTLE_WINDOW: f64 = 0.2;

/// Frequency-deviation divergence bound, scaled with the PLL time base.
///
/// Speeds on the GSE scale with `sqrt(k_ipll)` (the inverse square root of
/// the inertia), so the bound is `50 * sqrt(max(k_ipll, 1))`.
pub fn omega_limit(params: &SystemParams) -> f64 {
    OMEGA_LIMIT_UNIT * params.k_ipll.max(1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityReason {
    ConvergedToSep,
    PhiExceededUep,
    OmegaDiverged,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub reason: StabilityReason,
    pub final_state: PllState,
}

impl StabilityVerdict {
    fn new(reason: StabilityReason, final_state: PllState) -> Self {
        Self {
            stable: reason == StabilityReason::ConvergedToSep,
            reason,
            final_state,
        }
    }
}

/// What "settled" and "lost" mean for one classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityTarget {
    /// Equilibrium the trajectory must settle at.
    pub phi_s: f64,
    /// Unstable equilibrium whose crossing (plus [`UEP_MARGIN`]) is a lost swing.
    pub phi_u: f64,
    pub omega_limit: f64,
}

/// Online classifier fed one sample at a time.
///
/// Divergence is checked on every sample; settling only counts once
/// [`arm_settling`](Monitor::arm_settling) has been called (at the start of
/// the final stage).
#[derive(Debug, Clone)]
pub(crate) struct Monitor {
    target: StabilityTarget,
    settle_window: f64,
    armed: bool,
    settled_since: Option<f64>,
}

impl Monitor {
    pub fn new(target: StabilityTarget, settle_window: f64) -> Self {
        Self {
            target,
            settle_window,
            armed: false,
            settled_since: None,
        }
    }

    pub fn arm_settling(&mut self) {
        self.armed = true;
        self.settled_since = None;
    }

    /// Returns a decisive verdict, if this sample produces one.
    pub fn observe(&mut self, t: f64, s: PllState) -> Option<StabilityVerdict> {
        let tg = &self.target;
        if !(s.phi.is_finite() && s.omega.is_finite()) {
            return Some(StabilityVerdict::new(StabilityReason::OmegaDiverged, s));
        }
        if (s.phi > tg.phi_u + UEP_MARGIN && s.omega > 0.0)
            || (s.phi < tg.phi_u - 2.0 * PI - UEP_MARGIN && s.omega < 0.0)
        {
            return Some(StabilityVerdict::new(StabilityReason::PhiExceededUep, s));
        }
        if s.omega.abs() > tg.omega_limit {
            return Some(StabilityVerdict::new(StabilityReason::OmegaDiverged, s));
        }
        if !self.armed {
            return None;
        }
        let inside = (s.phi - tg.phi_s).abs() < SETTLE_PHI_TOL && s.omega.abs() < SETTLE_OMEGA_TOL;
        if !inside {
            self.settled_since = None;
            return None;
        }
        let since = *self.settled_since.get_or_insert(t);
        if t - since >= self.settle_window {
            Some(StabilityVerdict::new(StabilityReason::ConvergedToSep, s))
        } else {
            None
        }
    }

    /// Verdict when the horizon ran out without a decisive sample.
    pub fn timeout(&self, last: PllState) -> StabilityVerdict {
        StabilityVerdict::new(StabilityReason::Timeout, last)
    }
}

/// Classifies the part of `traj` after its last stage switch.
///
/// Stable iff the state stays within the settling band of `target.phi_s` for
/// `settle_window`; unstable as soon as a divergence bound is crossed;
/// `Timeout` otherwise.
pub fn classify_stability(
    traj: &Trajectory,
    target: StabilityTarget,
    settle_window: f64,
) -> StabilityVerdict {
    let start = traj.last_switch_time().unwrap_or(0.0);
    let mut monitor = Monitor::new(target, settle_window);
    monitor.arm_settling();
    let mut last = PllState::default();
    for s in traj.samples.iter().filter(|s| s.t >= start) {
        last = s.pll();
        if let Some(v) = monitor.observe(s.t, last) {
            return v;
        }
    }
    monitor.timeout(last)
}
