use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate, Flow, IntegratorConfig};
use super::verdict::{omega_limit, Monitor, StabilityTarget, StabilityVerdict, DEFAULT_SETTLE_WINDOW};
use super::SimError;
use crate::model::{derive_gse, equilibria, gse_rhs, PllState, Scenario, SystemParams};

/// Forward-simulation horizon for basin membership, s.
pub const BASIN_HORIZON: f64 = 20.0;
/// Largest accepted grid side.
const MAX_RESOLUTION: usize = 2000;

/// Rectangle of the `(phi, omega)` plane and its grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinWindow {
    pub phi: (f64, f64),
    pub omega: (f64, f64),
    pub n_phi: usize,
    pub n_omega: usize,
}

impl BasinWindow {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok_range = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok_range(self.phi) || !ok_range(self.omega) {
            return Err(SimError::InvalidInput("basin window ranges must be finite and increasing".into()));
        }
        if !(1..=MAX_RESOLUTION).contains(&self.n_phi) || !(1..=MAX_RESOLUTION).contains(&self.n_omega) {
            return Err(SimError::InvalidInput(format!(
                "basin resolution must be between 1 and {MAX_RESOLUTION} per axis"
            )));
        }
        Ok(())
    }

    /// Centre of cell `(i, j)`, `i` along `phi` and `j` along `omega`.
    pub fn cell_center(&self, i: usize, j: usize) -> PllState {
        let c = |(a, b): (f64, f64), n: usize, k: usize| a + (b - a) * (k as f64 + 0.5) / n as f64;
        PllState::new(c(self.phi, self.n_phi, i), c(self.omega, self.n_omega, j))
    }

    /// Cell containing `s`, if inside the window.
    pub fn cell_of(&self, s: PllState) -> Option<(usize, usize)> {
        let idx = |(a, b): (f64, f64), n: usize, x: f64| {
            if x < a || x > b {
                return None;
            }
            Some((((x - a) / (b - a) * n as f64) as usize).min(n - 1))
        };
        Some((idx(self.phi, self.n_phi, s.phi)?, idx(self.omega, self.n_omega, s.omega)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub window: BasinWindow,
    /// Row-major over `omega` (outer) then `phi`; `true` = converges to the SEP.
    pub grid: Vec<bool>,
    pub i_d: f64,
    pub u_g: f64,
    /// Cells whose simulation neither settled nor diverged (marked outside).
    pub timeouts: usize,
}

impl BasinMap {
    pub fn inside(&self, i: usize, j: usize) -> bool {
        self.grid[j * self.window.n_phi + i]
    }

    pub fn count_inside(&self) -> usize {
        self.grid.iter().filter(|&&b| b).count()
    }
}

/// Verdict of the frozen GSE `(i_d, U_g)` started from `init`.
pub fn frozen_verdict(
    init: PllState,
    i_d: f64,
    u_g: f64,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<StabilityVerdict, SimError> {
    let eq = equilibria(i_d, u_g, params.x_g)?;
    let target = StabilityTarget {
        phi_s: eq.phi_s,
        phi_u: eq.phi_u,
        omega_limit: omega_limit(params),
    };
    let g = derive_gse(params, i_d, u_g);
    let mut monitor = Monitor::new(target, DEFAULT_SETTLE_WINDOW);
    monitor.arm_settling();
    if let Some(v) = monitor.observe(0.0, init) {
        return Ok(v);
    }
    let mut verdict = None;
    let rhs = |y: &[f64; 2]| {
        let d = gse_rhs(PllState::new(y[0], y[1]), &g);
        Ok([d.phi, d.omega])
    };
    let end = integrate(&rhs, [init.phi, init.omega], 0.0, horizon, cfg, |t, y| {
        verdict = monitor.observe(t, PllState::new(y[0], y[1]));
        if verdict.is_some() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })?;
    Ok(verdict.unwrap_or_else(|| monitor.timeout(PllState::new(end.y[0], end.y[1]))))
}

/// Classifies every cell of `window` by forward simulation of the frozen GSE
/// from its centre. The cell holding the SEP is simulated from the SEP itself.
pub fn basin_map(
    i_d: f64,
    u_g: f64,
    params: &SystemParams,
    window: BasinWindow,
    cfg: &IntegratorConfig,
) -> Result<BasinMap, SimError> {
    params.validate()?;
    cfg.validate()?;
    window.validate()?;
    let eq = equilibria(i_d, u_g, params.x_g)?;
    let sep = PllState::new(eq.phi_s, 0.0);
    let sep_cell = window.cell_of(sep);
    let n = window.n_phi * window.n_omega;
    let verdicts: Vec<StabilityVerdict> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % window.n_phi, k / window.n_phi);
            let init = if sep_cell == Some((i, j)) {
                sep
            } else {
                window.cell_center(i, j)
            };
            frozen_verdict(init, i_d, u_g, params, cfg, BASIN_HORIZON)
        })
        .collect::<Result<_, _>>()?;
    let timeouts = verdicts
        .iter()
        .filter(|v| v.reason == super::StabilityReason::Timeout)
        .count();
    Ok(BasinMap {
        window,
        grid: verdicts.iter().map(|v| v.stable).collect(),
        i_d,
        u_g,
        timeouts,
    })
}

/// Whether a post-clearing state lies in the basin of the early-recovery
/// system frozen at `i_d = i_d2`, `U_g = U_g1`.
pub fn fate_at_stage3_entry(
    state: PllState,
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
) -> Result<bool, SimError> {
    Ok(frozen_verdict(state, scenario.i_d2, scenario.u_g1, params, cfg, BASIN_HORIZON)?.stable)
}
