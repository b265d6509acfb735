//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) stepping over one smooth
//! segment of the switching model.
//!
//! Fixed-step output lands on the global grid `k * step`, so samples from
//! different segments line up and the same scenario always produces the same
//! time stamps. Segment ends (switch instants) are hit exactly by shortening
//! the last step.

use serde::{Deserialize, Serialize};

use super::SimError;

/// Smallest step the adaptive method may take before giving up, seconds.
pub const MIN_ADAPTIVE_STEP: f64 = 1e-12;

/// Relative distance to a grid point under which a time is treated as on it.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Fixed step (RK4) or initial and maximum step (RK45), seconds.
    pub step: f64,
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Localization tolerance for threshold crossings, seconds.
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            method: Method::Rk4,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            event_tol: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad("step must be > 0");
        }
        if !(self.event_tol.is_finite() && self.event_tol > 0.0) {
            return bad("event_tol must be > 0");
        }
        if self.event_tol > self.step {
            return bad("event_tol must not exceed step");
        }
        if self.method == Method::Rk45 && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol and abs_tol must be > 0 for rk45");
        }
        Ok(())
    }
}

/// Observer verdict after each output point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// Result of integrating one segment.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentEnd<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// The observer stopped the segment before `t1`.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

pub(crate) fn rk4_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> Result<[f64; N], SimError>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], SimError>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * h, &k1))?;
    let k3 = f(&axpy(y, 0.5 * h, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Next output time on the global grid strictly after `t`, capped at `t1`.
pub(crate) fn next_grid_time(t: f64, t1: f64, step: f64) -> f64 {
    let k = (t / step).floor();
    let mut next = (k + 1.0) * step;
    if next - t <= GRID_SNAP * step {
        next = (k + 2.0) * step;
    }
    if next >= t1 - GRID_SNAP * step {
        t1
    } else {
        next
    }
}

/// Integrates `y' = f(y)` from `t0` to `t1`, calling `observe` at every
/// output point (excluding `t0`, including `t1`).
pub(crate) fn integrate<const N: usize, F, O>(
    f: &F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<SegmentEnd<N>, SimError>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], SimError>,
    O: FnMut(f64, &[f64; N]) -> Flow,
{
    match cfg.method {
        Method::Rk4 => {
            let mut t = t0;
            let mut y = y0;
            while t < t1 {
                let t_next = next_grid_time(t, t1, cfg.step);
                y = rk4_step(f, &y, t_next - t)?;
                t = t_next;
                if observe(t, &y) == Flow::Stop {
                    return Ok(SegmentEnd { t, y, stopped: true });
                }
            }
            Ok(SegmentEnd { t, y, stopped: false })
        }
        Method::Rk45 => dormand_prince(f, y0, t0, t1, cfg, observe),
    }
}

// Dormand–Prince 5(4) tableau. All right-hand sides here are autonomous, so
// the stage nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dormand_prince<const N: usize, F, O>(
    f: &F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<SegmentEnd<N>, SimError>
where
    F: Fn(&[f64; N]) -> Result<[f64; N], SimError>,
    O: FnMut(f64, &[f64; N]) -> Flow,
{
    let mut t = t0;
    let mut y = y0;
    let h_max = cfg.step;
    let mut h = cfg.step;
    let mut k1 = f(&y)?;
    while t < t1 {
        let last = t + h >= t1;
        let h_try = if last { t1 - t } else { h };
        if h_try < MIN_ADAPTIVE_STEP && !last {
            return Err(SimError::StepUnderflow { t, h: h_try });
        }
        let mut tmp = [0.0; N];
        for i in 0..N {
            tmp[i] = y[i] + h_try * A21 * k1[i];
        }
        let k2 = f(&tmp)?;
        for i in 0..N {
            tmp[i] = y[i] + h_try * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(&tmp)?;
        for i in 0..N {
            tmp[i] = y[i] + h_try * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(&tmp)?;
        for i in 0..N {
            tmp[i] = y[i] + h_try * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(&tmp)?;
        for i in 0..N {
            tmp[i] = y[i]
                + h_try * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = f(&tmp)?;
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] = y[i]
                + h_try * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(&y_new)?;
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h_try
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            h = 0.5 * h_try;
            if h < MIN_ADAPTIVE_STEP {
                return Err(SimError::StepUnderflow { t, h });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h_try };
            y = y_new;
            k1 = k7;
            if observe(t, &y) == Flow::Stop {
                return Ok(SegmentEnd { t, y, stopped: true });
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h_try * factor).min(h_max);
        if h < MIN_ADAPTIVE_STEP && t < t1 {
            return Err(SimError::StepUnderflow { t, h });
        }
    }
    Ok(SegmentEnd { t, y, stopped: false })
}
