use serde::{Deserialize, Serialize};

use super::SimError;
use crate::model::SystemParams;

/// `n` identical units behind a shared line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarmSpec {
    pub n: u32,
    /// Unit parameters on the unit base; `x_g` is the unit's own reactance.
    pub device: SystemParams,
    /// Shared line reactance on the unit base.
    pub x_line: f64,
}

/// Single-machine equivalent on the aggregate base.
///
/// Current-controlled units in parallel keep their per-unit currents and
/// gains; only the shared line, carrying `n` times the current, scales:
/// `X_eq = X_device + n X_line`.
pub fn aggregate_farm(spec: &FarmSpec) -> Result<SystemParams, SimError> {
    if spec.n == 0 {
        return Err(SimError::InvalidInput("farm must have n >= 1".into()));
    }
    if !(spec.x_line.is_finite() && spec.x_line >= 0.0) {
        return Err(SimError::InvalidInput("X_line must be finite and >= 0".into()));
    }
    Ok(SystemParams {
        x_g: spec.device.x_g + f64::from(spec.n) * spec.x_line,
        ..spec.device
    })
}
