//! Scenario files: sectioned TOML describing one LVRT experiment, the
//! integrator and optional sweep and farm settings.
//!
//! ```toml
//! [grid]
//! X_g = 0.5
//! U_g1 = 1.0
//! omega_0 = 314.1592653589793
//!
//! [pll]
//! k_ppll = 70.0
//! k_ipll = 2500.0
//!
//! [lvrt]
//! U_g2 = 0.2
//! i_d2 = 0.4
//! i_q2 = "auto"
//! t_fault_s = 0.1
//! t_clear_s = 0.25
//!
//! [ramp]
//! K_ramp = 3.0
//!
//! [tvc]
//! K_pV = 0.5
//! K_iV = 20.0
//! U_tref = 1.0
//!
//! [limits]
//! I_max = 1.1
//!
//! [integrator]
//! method = "rk4"
//! step_s = 1e-4
//! event_tol_s = 1e-6
//! ```
//!
//! Quantities are per-unit unless the key ends in `_s` (seconds). Unknown
//! keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DeviceKind, ModelError, ReactiveSetpoint, Scenario, SystemParams};
use crate::sim::{BasinWindow, FarmSpec, IntegratorConfig, Method, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("config serialization failed: {0}")]
    Serialize(String),
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "X_g")]
    pub x_g: f64,
    #[serde(rename = "U_g1", default = "one")]
    pub u_g1: f64,
    #[serde(default = "nominal_omega")]
    pub omega_0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PllSection {
    pub k_ppll: f64,
    pub k_ipll: f64,
}

/// `i_q2`: a number or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReactiveSetting {
    Fixed(f64),
    Keyword(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

impl Default for ReactiveSetting {
    fn default() -> Self {
        ReactiveSetting::Keyword(Auto::Auto)
    }
}

impl From<ReactiveSetting> for ReactiveSetpoint {
    fn from(s: ReactiveSetting) -> Self {
        match s {
            ReactiveSetting::Fixed(v) => ReactiveSetpoint::Fixed(v),
            ReactiveSetting::Keyword(Auto::Auto) => ReactiveSetpoint::Auto,
        }
    }
}

impl From<ReactiveSetpoint> for ReactiveSetting {
    fn from(s: ReactiveSetpoint) -> Self {
        match s {
            ReactiveSetpoint::Fixed(v) => ReactiveSetting::Fixed(v),
            ReactiveSetpoint::Auto => ReactiveSetting::Keyword(Auto::Auto),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvrtSection {
    #[serde(rename = "U_g2")]
    pub u_g2: f64,
    pub i_d2: f64,
    #[serde(default = "one")]
    pub i_d1: f64,
    #[serde(default)]
    pub i_q2: ReactiveSetting,
    pub t_fault_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_clear_s: Option<f64>,
    #[serde(default)]
    pub device: DeviceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    #[serde(rename = "K_ramp")]
    pub k_ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvcSection {
    #[serde(rename = "K_pV")]
    pub k_pv: f64,
    #[serde(rename = "K_iV")]
    pub k_iv: f64,
    #[serde(rename = "U_tref")]
    pub u_tref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    #[serde(rename = "I_max")]
    pub i_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default)]
    pub method: Method,
    pub step_s: f64,
    pub event_tol_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    /// Absolute end time of `simulate`; defaults to 5 s after the ramp ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<f64>,
}

/// Paired `(U_g2[k], i_d2[k])` cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "U_g2")]
    pub u_g2: Vec<f64>,
    pub i_d2: Vec<f64>,
}

impl SweepSection {
    pub fn cases(&self) -> Vec<(f64, f64)> {
        self.u_g2.iter().copied().zip(self.i_d2.iter().copied()).collect()
    }
}

/// With a farm section, `grid.X_g` is the reactance of one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarmSection {
    pub n: u32,
    #[serde(rename = "X_line")]
    pub x_line: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinSection {
    pub i_d: f64,
    #[serde(rename = "U_g")]
    pub u_g: f64,
    pub phi: [f64; 2],
    pub omega: [f64; 2],
    pub n_phi: usize,
    pub n_omega: usize,
}

impl BasinSection {
    pub fn window(&self) -> BasinWindow {
        BasinWindow {
            phi: (self.phi[0], self.phi[1]),
            omega: (self.omega[0], self.omega[1]),
            n_phi: self.n_phi,
            n_omega: self.n_omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub grid: GridSection,
    pub pll: PllSection,
    pub lvrt: LvrtSection,
    pub ramp: RampSection,
    pub tvc: TvcSection,
    pub limits: LimitsSection,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm: Option<FarmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basin: Option<BasinSection>,
}

fn one() -> f64 {
    1.0
}

fn nominal_omega() -> f64 {
    100.0 * std::f64::consts::PI
}

fn model_field(e: &ModelError) -> String {
    match e {
        ModelError::InvalidParameter { name, .. } | ModelError::InvalidScenario { name, .. } => {
            let section = match *name {
                "X_g" | "U_g1" | "omega_0" => "grid",
                "k_ppll" | "k_ipll" => "pll",
                "K_ramp" => "ramp",
                "K_pV" | "K_iV" | "U_tref" => "tvc",
                "I_max" => "limits",
                "t_fault" | "t_clear" => return format!("lvrt.{name}_s"),
                _ => "lvrt",
            };
            format!("{section}.{name}")
        }
        _ => "lvrt".to_string(),
    }
}

impl ScenarioFile {
    /// Parses and validates a scenario file.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    /// A file describing `params`, `scenario` and `cfg`.
    pub fn from_parts(params: &SystemParams, scenario: &Scenario, cfg: &IntegratorConfig) -> Self {
        Self {
            grid: GridSection {
                x_g: params.x_g,
                u_g1: scenario.u_g1,
                omega_0: params.omega_0,
            },
            pll: PllSection {
                k_ppll: params.k_ppll,
                k_ipll: params.k_ipll,
            },
            lvrt: LvrtSection {
                u_g2: scenario.u_g2,
                i_d2: scenario.i_d2,
                i_d1: scenario.i_d1,
                i_q2: scenario.i_q2.into(),
                t_fault_s: scenario.t_fault,
                t_clear_s: scenario.t_clear,
                device: scenario.device,
            },
            ramp: RampSection {
                k_ramp: params.k_ramp,
            },
            tvc: TvcSection {
                k_pv: params.k_pv,
                k_iv: params.k_iv,
                u_tref: params.u_tref,
            },
            limits: LimitsSection {
                i_max: params.i_max,
            },
            integrator: IntegratorSection {
                method: cfg.method,
                step_s: cfg.step,
                event_tol_s: cfg.event_tol,
                rel_tol: Some(cfg.rel_tol),
                abs_tol: Some(cfg.abs_tol),
                horizon_s: None,
            },
            sweep: None,
            farm: None,
            basin: None,
        }
    }

    /// Parameters as written; with a farm section `x_g` is the unit reactance.
    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            x_g: self.grid.x_g,
            k_ppll: self.pll.k_ppll,
            k_ipll: self.pll.k_ipll,
            k_ramp: self.ramp.k_ramp,
            k_pv: self.tvc.k_pv,
            k_iv: self.tvc.k_iv,
            u_tref: self.tvc.u_tref,
            i_max: self.limits.i_max,
            omega_0: self.grid.omega_0,
        }
    }

    pub fn farm_spec(&self) -> Option<FarmSpec> {
        self.farm.as_ref().map(|f| FarmSpec {
            n: f.n,
            device: self.system_params(),
            x_line: f.x_line,
        })
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            u_g1: self.grid.u_g1,
            u_g2: self.lvrt.u_g2,
            i_d1: self.lvrt.i_d1,
            i_d2: self.lvrt.i_d2,
            i_q2: self.lvrt.i_q2.into(),
            t_fault: self.lvrt.t_fault_s,
            t_clear: self.lvrt.t_clear_s,
            device: self.lvrt.device,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let d = IntegratorConfig::default();
        IntegratorConfig {
            step: self.integrator.step_s,
            method: self.integrator.method,
            rel_tol: self.integrator.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.integrator.abs_tol.unwrap_or(d.abs_tol),
            event_tol: self.integrator.event_tol_s,
        }
    }

    /// Checks every section against the model invariants. Validation of the
    /// operating point uses the aggregated reactance when a farm is present.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut params = self.system_params();
        params
            .validate()
            .map_err(|e| ConfigError::invalid(&model_field(&e), e.to_string()))?;
        if let Some(spec) = self.farm_spec() {
            params = crate::sim::aggregate_farm(&spec)
                .map_err(|e| ConfigError::invalid("farm", e.to_string()))?;
        }
        self.scenario()
            .validate(&params)
            .map_err(|e| ConfigError::invalid(&model_field(&e), e.to_string()))?;
        self.integrator()
            .validate()
            .map_err(|e: SimError| ConfigError::invalid("integrator", e.to_string()))?;
        if let Some(h) = self.integrator.horizon_s {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::invalid("integrator.horizon_s", "must be > 0"));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.u_g2.len() != sweep.i_d2.len() {
                return Err(ConfigError::invalid(
                    "sweep",
                    "U_g2 and i_d2 lists must have equal length (cases are paired)",
                ));
            }
            if sweep.u_g2.is_empty() {
                return Err(ConfigError::invalid("sweep", "needs at least one case"));
            }
            if sweep.u_g2.iter().chain(&sweep.i_d2).any(|v| !v.is_finite()) {
                return Err(ConfigError::invalid("sweep", "values must be finite"));
            }
        }
        if let Some(b) = &self.basin {
            b.window()
                .validate()
                .map_err(|e| ConfigError::invalid("basin", e.to_string()))?;
        }
        Ok(())
    }
}
