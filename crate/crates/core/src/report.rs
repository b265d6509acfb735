//! JSON run reports and CSV exports.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ReactiveSetting;
use crate::eac::{Analysis, Outcome};
use crate::model::{DeviceKind, Scenario, SystemParams};
use crate::sim::{BasinMap, FarmSpec, IntegratorConfig, Trajectory};
use crate::sweep::{SweepRow, SweepSummary};

/// Bumped on any incompatible change of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_HEADER: &str = "t,stage,phi,omega,i_d,i_q,U_t";
pub const SWEEP_HEADER: &str = "U_g2,i_d2,phi_cr,phi_cr_1,err_phi_1,phi_cr_2,err_phi_2,phi_cr_3,\
err_phi_3,t_cr,t_cr_1,err_t_1,t_cr_2,err_t_2,t_cr_3,err_t_3,reason";
pub const BASIN_HEADER: &str = "phi,omega,inside";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported report schema version {found} (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
}

/// The scenario as run, with the automatic reactive current resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEcho {
    pub u_g1: f64,
    pub u_g2: f64,
    pub i_d1: f64,
    pub i_d2: f64,
    pub i_q2: ReactiveSetting,
    pub i_q2_resolved: f64,
    pub t_fault_s: f64,
    pub t_clear_s: Option<f64>,
    pub device: DeviceKind,
}

impl ScenarioEcho {
    pub fn new(s: &Scenario, params: &SystemParams) -> Self {
        Self {
            u_g1: s.u_g1,
            u_g2: s.u_g2,
            i_d1: s.i_d1,
            i_d2: s.i_d2,
            i_q2: s.i_q2.into(),
            i_q2_resolved: s.resolved_i_q2(params),
            t_fault_s: s.t_fault,
            t_clear_s: s.t_clear,
            device: s.device,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub scenario: ScenarioEcho,
    /// Parameters of the analyzed (for farms: equivalent) machine.
    pub params: SystemParams,
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm: Option<FarmSpec>,
    pub cca: crate::eac::CcaReport,
    pub cct: crate::eac::CctReport,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn new(
        command: &str,
        scenario: &Scenario,
        params: &SystemParams,
        integrator: &IntegratorConfig,
        analysis: Analysis,
        wall_clock_s: f64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario: ScenarioEcho::new(scenario, params),
            params: *params,
            integrator: *integrator,
            farm: None,
            cca: analysis.cca,
            cct: analysis.cct,
            wall_clock_s,
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Decodes a report, rejecting other schema versions.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let r: RunReport = serde_json::from_str(text)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(ReportError::Schema {
                found: r.schema_version,
            });
        }
        Ok(r)
    }

    /// Whether any of the three approximations produced an angle.
    pub fn any_approximation(&self) -> bool {
        self.cca.approximations().iter().any(|o| o.value().is_some())
    }
}

/// 17 significant digits, `.` decimal separator.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NaN".into())
}

/// One row per sample; each switch adds its pre-switch row right before the
/// post-switch row with the same `t`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in traj.rows() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(s.t),
            s.stage.number(),
            fmt_f64(s.phi),
            fmt_f64(s.omega),
            fmt_f64(s.i_d),
            fmt_f64(s.i_q),
            fmt_f64(s.u_t)
        )?;
    }
    Ok(())
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Table-shaped sweep export followed by a `mean_abs` row.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], summary: &SweepSummary, mut w: W) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let mut cells = vec![fmt_f64(r.u_g2), fmt_f64(r.i_d2)];
        let mut reasons = Vec::new();
        match &r.result {
            Ok(a) => {
                let mut note = |o: &Outcome| match o {
                    Outcome::Value(v) => fmt_f64(*v),
                    Outcome::Failed(msg) => {
                        reasons.push(msg.clone());
                        "NaN".into()
                    }
                };
                let oracle = a.cca.oracle.as_ref().map(&mut note).unwrap_or_else(|| "NaN".into());
                cells.push(oracle);
                let err = a.cca.errors.map(|e| e.as_array()).unwrap_or([None; 3]);
                for (k, o) in a.cca.approximations().into_iter().enumerate() {
                    cells.push(note(o));
                    cells.push(fmt_opt(err[k]));
                }
                let oracle_t = a.cct.oracle.as_ref().map(&mut note).unwrap_or_else(|| "NaN".into());
                cells.push(oracle_t);
                let err = a.cct.errors.map(|e| e.as_array()).unwrap_or([None; 3]);
                for (k, o) in a.cct.approximations().into_iter().enumerate() {
                    cells.push(note(o));
                    cells.push(fmt_opt(err[k]));
                }
            }
            Err(msg) => {
                cells.extend(std::iter::repeat_n("NaN".to_string(), 14));
                reasons.push(msg.clone());
            }
        }
        reasons.dedup();
        cells.push(csv_text(&reasons.join("; ")));
        writeln!(w, "{}", cells.join(","))?;
    }
    let mut tail = vec!["mean_abs".to_string(), String::new(), String::new()];
    for k in 0..3 {
        tail.push(String::new());
        tail.push(fmt_opt(summary.mean_abs_cca[k]));
    }
    tail.push(String::new());
    for k in 0..3 {
        tail.push(String::new());
        tail.push(fmt_opt(summary.mean_abs_cct[k]));
    }
    tail.push(String::new());
    writeln!(w, "{}", tail.join(","))
}

/// One row per cell, `omega` outer, `phi` inner.
pub fn write_basin_csv<W: Write>(map: &BasinMap, mut w: W) -> io::Result<()> {
    writeln!(w, "{BASIN_HEADER}")?;
    for j in 0..map.window.n_omega {
        for i in 0..map.window.n_phi {
            let c = map.window.cell_center(i, j);
            writeln!(w, "{},{},{}", fmt_f64(c.phi), fmt_f64(c.omega), map.inside(i, j))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_text("a, b"), "\"a, b\"");
        assert_eq!(csv_text("plain"), "plain");
    }
}
