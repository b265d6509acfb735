//! Table-shaped sweeps of the analyzer over paired `(U_g2, i_d2)` cases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eac::{analyze_with, Analysis, DampingModel};
use crate::model::{Scenario, SystemParams};
use crate::sim::IntegratorConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub u_g2: f64,
    pub i_d2: f64,
    pub result: Result<Analysis, String>,
}

/// Mean absolute signed-relative errors of the three approximations over
/// the cells where both the approximation and the oracle exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mean_abs_cca: [Option<f64>; 3],
    pub mean_abs_cct: [Option<f64>; 3],
    pub succeeded: usize,
    pub total: usize,
}

/// Analyzes every case, in parallel; rows come back in case order.
pub fn run_sweep(
    base: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    cases: &[(f64, f64)],
    with_oracle: bool,
    damping: DampingModel,
) -> Vec<SweepRow> {
    cases
        .par_iter()
        .map(|&(u_g2, i_d2)| {
            let scenario = Scenario {
                u_g2,
                i_d2,
                t_clear: None,
                ..*base
            };
            SweepRow {
                u_g2,
                i_d2,
                result: analyze_with(&scenario, params, cfg, with_oracle, damping)
                    .map_err(|e| e.to_string()),
            }
        })
        .collect()
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let mean = |pick: &dyn Fn(&Analysis) -> [Option<f64>; 3], k: usize| {
        let v: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok())
            .filter_map(|a| pick(a)[k])
            .map(f64::abs)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let cca = |a: &Analysis| a.cca.errors.map(|e| e.as_array()).unwrap_or([None; 3]);
    let cct = |a: &Analysis| a.cct.errors.map(|e| e.as_array()).unwrap_or([None; 3]);
    SweepSummary {
        mean_abs_cca: [mean(&cca, 0), mean(&cca, 1), mean(&cca, 2)],
        mean_abs_cct: [mean(&cct, 0), mean(&cct, 1), mean(&cct, 2)],
        succeeded: rows.iter().filter(|r| r.result.is_ok()).count(),
        total: rows.len(),
    }
}
