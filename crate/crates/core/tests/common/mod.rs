#![allow(dead_code)]

use gse_lvrt::model::{Scenario, SystemParams};
use gse_lvrt::sim::{aggregate_farm, FarmSpec};

/// Paired `(U_g2, i_d2)` cases of the single-unit benchmark.
pub const UNIT_CASES: [(f64, f64); 6] = [
    (0.2, 0.4),
    (0.2, 0.5),
    (0.1, 0.25),
    (0.1, 0.4),
    (0.0, 0.2),
    (0.0, 0.3),
];

/// Paired `(U_g2, i_d2)` cases of the ten-unit farm benchmark.
pub const FARM_CASES: [(f64, f64); 6] = [
    (0.1, 0.1),
    (0.1, 0.2),
    (0.05, 0.1),
    (0.05, 0.2),
    (0.0, 0.1),
    (0.0, 0.2),
];

/// Farm pre-fault active current.
pub const FARM_I_D1: f64 = 0.8;

pub fn farm_spec(n: u32) -> FarmSpec {
    FarmSpec {
        n,
        device: SystemParams {
            x_g: 0.1,
            ..SystemParams::reference()
        },
        x_line: 0.09,
    }
}

pub fn farm_params(n: u32) -> SystemParams {
    aggregate_farm(&farm_spec(n)).unwrap()
}

pub fn farm_scenario(u_g2: f64, i_d2: f64) -> Scenario {
    Scenario {
        i_d1: FARM_I_D1,
        ..Scenario::reference(u_g2, i_d2)
    }
}
