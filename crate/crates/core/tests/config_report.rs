use gse_lvrt::config::{ConfigError, ScenarioFile, SweepSection};
use gse_lvrt::eac::{analyze, DampingModel};
use gse_lvrt::model::{ReactiveSetpoint, Scenario, SystemParams};
use gse_lvrt::report::{
    write_sweep_csv, write_trajectory_csv, ReportError, RunReport, SWEEP_HEADER, TRAJECTORY_HEADER,
};
use gse_lvrt::sim::{default_horizon, simulate_scenario, IntegratorConfig};
use gse_lvrt::sweep::{run_sweep, summarize};
use proptest::prelude::*;

fn reference_report(with_oracle: bool) -> RunReport {
    let params = SystemParams::reference();
    let cfg = IntegratorConfig::default();
    let sc = Scenario::reference(0.2, 0.4);
    let a = analyze(&sc, &params, &cfg, with_oracle).unwrap();
    RunReport::new("analyze", &sc, &params, &cfg, a, 0.0)
}

#[test]
fn report_json_round_trip() {
    let r = reference_report(true);
    let text = r.to_json().unwrap();
    assert_eq!(RunReport::from_json(&text).unwrap(), r);
    assert!(r.any_approximation());
}

#[test]
fn foreign_schema_rejected() {
    let text = reference_report(false)
        .to_json()
        .unwrap()
        .replace("\"schema_version\": 1", "\"schema_version\": 7");
    assert!(matches!(RunReport::from_json(&text), Err(ReportError::Schema { found: 7 })));
}

#[test]
fn early_clearing_names_field() {
    let mut f = ScenarioFile::from_parts(
        &SystemParams::reference(),
        &Scenario::reference(0.2, 0.4),
        &IntegratorConfig::default(),
    );
    f.lvrt.t_clear_s = Some(0.05);
    match f.validate() {
        Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "lvrt.t_clear_s"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn trajectory_csv_has_one_row_per_sample_and_switch() {
    let params = SystemParams::reference();
    let cfg = IntegratorConfig::default();
    let sc = Scenario::reference(0.2, 0.4).with_clearing(0.25);
    let (traj, _) = simulate_scenario(&sc, &params, &cfg, default_horizon(&sc, &params)).unwrap();
    let mut out = Vec::new();
    write_trajectory_csv(&traj, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
    assert_eq!(lines.count(), traj.samples.len() + traj.jumps.len());
}

#[test]
fn single_cell_sweep_matches_analyze() {
    let params = SystemParams::reference();
    let cfg = IntegratorConfig::default();
    let base = Scenario::reference(0.0, 0.0);
    let rows = run_sweep(&base, &params, &cfg, &[(0.1, 0.25)], false, DampingModel::StageDependent);
    let direct = analyze(&Scenario::reference(0.1, 0.25), &params, &cfg, false).unwrap();
    assert_eq!(rows[0].result.as_ref().unwrap(), &direct);

    let mut out = Vec::new();
    write_sweep_csv(&rows, &summarize(&rows), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("mean_abs,"));
    let width = SWEEP_HEADER.split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == width));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_survives_round_trip(
        x_g in 0.05f64..1.5,
        k_ppll in 0.0f64..500.0,
        k_ipll in 1.0f64..1e4,
        u_g2 in 0.0f64..0.9,
        i_d2 in 0.0f64..1.0,
        fixed_iq in proptest::option::of(-1.0f64..0.0),
        duration in 1e-3f64..2.0,
        cases in proptest::collection::vec((0.0f64..0.9, 0.0f64..1.0), 0..5),
    ) {
        let params = SystemParams { x_g, k_ppll, k_ipll, ..SystemParams::reference() };
        let mut sc = Scenario::reference(u_g2, i_d2).with_clearing(0.1 + duration);
        sc.i_d1 = 0.5;
        if let Some(v) = fixed_iq {
            sc.i_q2 = ReactiveSetpoint::Fixed(v);
        }
        let mut f = ScenarioFile::from_parts(&params, &sc, &IntegratorConfig::default());
        if !cases.is_empty() {
            f.sweep = Some(SweepSection {
                u_g2: cases.iter().map(|c| c.0).collect(),
                i_d2: cases.iter().map(|c| c.1).collect(),
            });
        }
        prop_assume!(f.validate().is_ok());
        let back = ScenarioFile::parse(&f.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(back.scenario(), sc);
        prop_assert_eq!(back.system_params(), params);
    }
}
