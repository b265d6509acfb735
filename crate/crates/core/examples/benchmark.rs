//! Six-case benchmark: critical angles and clearing times of the three
//! approximations against the simulation oracle.
//!
//! cargo run --release --example benchmark

use gse_lvrt::eac::DampingModel;
use gse_lvrt::model::{Scenario, SystemParams};
use gse_lvrt::sim::IntegratorConfig;
use gse_lvrt::sweep::{run_sweep, summarize};

fn main() {
    let cases = [(0.2, 0.4), (0.2, 0.5), (0.1, 0.25), (0.1, 0.4), (0.0, 0.2), (0.0, 0.3)];
    let rows = run_sweep(
        &Scenario::reference(0.0, 0.0),
        &SystemParams::reference(),
        &IntegratorConfig::default(),
        &cases,
        true,
        DampingModel::StageDependent,
    );
    println!("U_g2  i_d2   phi_cr  phi[1]  phi[2]  phi[3]   t_cr    t[3]");
    for r in &rows {
        let Ok(a) = &r.result else {
            println!("{:<5} {:<5}  {}", r.u_g2, r.i_d2, r.result.as_ref().unwrap_err());
            continue;
        };
        let v = |o: Option<&gse_lvrt::eac::Outcome>| o.and_then(|o| o.value()).unwrap_or(f64::NAN);
        let [p1, p2, p3] = a.cca.approximations().map(|o| o.value().unwrap_or(f64::NAN));
        println!(
            "{:<5} {:<5}  {:.3}   {p1:.3}   {p2:.3}   {p3:.3}   {:.4}  {:.4}",
            r.u_g2,
            r.i_d2,
            v(a.cca.oracle.as_ref()),
            v(a.cct.oracle.as_ref()),
            v(Some(&a.cct.t_cr_3)),
        );
    }
    let s = summarize(&rows);
    let pct = |e: Option<f64>| e.map_or("-".into(), |e| format!("{:.2}%", 100.0 * e));
    println!(
        "mean |CCA error|: {} / {} / {}",
        pct(s.mean_abs_cca[0]),
        pct(s.mean_abs_cca[1]),
        pct(s.mean_abs_cca[2])
    );
}
