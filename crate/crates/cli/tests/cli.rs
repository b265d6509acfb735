use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gse_lvrt::report::{RunReport, BASIN_HEADER, SWEEP_HEADER, TRAJECTORY_HEADER};
use tempfile::TempDir;

const BASE: &str = r#"
[grid]
X_g = 0.5

[pll]
k_ppll = 70.0
k_ipll = 2500.0

[lvrt]
U_g2 = 0.2
i_d2 = 0.4
t_fault_s = 0.1
t_clear_s = 0.2

[ramp]
K_ramp = 3.0

[tvc]
K_pV = 0.5
K_iV = 20.0
U_tref = 1.0

[limits]
I_max = 1.1

[integrator]
step_s = 1e-4
event_tol_s = 1e-6
"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, text: &str) -> PathBuf {
        let p = self.path("scenario.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn exec(&self, config: &Path, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_gse-lvrt"))
            .args(args)
            .arg("--config")
            .arg(config)
            .output()
            .unwrap()
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> RunReport {
    RunReport::from_json(&String::from_utf8_lossy(&o.stdout)).unwrap()
}

#[test]
fn simulate_writes_trajectory() {
    let r = Run::new();
    let cfg = r.config(BASE);
    let out = r.path("traj.csv");
    let svg = r.path("traj.svg");
    let o = r.exec(&cfg, &["simulate", "--out", out.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = r.read("traj.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    // fault entry, clearing and ramp end each duplicate one time stamp
    let dups = rows.windows(2).filter(|w| w[0][0] == w[1][0]).count();
    assert_eq!(dups, 3);
    let fault: Vec<_> = rows.iter().filter(|r| r[1] == 2.0).collect();
    assert!(fault.windows(2).all(|w| w[1][2] > w[0][2]));
    assert!(r.read("traj.svg").starts_with("<svg"));
}

#[test]
fn simulate_without_clearing_time_is_a_config_error() {
    let r = Run::new();
    let cfg = r.config(&BASE.replace("t_clear_s = 0.2\n", ""));
    let o = r.exec(&cfg, &["simulate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lvrt.t_clear_s"), "{}", stderr(&o));
}

#[test]
fn bad_configs_exit_with_two() {
    let r = Run::new();
    let unknown = r.config(&BASE.replace("K_ramp = 3.0", "K_ramp = 3.0\nK_rmap = 1.0"));
    assert_eq!(code(&r.exec(&unknown, &["analyze"])), 2);
    let invalid = r.config(&BASE.replace("U_g2 = 0.2", "U_g2 = 1.5"));
    let o = r.exec(&invalid, &["analyze"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("lvrt.U_g2"));
    let missing = r.path("nope.toml");
    assert_eq!(code(&r.exec(&missing, &["analyze"])), 2);
    let o = r.exec(&r.config(BASE), &["analyze", "--seedless=true"]);
    assert_eq!(code(&o), 2);
    let o = r.exec(&r.config(BASE), &["sweep"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sweep"));
}

#[test]
fn analyze_without_proportional_path_reports_equal_angles() {
    let r = Run::new();
    let cfg = r.config(&BASE.replace("k_ppll = 70.0", "k_ppll = 0.0"));
    let o = r.exec(&cfg, &["analyze", "--seedless", "--threads", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = report(&o);
    assert_eq!(rep.scenario.t_clear_s, None);
    let [a, b, c] = rep.cca.approximations().map(|o| o.value().unwrap());
    assert!((a - b).abs() < 1e-9 && (b - c).abs() < 1e-9);
}

#[test]
fn analyze_always_stable_oracle() {
    let r = Run::new();
    let cfg = r.config(&BASE.replace("U_g2 = 0.2", "U_g2 = 0.99").replace("i_d2 = 0.4", "i_d2 = 1.0"));
    let o = r.exec(&cfg, &["analyze", "--oracle"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("\"no-bracket: always stable\""), "{text}");
    // nothing to clear: no approximation has an angle either
    assert_eq!(code(&o), 3);
}

#[test]
fn sweep_table_and_cell_independence() {
    let r = Run::new();
    let cases = "\n[sweep]\nU_g2 = [0.2, 0.1]\ni_d2 = [0.4, 0.25]\n";
    let cfg = r.config(&format!("{BASE}{cases}"));
    let out = r.path("sweep.csv");
    let o = r.exec(&cfg, &["sweep", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = r.read("sweep.csv");
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("mean_abs,"));

    let single = r.config(&BASE.replace("U_g2 = 0.2", "U_g2 = 0.1").replace("i_d2 = 0.4", "i_d2 = 0.25"));
    let rep = report(&r.exec(&single, &["analyze", "--oracle"]));
    let cells: Vec<f64> = lines[2].split(',').take(9).map(|c| c.parse().unwrap()).collect();
    assert_eq!(cells[2], rep.cca.oracle.unwrap().value().unwrap());
    assert_eq!(cells[3], rep.cca.phi_cr_1.value().unwrap());
    assert_eq!(cells[7], rep.cca.phi_cr_3.value().unwrap());
}

#[test]
fn basin_degenerate_grid() {
    let r = Run::new();
    let section = "\n[basin]\ni_d = 0.4\nU_g = 1.0\nphi = [-1.0, 3.6]\nomega = [-60.0, 60.0]\nn_phi = 2\nn_omega = 2\n";
    let cfg = r.config(&format!("{BASE}{section}"));
    let out = r.path("basin.csv");
    let svg = r.path("basin.svg");
    let o = r.exec(
        &cfg,
        &["basin", "--out", out.to_str().unwrap(), "--svg", svg.to_str().unwrap(), "--compare", "0.8", "--trajectory"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = r.read("basin.csv");
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], BASIN_HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true") || l.ends_with(",false")));
    let svg = r.read("basin.svg");
    assert!(svg.contains("<circle") && svg.contains("<polyline"));
}

#[test]
fn single_unit_farm_equals_single_machine() {
    let r = Run::new();
    // a zero-voltage fault at full current, so the light unit can still lose step
    let base = BASE.replace("U_g2 = 0.2", "U_g2 = 0.0").replace("i_d2 = 0.4", "i_d2 = 1.0");
    let farm = base.replace("X_g = 0.5", "X_g = 0.1") + "\n[farm]\nn = 7\nX_line = 0.09\n";
    let cfg = r.config(&farm);
    let o = r.exec(&cfg, &["farm", "--n", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = report(&o);
    assert_eq!(f.farm.unwrap().n, 1);

    let single = r.config(&base.replace("X_g = 0.5", &format!("X_g = {}", 0.1 + 0.09)));
    let s = report(&r.exec(&single, &["analyze"]));
    assert_eq!(f.params, s.params);
    assert_eq!(f.cca, s.cca);
    assert_eq!(f.cct, s.cct);
}

#[test]
fn headers_match_golden_files() {
    let golden = |name: &str| {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
        std::fs::read_to_string(p).unwrap().trim_end().to_string()
    };
    assert_eq!(golden("trajectory_header.csv"), TRAJECTORY_HEADER);
    assert_eq!(golden("sweep_header.csv"), SWEEP_HEADER);
    assert_eq!(golden("basin_header.csv"), BASIN_HEADER);
}
