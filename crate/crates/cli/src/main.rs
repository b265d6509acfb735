use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use gse_lvrt::config::ScenarioFile;
use gse_lvrt::eac::{analyze_with, DampingModel, EacInputs};
use gse_lvrt::model::{equilibria, Scenario, SystemParams};
use gse_lvrt::report::{write_basin_csv, write_sweep_csv, write_trajectory_csv, RunReport};
use gse_lvrt::sim::{aggregate_farm, basin_map, default_horizon, simulate_scenario, IntegratorConfig};
use gse_lvrt::sweep::{run_sweep, summarize};

mod plot;

/// GSE model of converter LVRT transients and improved equal-area
/// critical clearing analysis.
#[derive(Parser)]
#[command(name = "gse-lvrt", version, about)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps, oracles and basin maps.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Accepted for reproducibility scripts; nothing here draws random numbers.
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the four-stage switching experiment; writes a trajectory CSV.
    Simulate {
        /// Also render the trajectory as SVG.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Three-approximation critical angle and clearing time report (JSON).
    Analyze {
        /// Also run the bisection oracle and fill in signed errors.
        #[arg(long)]
        oracle: bool,
        /// Use the during-fault damping coefficient after clearing as well.
        #[arg(long)]
        constant_damping: bool,
        /// Also render the equal-area diagram as SVG.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Analyze every case of the [sweep] section; writes a table CSV.
    Sweep {
        /// Skip the oracle (error columns become NaN).
        #[arg(long)]
        no_oracle: bool,
        #[arg(long)]
        constant_damping: bool,
    },
    /// Basin of attraction of the frozen GSE from the [basin] section.
    Basin {
        /// Override the frozen active current.
        #[arg(long)]
        i_d: Option<f64>,
        /// Override the frozen bus voltage.
        #[arg(long)]
        u_g: Option<f64>,
        /// Second active current to compare against in the SVG.
        #[arg(long, value_name = "I_D")]
        compare: Option<f64>,
        /// Overlay the simulated scenario trajectory (needs t_clear_s).
        #[arg(long)]
        trajectory: bool,
        /// Render the map as SVG.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Aggregate the [farm] section into one machine and analyze it.
    Farm {
        /// Number of units; overrides farm.n.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        oracle: bool,
    },
}

/// Failure with its exit code: 2 for configuration, 3 for runtime.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn config_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        err: err.into(),
    }
}

fn runtime_err(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 3,
        err: err.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(config_err)?;
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| config_err(anyhow!("--config PATH is required")))?;
    let file = load(path)?;
    match &cli.command {
        Command::Simulate { svg } => simulate(cli, &file, svg.as_deref()),
        Command::Analyze {
            oracle,
            constant_damping,
            svg,
        } => analyze(cli, &file, *oracle, damping(*constant_damping), svg.as_deref()),
        Command::Sweep {
            no_oracle,
            constant_damping,
        } => sweep(cli, &file, !no_oracle, damping(*constant_damping)),
        Command::Basin {
            i_d,
            u_g,
            compare,
            trajectory,
            svg,
        } => basin(cli, &file, *i_d, *u_g, *compare, *trajectory, svg.as_deref()),
        Command::Farm { n, oracle } => farm(cli, &file, *n, *oracle),
    }
}

fn damping(constant: bool) -> DampingModel {
    if constant {
        DampingModel::Constant
    } else {
        DampingModel::StageDependent
    }
}

fn load(path: &Path) -> Result<ScenarioFile, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_err)?;
    ScenarioFile::parse(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(config_err)
}

fn output(cli: &Cli) -> Result<Box<dyn Write>, Failure> {
    match &cli.out {
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(runtime_err)?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_with(cli: &Cli, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CmdResult {
    let mut w = output(cli)?;
    f(&mut w).and_then(|_| w.flush()).map_err(runtime_err)
}

fn write_svg(path: &Path, svg: &str) -> CmdResult {
    std::fs::write(path, svg)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime_err)
}

fn simulate(cli: &Cli, file: &ScenarioFile, svg: Option<&Path>) -> CmdResult {
    let scenario = file.scenario();
    let params = file.system_params();
    if scenario.t_clear.is_none() {
        return Err(config_err(anyhow!(
            "config field lvrt.t_clear_s: required by simulate"
        )));
    }
    let horizon = file
        .integrator
        .horizon_s
        .unwrap_or_else(|| default_horizon(&scenario, &params));
    let (traj, verdict) =
        simulate_scenario(&scenario, &params, &file.integrator(), horizon).map_err(runtime_err)?;
    write_with(cli, |w| write_trajectory_csv(&traj, w))?;
    if let Some(p) = svg {
        write_svg(p, &plot::trajectory_svg(&traj, &verdict))?;
    }
    eprintln!(
        "verdict: {} ({:?})",
        if verdict.stable { "stable" } else { "unstable" },
        verdict.reason
    );
    Ok(())
}

fn report(
    command: &str,
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    with_oracle: bool,
    damping: DampingModel,
) -> Result<RunReport, Failure> {
    let start = Instant::now();
    let scenario = Scenario {
        t_clear: None,
        ..*scenario
    };
    let analysis =
        analyze_with(&scenario, params, cfg, with_oracle, damping).map_err(runtime_err)?;
    Ok(RunReport::new(
        command,
        &scenario,
        params,
        cfg,
        analysis,
        start.elapsed().as_secs_f64(),
    ))
}

fn emit_report(cli: &Cli, r: &RunReport) -> CmdResult {
    let json = r.to_json().map_err(runtime_err)?;
    write_with(cli, |w| writeln!(w, "{json}"))?;
    if r.any_approximation() {
        Ok(())
    } else {
        Err(runtime_err(anyhow!("no approximation produced a critical angle")))
    }
}

fn analyze(
    cli: &Cli,
    file: &ScenarioFile,
    oracle: bool,
    damping: DampingModel,
    svg: Option<&Path>,
) -> CmdResult {
    let params = file.system_params();
    let scenario = file.scenario();
    let r = report("analyze", &scenario, &params, &file.integrator(), oracle, damping)?;
    if let Some(p) = svg {
        let inp = EacInputs::from_scenario(&scenario, &params, damping).map_err(runtime_err)?;
        write_svg(p, &plot::eac_svg(&inp, &r.cca).map_err(runtime_err)?)?;
    }
    emit_report(cli, &r)
}

fn sweep(cli: &Cli, file: &ScenarioFile, oracle: bool, damping: DampingModel) -> CmdResult {
    let section = file
        .sweep
        .as_ref()
        .ok_or_else(|| config_err(anyhow!("config field sweep: required by sweep")))?;
    let rows = run_sweep(
        &file.scenario(),
        &file.system_params(),
        &file.integrator(),
        &section.cases(),
        oracle,
        damping,
    );
    let summary = summarize(&rows);
    write_with(cli, |w| write_sweep_csv(&rows, &summary, w))?;
    eprintln!("{}/{} cells succeeded", summary.succeeded, summary.total);
    if summary.succeeded == 0 {
        return Err(runtime_err(anyhow!("every sweep cell failed")));
    }
    Ok(())
}

fn basin(
    cli: &Cli,
    file: &ScenarioFile,
    i_d: Option<f64>,
    u_g: Option<f64>,
    compare: Option<f64>,
    trajectory: bool,
    svg: Option<&Path>,
) -> CmdResult {
    let section = file
        .basin
        .as_ref()
        .ok_or_else(|| config_err(anyhow!("config field basin: required by basin")))?;
    let params = file.system_params();
    let cfg = file.integrator();
    let i_d = i_d.unwrap_or(section.i_d);
    let u_g = u_g.unwrap_or(section.u_g);
    let window = section.window();
    let eq = equilibria(i_d, u_g, params.x_g).map_err(config_err)?;
    let map = basin_map(i_d, u_g, &params, window, &cfg).map_err(runtime_err)?;
    write_with(cli, |w| write_basin_csv(&map, w))?;
    if map.timeouts > 0 {
        eprintln!("{} cells timed out and are marked outside", map.timeouts);
    }
    if let Some(p) = svg {
        let other = match compare {
            Some(c) => Some(basin_map(c, u_g, &params, window, &cfg).map_err(runtime_err)?),
            None => None,
        };
        let overlay = if trajectory {
            let scenario = file.scenario();
            if scenario.t_clear.is_none() {
                return Err(config_err(anyhow!(
                    "config field lvrt.t_clear_s: required by --trajectory"
                )));
            }
            let horizon = default_horizon(&scenario, &params);
            Some(simulate_scenario(&scenario, &params, &cfg, horizon).map_err(runtime_err)?.0)
        } else {
            None
        };
        write_svg(p, &plot::basin_svg(&map, &eq, other.as_ref(), overlay.as_ref()))?;
    }
    Ok(())
}

fn farm(cli: &Cli, file: &ScenarioFile, n: Option<u32>, oracle: bool) -> CmdResult {
    let mut spec = file
        .farm_spec()
        .ok_or_else(|| config_err(anyhow!("config field farm: required by farm")))?;
    if let Some(n) = n {
        spec.n = n;
    }
    let params = aggregate_farm(&spec).map_err(config_err)?;
    let scenario = file.scenario();
    scenario
        .validate(&params)
        .map_err(|e| config_err(anyhow!("with {} units: {e}", spec.n)))?;
    let mut r = report("farm", &scenario, &params, &file.integrator(), oracle, DampingModel::default())?;
    r.farm = Some(spec);
    emit_report(cli, &r)
}
