use super::integrator::{integrate, Flow, IntegratorConfig};
use super::trajectory::{JumpEvent, Sample, Stage, Trajectory};
use super::verdict::{omega_limit, Monitor, StabilityTarget, StabilityVerdict, DEFAULT_SETTLE_WINDOW};
use super::SimError;
use crate::model::{
    derive_gse, equilibria, gse_rhs, jump_fault_clear_to, jump_fault_entry, pre_fault_point,
    stage3_driving_rhs_with_rate, stage3_response_step, terminal_voltage, tvc_integrator_rate,
    GseParams, PllState, Scenario, Stage3State, SystemParams,
};

/// Time allowed after the ramp finishes for the final stage to settle, s.
const RECOVERY_ALLOWANCE: f64 = 5.0;

/// End time that leaves [`RECOVERY_ALLOWANCE`] after the active-current ramp.
pub fn default_horizon(scenario: &Scenario, params: &SystemParams) -> f64 {
    let t_clear = scenario.t_clear.unwrap_or(scenario.t_fault);
    t_clear + ramp_duration(scenario, params) + RECOVERY_ALLOWANCE
}

fn ramp_duration(scenario: &Scenario, params: &SystemParams) -> f64 {
    (scenario.i_d1 - scenario.i_d2).abs() / params.k_ramp
}

/// Settle at the restored pre-fault equilibrium; lost once past the
/// early-recovery saddle (the one with `i_d = i_d2` at `U_g1`).
pub fn stability_target(
    scenario: &Scenario,
    params: &SystemParams,
) -> Result<StabilityTarget, SimError> {
    let final_eq = equilibria(scenario.i_d1, scenario.u_g1, params.x_g)?;
    let recovery_eq = equilibria(scenario.i_d2, scenario.u_g1, params.x_g)?;
    Ok(StabilityTarget {
        phi_s: final_eq.phi_s,
        phi_u: recovery_eq.phi_u,
        omega_limit: omega_limit(params),
    })
}

/// Integrates the frozen GSE from `init` over `[0, horizon]`.
///
/// Samples are labelled [`Stage::DuringFault`]; the electrical columns are
/// NaN because a bare GSE carries no current information.
pub fn simulate_gse(
    init: PllState,
    g: &GseParams,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SimError::InvalidInput(format!("horizon must be > 0, got {horizon}")));
    }
    let sample = |t: f64, y: &[f64; 2]| Sample {
        t,
        stage: Stage::DuringFault,
        phi: y[0],
        omega: y[1],
        i_d: f64::NAN,
        i_q: f64::NAN,
        u_t: f64::NAN,
    };
    let mut traj = Trajectory::default();
    traj.samples.push(sample(0.0, &[init.phi, init.omega]));
    let rhs = |y: &[f64; 2]| Ok(pll_array(gse_rhs(PllState::new(y[0], y[1]), g)));
    integrate(&rhs, [init.phi, init.omega], 0.0, horizon, cfg, |t, y| {
        traj.samples.push(sample(t, y));
        Flow::Continue
    })?;
    Ok(traj)
}

/// Runs the complete four-stage experiment and classifies the outcome.
///
/// The trajectory ends at `horizon` (absolute time) or at the first sample
/// that proves instability.
pub fn simulate_scenario(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<(Trajectory, StabilityVerdict), SimError> {
    let out = run(scenario, params, cfg, horizon, true, false)?;
    Ok((out.traj, out.verdict))
}

/// Verdict-only variant of [`simulate_scenario`] that stops as soon as the
/// outcome is decided. Also returns the angle at clearing.
pub fn simulate_scenario_verdict(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<(StabilityVerdict, f64), SimError> {
    let out = run(scenario, params, cfg, horizon, false, true)?;
    Ok((out.verdict, out.phi_clear))
}

/// Verdict of the recovery stages started from an arbitrary post-clearing
/// PLL state, with `i_d = i_d2` and the TVC integrator at its pre-fault value.
///
/// `horizon` is measured from the clearing instant.
pub fn recovery_verdict(
    entry: PllState,
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<StabilityVerdict, SimError> {
    params.validate()?;
    cfg.validate()?;
    let pre = pre_fault_point(scenario, params)?;
    let target = stability_target(scenario, params)?;
    let mut rec = Recorder::new(false, true, target);
    recover(&mut rec, 0.0, entry, pre.z_q1, scenario, params, cfg, horizon, true)?;
    Ok(rec.finish())
}

struct RunOutput {
    traj: Trajectory,
    verdict: StabilityVerdict,
    phi_clear: f64,
}

/// Sample sink plus online stability monitor shared by all stages.
struct Recorder {
    record: bool,
    stop_when_settled: bool,
    traj: Trajectory,
    monitor: Monitor,
    verdict: Option<StabilityVerdict>,
    last: PllState,
    /// Last point of a segment that ends in a switch, held back so the
    /// post-switch sample owns that time stamp.
    pending: Option<Sample>,
    error: Option<SimError>,
}

impl Recorder {
    fn new(record: bool, stop_when_settled: bool, target: StabilityTarget) -> Self {
        Self {
            record,
            stop_when_settled,
            traj: Trajectory::default(),
            monitor: Monitor::new(target, DEFAULT_SETTLE_WINDOW),
            verdict: None,
            last: PllState::default(),
            pending: None,
            error: None,
        }
    }

    fn flow(&self) -> Flow {
        match self.verdict {
            _ if self.error.is_some() => Flow::Stop,
            Some(v) if !v.stable || self.stop_when_settled => Flow::Stop,
            _ => Flow::Continue,
        }
    }

    fn observe(&mut self, s: Sample, monitored: bool, held: bool) -> Flow {
        self.last = s.pll();
        if monitored && self.verdict.is_none() {
            self.verdict = self.monitor.observe(s.t, s.pll());
        }
        if held {
            self.pending = Some(s);
        } else if self.record {
            self.traj.samples.push(s);
        }
        self.flow()
    }

    fn fail(&mut self, e: SimError) -> Flow {
        self.error = Some(e);
        Flow::Stop
    }

    fn switch(&mut self, before: Sample, after: Sample, monitored: bool) -> Flow {
        self.pending = None;
        if self.record {
            self.traj.jumps.push(JumpEvent {
                t: after.t,
                omega_before: before.omega,
                omega_after: after.omega,
                before,
            });
        }
        self.observe(after, monitored, false)
    }

    fn done(&self) -> bool {
        self.error.is_some() || self.flow() == Flow::Stop
    }

    fn take_error(&mut self) -> Result<(), SimError> {
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn finish(&self) -> StabilityVerdict {
        self.verdict.unwrap_or_else(|| self.monitor.timeout(self.last))
    }
}

fn pll_array(s: PllState) -> [f64; 2] {
    [s.phi, s.omega]
}

fn run(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    horizon: f64,
    record: bool,
    stop_when_settled: bool,
) -> Result<RunOutput, SimError> {
    params.validate()?;
    scenario.validate(params)?;
    cfg.validate()?;
    let t_clear = scenario.t_clear.ok_or(SimError::MissingClearingTime)?;
    if !(horizon > t_clear && horizon.is_finite()) {
        return Err(SimError::InvalidInput(format!(
            "horizon {horizon} s must lie beyond t_clear = {t_clear} s"
        )));
    }
    let pre = pre_fault_point(scenario, params)?;
    let target = stability_target(scenario, params)?;
    let mut rec = Recorder::new(record, stop_when_settled, target);
    let x_g = params.x_g;

    // Stage 1: locked at the pre-fault equilibrium.
    let stage1 = |t: f64| Sample {
        t,
        stage: Stage::PreFault,
        phi: pre.phi_1,
        omega: 0.0,
        i_d: scenario.i_d1,
        i_q: pre.i_q1,
        u_t: pre.u_t1,
    };
    if record {
        let mut k = 0u64;
        loop {
            let t = k as f64 * cfg.step;
            if t >= scenario.t_fault - 1e-9 * cfg.step {
                break;
            }
            rec.observe(stage1(t), false, false);
            k += 1;
        }
    }

    // Stage 2: frozen GSE with the dipped voltage and the fault currents.
    let i_q2 = scenario.resolved_i_q2(params);
    let stage2 = |t: f64, y: &[f64; 2]| Sample {
        t,
        stage: Stage::DuringFault,
        phi: y[0],
        omega: y[1],
        i_d: scenario.i_d2,
        i_q: i_q2,
        u_t: terminal_voltage(y[0], scenario.i_d2, i_q2, scenario.u_g2, x_g).u_t,
    };
    let omega_1 = jump_fault_entry(scenario, params, pre.phi_1);
    rec.switch(
        stage1(scenario.t_fault),
        stage2(scenario.t_fault, &[pre.phi_1, omega_1]),
        false,
    );
    let g2 = derive_gse(params, scenario.i_d2, scenario.u_g2);
    let rhs2 = |y: &[f64; 2]| Ok(pll_array(gse_rhs(PllState::new(y[0], y[1]), &g2)));
    let end2 = integrate(
        &rhs2,
        [pre.phi_1, omega_1],
        scenario.t_fault,
        t_clear,
        cfg,
        |t, y| rec.observe(stage2(t, y), false, t == t_clear),
    )?;
    let before_clear = rec.pending.unwrap_or_else(|| stage2(end2.t, &end2.y));
    let phi_clear = end2.y[0];

    // Clearing jump, then the recovery stages.
    let omega_3 = jump_fault_clear_to(params, scenario.u_g2, scenario.u_g1, phi_clear, end2.y[1]);
    let entry = PllState::new(phi_clear, omega_3);
    let after = entry_sample(t_clear, entry, pre.z_q1, scenario, params)?;
    if after.stage == Stage::LateRecovery {
        rec.monitor.arm_settling();
    }
    rec.switch(before_clear, after, true);
    if !rec.done() {
        recover(&mut rec, t_clear, entry, pre.z_q1, scenario, params, cfg, horizon, false)?;
    }
    rec.take_error()?;
    let verdict = rec.finish();
    Ok(RunOutput {
        traj: rec.traj,
        verdict,
        phi_clear,
    })
}

fn stage3_sample(
    t: f64,
    pll: PllState,
    i_d: f64,
    z_q: f64,
    scenario: &Scenario,
    params: &SystemParams,
) -> Result<Sample, SimError> {
    let s = Stage3State {
        phi: pll.phi,
        omega: pll.omega,
        i_d,
        z_q,
    };
    let out = stage3_response_step(s, params, scenario.u_g1)?;
    Ok(Sample {
        t,
        stage: Stage::EarlyRecovery,
        phi: pll.phi,
        omega: pll.omega,
        i_d,
        i_q: out.i_q,
        u_t: out.u_t,
    })
}

/// First sample of the recovery: early recovery while a ramp is pending,
/// otherwise straight into the final stage.
fn entry_sample(
    t: f64,
    pll: PllState,
    z_q: f64,
    scenario: &Scenario,
    params: &SystemParams,
) -> Result<Sample, SimError> {
    if scenario.i_d1 != scenario.i_d2 {
        return stage3_sample(t, pll, scenario.i_d2, z_q, scenario, params);
    }
    stage4_sample(t, pll, z_q, scenario, params)
}

fn stage4_sample(
    t: f64,
    pll: PllState,
    z_q: f64,
    scenario: &Scenario,
    params: &SystemParams,
) -> Result<Sample, SimError> {
    let mut s = stage3_sample(t, pll, scenario.i_d1, z_q, scenario, params)?;
    s.stage = Stage::LateRecovery;
    Ok(s)
}

/// Stages 3 and 4 from the post-clearing state at `t0`. With
/// `observe_entry` unset the caller has already observed the state at `t0`.
#[allow(clippy::too_many_arguments)]
fn recover(
    rec: &mut Recorder,
    t0: f64,
    entry: PllState,
    z_q0: f64,
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    horizon: f64,
    observe_entry: bool,
) -> Result<(), SimError> {
    let u_g = scenario.u_g1;
    let has_ramp = scenario.i_d1 != scenario.i_d2;
    if observe_entry {
        let s = entry_sample(t0, entry, z_q0, scenario, params)?;
        if !has_ramp {
            rec.monitor.arm_settling();
        }
        rec.observe(s, true, false);
        if rec.done() {
            return rec.take_error();
        }
    }
    let mut state = [entry.phi, entry.omega, scenario.i_d1, z_q0];
    let mut t4 = t0;

    // Stage 3: ramp i_d from i_d2 to i_d1 at a fixed rate.
    if has_ramp {
        let rate = (scenario.i_d1 - scenario.i_d2).signum() * params.k_ramp;
        let t_ramp = t0 + ramp_duration(scenario, params);
        let t3 = t_ramp.min(horizon);
        let rhs3 = |y: &[f64; 4]| {
            let s = Stage3State {
                phi: y[0],
                omega: y[1],
                i_d: y[2],
                z_q: y[3],
            };
            let d = stage3_driving_rhs_with_rate(s, params, u_g, rate);
            let out = stage3_response_step(s, params, u_g)?;
            Ok([d.phi, d.omega, d.i_d, tvc_integrator_rate(&out, params)])
        };
        let ends_in_switch = t3 == t_ramp;
        let y0 = [entry.phi, entry.omega, scenario.i_d2, z_q0];
        let end3 = integrate(&rhs3, y0, t0, t3, cfg, |t, y| {
            // the ramp ends exactly on target
            let i_d = if t == t_ramp { scenario.i_d1 } else { y[2] };
            match stage3_sample(t, PllState::new(y[0], y[1]), i_d, y[3], scenario, params) {
                Ok(s) => rec.observe(s, true, ends_in_switch && t == t_ramp),
                Err(e) => rec.fail(e),
            }
        })?;
        if rec.done() || end3.stopped || !ends_in_switch {
            return rec.take_error();
        }
        state = [end3.y[0], end3.y[1], scenario.i_d1, end3.y[3]];
        t4 = t_ramp;
    }

    // Stage 4: restored system with the TVC still acting on i_q.
    if has_ramp {
        let pll = PllState::new(state[0], state[1]);
        let before = match rec.pending {
            Some(s) => s,
            None => stage3_sample(t4, pll, scenario.i_d1, state[3], scenario, params)?,
        };
        let mut after = before;
        after.stage = Stage::LateRecovery;
        rec.monitor.arm_settling();
        rec.switch(before, after, true);
        if rec.done() {
            return rec.take_error();
        }
    }
    if t4 >= horizon {
        return Ok(());
    }
    let g4 = derive_gse(params, scenario.i_d1, u_g);
    let rhs4 = |y: &[f64; 3]| {
        let d = gse_rhs(PllState::new(y[0], y[1]), &g4);
        let s = Stage3State {
            phi: y[0],
            omega: y[1],
            i_d: scenario.i_d1,
            z_q: y[2],
        };
        let out = stage3_response_step(s, params, u_g)?;
        Ok([d.phi, d.omega, tvc_integrator_rate(&out, params)])
    };
    integrate(&rhs4, [state[0], state[1], state[3]], t4, horizon, cfg, |t, y| {
        match stage4_sample(t, PllState::new(y[0], y[1]), y[2], scenario, params) {
            Ok(s) => rec.observe(s, true, false),
            Err(e) => rec.fail(e),
        }
    })?;
    rec.take_error()
}
