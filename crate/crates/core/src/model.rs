//! Domain types and right-hand sides of the unified LVRT switching model.
//!
//! The phase-locked loop of a grid-following converter, written in terms of
//! the angle mismatch `phi` between the converter d-axis and the infinite-bus
//! phasor, obeys a second-order equation with the same structure as the
//! synchronous-machine swing equation:
//!
//! ```text
//! phi' = omega
//! M omega' = P_m - U_g sin(phi) - alpha cos(phi) omega
//!
//! M = 1 / k_ipll,  P_m = i_d X_g,  alpha = k_ppll U_g / k_ipll
//! ```
//!
//! A low-voltage ride-through event is a sequence of four stages. Stage 1
//! sits at the pre-fault equilibrium, stage 2 is the same equation with the
//! dipped bus voltage and the during-fault active current, stage 3 ramps the
//! active current back while the terminal-voltage controller (TVC) resumes,
//! and stage 4 is the restored pre-fault system. At every switch the PLL
//! proportional path makes `omega` jump; see [`jump_fault_entry`] and
//! [`jump_fault_clear`].
//!
//! Angles are never wrapped, so a lost synchronism shows up as unbounded `phi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum Newton iterations for the TVC algebraic loop.
pub const TVC_MAX_ITER: usize = 50;
/// Convergence tolerance on the reactive current for the TVC algebraic loop.
pub const TVC_TOL: f64 = 1e-12;

/// Terminal voltage below which the grid code applies the reactive-current
/// injection rule for the automatic `i_q2`.
pub const REACTIVE_SUPPORT_KNEE: f64 = 0.9;
/// Reactive-current gain of the automatic `i_q2` rule, pu current per pu dip.
pub const REACTIVE_SUPPORT_GAIN: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid scenario field {name}: {reason}")]
    InvalidScenario { name: &'static str, reason: String },
    #[error("no equilibrium: i_d*X_g = {p_m} exceeds U_g = {u_g}")]
    NoEquilibrium { p_m: f64, u_g: f64 },
    #[error("TVC algebraic loop did not converge after {iterations} iterations (last step {last_step:e})")]
    AlgebraicLoopDiverged { iterations: usize, last_step: f64 },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn invalid_scenario(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidScenario {
        name,
        reason: reason.into(),
    }
}

/// Per-unit electrical and control constants of one converter-interfaced unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Grid reactance seen from the converter terminal, pu.
    pub x_g: f64,
    /// PLL proportional gain.
    pub k_ppll: f64,
    /// PLL integral gain.
    pub k_ipll: f64,
    /// Active-current climbing rate during recovery, pu/s.
    pub k_ramp: f64,
    /// TVC proportional gain.
    pub k_pv: f64,
    /// TVC integral gain, 1/s.
    pub k_iv: f64,
    /// Terminal-voltage reference, pu.
    pub u_tref: f64,
    /// Converter current limit, pu.
    pub i_max: f64,
    /// Nominal angular frequency, rad/s. Only used to annotate outputs.
    pub omega_0: f64,
}

impl SystemParams {
    /// Reference single-unit parameter set.
    ///
    /// `X_g`, `k_ppll` and `k_ipll` reproduce the published three-approximation
    /// critical angles of the six-case benchmark (only `k_ppll / sqrt(k_ipll)`
    /// enters the angles; `k_ipll` sets the time scale). `K_ramp` and the TVC
    /// gains are representative grid-code values.
    pub fn reference() -> Self {
        Self {
            x_g: 0.5,
            k_ppll: 70.0,
            k_ipll: 2500.0,
            k_ramp: 3.0,
            k_pv: 0.5,
            k_iv: 20.0,
            u_tref: 1.0,
            i_max: 1.1,
            omega_0: 100.0 * PI,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            ("X_g", self.x_g),
            ("k_ppll", self.k_ppll),
            ("k_ipll", self.k_ipll),
            ("K_ramp", self.k_ramp),
            ("K_pV", self.k_pv),
            ("K_iV", self.k_iv),
            ("U_tref", self.u_tref),
            ("I_max", self.i_max),
            ("omega_0", self.omega_0),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.x_g <= 0.0 {
            return Err(invalid("X_g", "must be > 0"));
        }
        if self.k_ipll <= 0.0 {
            return Err(invalid("k_ipll", "must be > 0"));
        }
        if self.k_ppll < 0.0 {
            return Err(invalid("k_ppll", "must be >= 0"));
        }
        if self.k_ramp <= 0.0 {
            return Err(invalid("K_ramp", "must be > 0"));
        }
        if self.i_max <= 0.0 {
            return Err(invalid("I_max", "must be > 0"));
        }
        if !(self.u_tref > 0.0 && self.u_tref <= 1.2) {
            return Err(invalid("U_tref", "must lie in (0, 1.2]"));
        }
        Ok(())
    }
}

/// Coefficients of the generalized swing equation for frozen `(i_d, U_g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GseParams {
    /// Equivalent inertia, `1 / k_ipll`.
    pub m: f64,
    /// Equivalent mechanical power, `i_d X_g`.
    pub p_m: f64,
    /// Infinite-bus voltage magnitude.
    pub u_g: f64,
    /// Damping coefficient, `k_ppll U_g / k_ipll`.
    pub alpha: f64,
}

impl GseParams {
    /// Conserved quantity of the undamped equation.
    pub fn energy(&self, s: PllState) -> f64 {
        0.5 * self.m * s.omega * s.omega - self.p_m * s.phi - self.u_g * s.phi.cos()
    }
}

/// Grid-code family; decides the LVRT entry threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    /// PMSG or DFIG wind turbine.
    #[default]
    Wind,
    /// Photovoltaic plant.
    Pv,
}

impl DeviceKind {
    /// Terminal voltage (pu) below which the LVRT switching control engages.
    ///
    /// Recorded as metadata: the unified model switches on `t_fault`/`t_clear`.
    pub fn lvrt_entry_threshold(self) -> f64 {
        match self {
            DeviceKind::Wind => 0.8,
            DeviceKind::Pv => 0.9,
        }
    }
}

/// During-fault reactive current setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactiveSetpoint {
    /// Grid-code rule, see [`auto_reactive_current`].
    Auto,
    /// Fixed value in pu (negative injects reactive support).
    Fixed(f64),
}

/// The three-stage unified LVRT experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub u_g1: f64,
    pub u_g2: f64,
    pub i_d1: f64,
    pub i_d2: f64,
    pub i_q2: ReactiveSetpoint,
    pub t_fault: f64,
    pub t_clear: Option<f64>,
    pub device: DeviceKind,
}

impl Scenario {
    /// Reference fault with the given dip and during-fault active current,
    /// starting from full active current at nominal voltage.
    pub fn reference(u_g2: f64, i_d2: f64) -> Self {
        Self {
            u_g1: 1.0,
            u_g2,
            i_d1: 1.0,
            i_d2,
            i_q2: ReactiveSetpoint::Auto,
            t_fault: 0.1,
            t_clear: None,
            device: DeviceKind::Wind,
        }
    }

    pub fn with_clearing(mut self, t_clear: f64) -> Self {
        self.t_clear = Some(t_clear);
        self
    }

    /// Fault duration, if a clearing time is set.
    pub fn duration(&self) -> Option<f64> {
        self.t_clear.map(|t| t - self.t_fault)
    }

    pub fn validate(&self, params: &SystemParams) -> Result<(), ModelError> {
        for (name, v) in [
            ("U_g1", self.u_g1),
            ("U_g2", self.u_g2),
            ("i_d1", self.i_d1),
            ("i_d2", self.i_d2),
            ("t_fault", self.t_fault),
        ] {
            if !v.is_finite() {
                return Err(invalid_scenario(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.u_g2 >= 0.0 && self.u_g2 < self.u_g1) {
            return Err(invalid_scenario("U_g2", "must satisfy 0 <= U_g2 < U_g1"));
        }
        if self.i_d1 < 0.0 || self.i_d2 < 0.0 {
            return Err(invalid_scenario("i_d2", "active currents must be >= 0"));
        }
        if self.i_d1 * params.x_g > self.u_g1 {
            return Err(invalid_scenario(
                "i_d1",
                "i_d1*X_g exceeds U_g1: no pre-fault equilibrium",
            ));
        }
        if self.i_d2 * params.x_g > self.u_g1 {
            return Err(invalid_scenario(
                "i_d2",
                "i_d2*X_g exceeds U_g1: no post-fault equilibrium",
            ));
        }
        if self.i_d1 > params.i_max {
            return Err(invalid_scenario("i_d1", "exceeds I_max"));
        }
        if let ReactiveSetpoint::Fixed(iq) = self.i_q2 {
            if !iq.is_finite() {
                return Err(invalid_scenario("i_q2", "must be finite"));
            }
            if self.i_d2.hypot(iq) > params.i_max {
                return Err(invalid_scenario("i_q2", "sqrt(i_d2^2 + i_q2^2) exceeds I_max"));
            }
        } else if self.i_d2 > params.i_max {
            return Err(invalid_scenario("i_d2", "exceeds I_max"));
        }
        if self.t_fault < 0.0 {
            return Err(invalid_scenario("t_fault", "must be >= 0"));
        }
        if let Some(tc) = self.t_clear {
            if !(tc.is_finite() && tc > self.t_fault) {
                return Err(invalid_scenario("t_clear", "must be > t_fault"));
            }
        }
        Ok(())
    }

    /// The during-fault reactive current with `Auto` resolved.
    pub fn resolved_i_q2(&self, params: &SystemParams) -> f64 {
        match self.i_q2 {
            ReactiveSetpoint::Fixed(v) => v,
            ReactiveSetpoint::Auto => auto_reactive_current(self, params),
        }
    }
}

/// PLL state: unwrapped angle mismatch and angular-frequency deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PllState {
    pub phi: f64,
    pub omega: f64,
}

impl PllState {
    pub fn new(phi: f64, omega: f64) -> Self {
        Self { phi, omega }
    }
}

/// State during early recovery: PLL, ramping active current and TVC integrator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stage3State {
    pub phi: f64,
    pub omega: f64,
    pub i_d: f64,
    pub z_q: f64,
}

impl Stage3State {
    pub fn pll(&self) -> PllState {
        PllState::new(self.phi, self.omega)
    }
}

/// Stable and unstable equilibria of the frozen GSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub phi_s: f64,
    pub phi_u: f64,
}

pub fn derive_gse(params: &SystemParams, i_d: f64, u_g: f64) -> GseParams {
    GseParams {
        m: 1.0 / params.k_ipll,
        p_m: i_d * params.x_g,
        u_g,
        alpha: params.k_ppll * u_g / params.k_ipll,
    }
}

pub fn equilibria(i_d: f64, u_g: f64, x_g: f64) -> Result<Equilibria, ModelError> {
    let p_m = i_d * x_g;
    if !(u_g > 0.0) || p_m > u_g || p_m < -u_g {
        return Err(ModelError::NoEquilibrium { p_m, u_g });
    }
    let phi_s = (p_m / u_g).asin();
    Ok(Equilibria {
        phi_s,
        phi_u: PI - phi_s,
    })
}

/// Time derivative of the PLL state under the frozen GSE.
pub fn gse_rhs(s: PllState, g: &GseParams) -> PllState {
    let (sin, cos) = s.phi.sin_cos();
    PllState {
        phi: s.omega,
        omega: (g.p_m - g.u_g * sin - g.alpha * cos * s.omega) / g.m,
    }
}

/// q-axis terminal voltage in the PLL frame, `i_d X_g - U_g sin(phi)`.
///
/// Zero exactly when the PLL is locked.
pub fn u_tq(phi: f64, i_d: f64, u_g: f64, x_g: f64) -> f64 {
    i_d * x_g - u_g * phi.sin()
}

/// Signed ramp rate that moves `i_d` toward `i_d_target`; zero once reached.
pub fn ramp_rate(i_d: f64, i_d_target: f64, k_ramp: f64) -> f64 {
    if i_d < i_d_target {
        k_ramp
    } else if i_d > i_d_target {
        -k_ramp
    } else {
        0.0
    }
}

/// Driving subsystem of early recovery: PLL plus active-current ramp.
///
/// Independent of `i_q` and `z_q`; the returned `z_q` component is zero and
/// the TVC integrator rate comes from [`tvc_integrator_rate`].
pub fn stage3_driving_rhs(
    s: Stage3State,
    params: &SystemParams,
    u_g: f64,
    i_d_target: f64,
) -> Stage3State {
    let rate = ramp_rate(s.i_d, i_d_target, params.k_ramp);
    stage3_driving_rhs_with_rate(s, params, u_g, rate)
}

/// [`stage3_driving_rhs`] with the ramp rate fixed by the caller.
///
/// The simulator uses this inside one ramp segment so that rounding at the
/// saturation instant cannot flip the sign of the rate.
pub fn stage3_driving_rhs_with_rate(
    s: Stage3State,
    params: &SystemParams,
    u_g: f64,
    rate: f64,
) -> Stage3State {
    let (sin, cos) = s.phi.sin_cos();
    let d_omega = params.k_ppll * (rate * params.x_g - u_g * cos * s.omega)
        + params.k_ipll * (s.i_d * params.x_g - u_g * sin);
    Stage3State {
        phi: s.omega,
        omega: d_omega,
        i_d: rate,
        z_q: 0.0,
    }
}

/// Algebraic terminal quantities for a given reactive current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalVoltage {
    pub u_td: f64,
    pub u_tq: f64,
    pub u_t: f64,
}

pub fn terminal_voltage(phi: f64, i_d: f64, i_q: f64, u_g: f64, x_g: f64) -> TerminalVoltage {
    let (sin, cos) = phi.sin_cos();
    let u_td = -i_q * x_g + u_g * cos;
    let u_tq = i_d * x_g - u_g * sin;
    TerminalVoltage {
        u_td,
        u_tq,
        u_t: u_td.hypot(u_tq),
    }
}

/// Solved TVC output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvcOutput {
    pub i_q: f64,
    pub u_t: f64,
    /// The current limit clipped `i_q`.
    pub saturated: bool,
}

/// Reactive-current headroom left by `i_d` under the converter limit.
pub fn reactive_headroom(i_d: f64, i_max: f64) -> f64 {
    (i_max * i_max - i_d * i_d).max(0.0).sqrt()
}

/// Response subsystem of early recovery: solves `i_q = K_pV U_t(i_q) + z_q`.
///
/// Newton on the scalar loop; the result is clipped to the current limit
/// left over by `i_d`.
pub fn stage3_response_step(
    s: Stage3State,
    params: &SystemParams,
    u_g: f64,
) -> Result<TvcOutput, ModelError> {
    let x_g = params.x_g;
    let (sin, cos) = s.phi.sin_cos();
    let u_tq = s.i_d * x_g - u_g * sin;
    let u_t_of = |i_q: f64| (-i_q * x_g + u_g * cos).hypot(u_tq);

    let mut i_q = s.z_q + params.k_pv * u_t_of(s.z_q);
    let mut last_step = f64::INFINITY;
    let mut converged = params.k_pv == 0.0;
    if !converged {
        for _ in 0..TVC_MAX_ITER {
            let u_td = -i_q * x_g + u_g * cos;
            let u_t = u_td.hypot(u_tq);
            let residual = i_q - params.k_pv * u_t - s.z_q;
            // d U_t / d i_q = -X_g u_td / U_t; at U_t = 0 use the one-sided slope.
            let du = if u_t > 0.0 { -x_g * u_td / u_t } else { x_g };
            let slope = 1.0 - params.k_pv * du;
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let step = residual / slope;
            i_q -= step;
            last_step = step.abs();
            if !i_q.is_finite() {
                break;
            }
            if last_step <= TVC_TOL {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(ModelError::AlgebraicLoopDiverged {
            iterations: TVC_MAX_ITER,
            last_step,
        });
    }
    let limit = reactive_headroom(s.i_d, params.i_max);
    let clipped = i_q.clamp(-limit, limit);
    Ok(TvcOutput {
        i_q: clipped,
        u_t: u_t_of(clipped),
        saturated: clipped != i_q,
    })
}

/// TVC integrator rate `K_iV (U_t - U_tref)`, frozen while the output is
/// clipped and the error would drive it further into the limit.
pub fn tvc_integrator_rate(out: &TvcOutput, params: &SystemParams) -> f64 {
    let rate = params.k_iv * (out.u_t - params.u_tref);
    if out.saturated && rate * out.i_q > 0.0 {
        0.0
    } else {
        rate
    }
}

/// Pre-fault operating point: locked PLL and settled TVC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreFaultPoint {
    pub phi_1: f64,
    pub i_q1: f64,
    pub z_q1: f64,
    pub u_t1: f64,
}

/// Stage-1 equilibrium with `u_tq = 0` and the TVC integrator chosen so that
/// `U_t` sits at `U_tref` when the current limit allows it.
pub fn pre_fault_point(
    scenario: &Scenario,
    params: &SystemParams,
) -> Result<PreFaultPoint, ModelError> {
    let eq = equilibria(scenario.i_d1, scenario.u_g1, params.x_g)?;
    let phi_1 = eq.phi_s;
    let limit = reactive_headroom(scenario.i_d1, params.i_max);
    let i_q1 = ((scenario.u_g1 * phi_1.cos() - params.u_tref) / params.x_g).clamp(-limit, limit);
    let u_t1 = terminal_voltage(phi_1, scenario.i_d1, i_q1, scenario.u_g1, params.x_g).u_t;
    Ok(PreFaultPoint {
        phi_1,
        i_q1,
        z_q1: i_q1 - params.k_pv * u_t1,
        u_t1,
    })
}

/// Grid-code reactive current for the dip:
/// `-min(1.5 (0.9 - U_t_dip), sqrt(I_max^2 - i_d2^2))`, where `U_t_dip` is the
/// terminal voltage right after the voltage step with the pre-fault `i_q`
/// still applied. No injection when the dip leaves `U_t` above the knee.
pub fn auto_reactive_current(scenario: &Scenario, params: &SystemParams) -> f64 {
    let (phi_1, i_q1) = match pre_fault_point(scenario, params) {
        Ok(p) => (p.phi_1, p.i_q1),
        Err(_) => return 0.0,
    };
    let dip = terminal_voltage(phi_1, scenario.i_d2, i_q1, scenario.u_g2, params.x_g).u_t;
    let demand = (REACTIVE_SUPPORT_GAIN * (REACTIVE_SUPPORT_KNEE - dip)).max(0.0);
    -demand.min(reactive_headroom(scenario.i_d2, params.i_max))
}

/// Angular-frequency jump at fault inception, from the step in `u_tq`
/// through the PLL proportional path.
pub fn jump_fault_entry(scenario: &Scenario, params: &SystemParams, phi_1: f64) -> f64 {
    params.k_ppll
        * ((scenario.i_d2 - scenario.i_d1) * params.x_g
            - (scenario.u_g2 - scenario.u_g1) * phi_1.sin())
}

/// Angular frequency right after clearing, for a bus recovering to 1 pu.
pub fn jump_fault_clear(params: &SystemParams, u_g2: f64, phi_c: f64, omega_2: f64) -> f64 {
    jump_fault_clear_to(params, u_g2, 1.0, phi_c, omega_2)
}

/// [`jump_fault_clear`] for a bus recovering to `u_g1`.
pub fn jump_fault_clear_to(
    params: &SystemParams,
    u_g2: f64,
    u_g1: f64,
    phi_c: f64,
    omega_2: f64,
) -> f64 {
    omega_2 + params.k_ppll * (u_g2 - u_g1) * phi_c.sin()
}
