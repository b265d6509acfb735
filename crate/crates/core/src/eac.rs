//! Improved equal-area criterion for the critical clearing angle (CCA) and
//! time (CCT).
//!
//! Three successively refined approximations:
//!
//! 1. classic equal areas on the `P_m - U_g sin(phi)` curves, closed form;
//! 2. adds the proportional-path frequency jumps at fault inception and
//!    clearing by matching the stage-2 and stage-3 conservative energy
//!    curves through the clearing jump (scalar root problem);
//! 3. corrects 2 with the damping energy dissipated along those curves.
//!
//! Each angle is mapped to a clearing time along the during-fault trajectory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    derive_gse, equilibria, gse_rhs, jump_fault_entry, ModelError, PllState, Scenario,
    SystemParams,
};
use crate::numerics::{adaptive_simpson, brent, first_sign_change, QuadError};
use crate::sim::integrator::{integrate, rk4_step, Flow};
use crate::sim::{oracle_cct, IntegratorConfig, SimError};

/// Inset of the root-search bracket from the two equilibria, rad.
pub const ROOT_BRACKET_INSET: f64 = 1e-9;
/// Panels scanned for the first sign change of the second-approximation residual.
const ROOT_SCAN_PANELS: usize = 2000;
/// Absolute tolerance of the damping-energy quadrature.
pub const DAMPING_QUAD_TOL: f64 = 1e-10;
const DAMPING_QUAD_PANELS: usize = 16;
/// Longest during-fault run searched for the CCA crossing, s.
pub const CCT_SEARCH_HORIZON: f64 = 5.0;
/// Localization tolerance for the CCA crossing time, s.
pub const CCT_TIME_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EacError {
    #[error("approximation {approx}: arccos argument {arg} outside [-1, 1]")]
    ArgOutOfRange { approx: u8, arg: f64 },
    #[error("approximation {approx}: angle {phi} outside ({lo}, {hi})")]
    OutsideBounds { approx: u8, phi: f64, lo: f64, hi: f64 },
    #[error("no root of the jump-matching equation on [{a}, {b}] (residuals {fa:e}, {fb:e})")]
    NoRoot { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("fault trajectory peaks at {peak_phi} rad below the critical angle {phi_cr} rad")]
    NeverReached { phi_cr: f64, peak_phi: f64 },
    #[error("invalid analyzer inputs: {0}")]
    InvalidInputs(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Which voltage sets the damping coefficient of the post-clearing segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DampingModel {
    /// `alpha_2` from `U_g2` before clearing, `alpha_3` from `U_g1` after.
    #[default]
    StageDependent,
    /// `alpha_2` on both segments.
    Constant,
}

/// Scalars the analyzer works with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EacInputs {
    /// Pre-fault stable equilibrium.
    pub phi_1: f64,
    /// Early-recovery unstable equilibrium (`i_d2` at `U_g1`).
    pub phi_3u: f64,
    pub p_m2: f64,
    pub u_g2: f64,
    /// Post-clearing bus voltage, normally 1.
    pub u_g1: f64,
    pub m: f64,
    pub k_ppll: f64,
    pub alpha_2: f64,
    pub alpha_3: f64,
}

impl EacInputs {
    pub fn from_scenario(
        scenario: &Scenario,
        params: &SystemParams,
        damping: DampingModel,
    ) -> Result<Self, EacError> {
        let phi_1 = equilibria(scenario.i_d1, scenario.u_g1, params.x_g)?.phi_s;
        let phi_3u = equilibria(scenario.i_d2, scenario.u_g1, params.x_g)?.phi_u;
        let g2 = derive_gse(params, scenario.i_d2, scenario.u_g2);
        let g3 = derive_gse(params, scenario.i_d2, scenario.u_g1);
        let inp = Self {
            phi_1,
            phi_3u,
            p_m2: g2.p_m,
            u_g2: scenario.u_g2,
            u_g1: scenario.u_g1,
            m: g2.m,
            k_ppll: params.k_ppll,
            alpha_2: g2.alpha,
            alpha_3: match damping {
                DampingModel::StageDependent => g3.alpha,
                DampingModel::Constant => g2.alpha,
            },
        };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<(), EacError> {
        let bad = |m: &str| Err(EacError::InvalidInputs(m.to_string()));
        let all = [
            self.phi_1,
            self.phi_3u,
            self.p_m2,
            self.u_g2,
            self.u_g1,
            self.m,
            self.k_ppll,
            self.alpha_2,
            self.alpha_3,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all inputs must be finite");
        }
        if !(self.phi_1 < self.phi_3u) {
            return bad("phi_1 must be below phi_3u");
        }
        if !(self.u_g2 < self.u_g1) {
            return bad("U_g2 must be below U_g1");
        }
        if !(self.p_m2 < self.u_g1) {
            return bad("P_m2 must be below U_g1 (no unstable equilibrium otherwise)");
        }
        if !(self.m > 0.0) {
            return bad("M must be > 0");
        }
        Ok(())
    }

    /// `omega^2` on the stage-2 conservative curve with energy `h_2`, clamped at 0.
    pub fn omega_sq_stage2(&self, phi: f64, h_2: f64) -> f64 {
        (2.0 * (self.p_m2 * phi + self.u_g2 * phi.cos() + h_2) / self.m).max(0.0)
    }

    /// `omega^2` on the stage-3 conservative curve with energy `h_3`, clamped at 0.
    pub fn omega_sq_stage3(&self, phi: f64, h_3: f64) -> f64 {
        (2.0 * (self.p_m2 * phi + self.u_g1 * phi.cos() + h_3) / self.m).max(0.0)
    }
}

/// First approximation: equal acceleration and deceleration areas.
pub fn cca_first(inp: &EacInputs) -> Result<f64, EacError> {
    let arg = (inp.u_g2 * inp.phi_1.cos() - inp.u_g1 * inp.phi_3u.cos()
        + inp.p_m2 * (inp.phi_1 - inp.phi_3u))
        / (inp.u_g2 - inp.u_g1);
    bounded(inp, acos_checked(arg, 1)?, 1)
}

fn bounded(inp: &EacInputs, phi: f64, approx: u8) -> Result<f64, EacError> {
    if within_bounds(inp, phi) {
        Ok(phi)
    } else {
        Err(EacError::OutsideBounds {
            approx,
            phi,
            lo: inp.phi_1,
            hi: inp.phi_3u,
        })
    }
}

fn acos_checked(arg: f64, approx: u8) -> Result<f64, EacError> {
    if (-1.0..=1.0).contains(&arg) {
        Ok(arg.acos())
    } else {
        Err(EacError::ArgOutOfRange { approx, arg })
    }
}

/// Energy levels `(h_2, h_3)` of the during-fault orbit through
/// `(phi_1, omega_1)` and of the post-clearing orbit through the saddle.
pub fn energy_constants(inp: &EacInputs, omega_1: f64) -> (f64, f64) {
    let h_2 = 0.5 * inp.m * omega_1 * omega_1 - inp.p_m2 * inp.phi_1 - inp.u_g2 * inp.phi_1.cos();
    let h_3 = -inp.p_m2 * inp.phi_3u - inp.u_g1 * inp.phi_3u.cos();
    (h_2, h_3)
}

/// Residual of the jump-matching equation at `phi`.
pub fn cca_second_residual(inp: &EacInputs, h_2: f64, h_3: f64, phi: f64) -> f64 {
    inp.omega_sq_stage3(phi, h_3).sqrt()
        - inp.omega_sq_stage2(phi, h_2).sqrt()
        - inp.k_ppll * (inp.u_g2 - inp.u_g1) * phi.sin()
}

/// Second approximation: the smallest angle at which the clearing jump
/// lands the during-fault orbit exactly on the saddle orbit.
pub fn cca_second(inp: &EacInputs, omega_1: f64) -> Result<f64, EacError> {
    let (h_2, h_3) = energy_constants(inp, omega_1);
    let f = |phi: f64| cca_second_residual(inp, h_2, h_3, phi);
    let a = inp.phi_1 + ROOT_BRACKET_INSET;
    let mut b = inp.phi_3u - ROOT_BRACKET_INSET;
    // Past the turning point of the during-fault swing the clamped curve
    // reads zero and would fake a root; only scan the reachable arc.
    let reach = |phi: f64| inp.p_m2 * phi + inp.u_g2 * phi.cos() + h_2;
    if reach(b) < 0.0 {
        if let Some((lo, hi)) = first_sign_change(reach, a, b, ROOT_SCAN_PANELS) {
            b = if lo == hi { lo } else { brent(reach, lo, hi, 1e-15, 200).unwrap_or(lo) };
        }
    }
    let Some((lo, hi)) = first_sign_change(f, a, b, ROOT_SCAN_PANELS) else {
        return Err(EacError::NoRoot {
            a,
            b,
            fa: f(a),
            fb: f(b),
        });
    };
    if lo == hi {
        return Ok(lo);
    }
    brent(f, lo, hi, 1e-15, 200).map_err(|_| EacError::NoRoot {
        a: lo,
        b: hi,
        fa: f(lo),
        fb: f(hi),
    })
}

/// Damping energy dissipated along the two conservative curves, from
/// `phi_1` to `phi_cr_2` on the stage-2 curve and on to `phi_3u` on the
/// stage-3 curve.
pub fn damping_integral(inp: &EacInputs, phi_cr_2: f64, h_2: f64, h_3: f64) -> Result<f64, EacError> {
    damping_integral_tol(inp, phi_cr_2, h_2, h_3, DAMPING_QUAD_TOL)
}

pub fn damping_integral_tol(
    inp: &EacInputs,
    phi_cr_2: f64,
    h_2: f64,
    h_3: f64,
    tol: f64,
) -> Result<f64, EacError> {
    let before = if inp.alpha_2 == 0.0 {
        0.0
    } else {
        adaptive_simpson(
            |p| inp.alpha_2 * p.cos() * inp.omega_sq_stage2(p, h_2).sqrt(),
            inp.phi_1,
            phi_cr_2,
            0.5 * tol,
            DAMPING_QUAD_PANELS,
        )?
    };
    let after = if inp.alpha_3 == 0.0 {
        0.0
    } else {
        adaptive_simpson(
            |p| inp.alpha_3 * p.cos() * inp.omega_sq_stage3(p, h_3).sqrt(),
            phi_cr_2,
            inp.phi_3u,
            0.5 * tol,
            DAMPING_QUAD_PANELS,
        )?
    };
    Ok(before + after)
}

/// Third approximation: shifts `phi_cr_2` by the damping energy.
pub fn cca_third(inp: &EacInputs, phi_cr_2: f64, s_d: f64) -> Result<f64, EacError> {
    let phi = acos_checked(s_d / (inp.u_g2 - inp.u_g1) + phi_cr_2.cos(), 3)?;
    bounded(inp, phi, 3)
}

/// Acceleration and deceleration areas of the first approximation at
/// clearing angle `phi_c`, by quadrature.
pub fn equal_areas(inp: &EacInputs, phi_c: f64) -> Result<(f64, f64), EacError> {
    let acc = adaptive_simpson(
        |p| inp.p_m2 - inp.u_g2 * p.sin(),
        inp.phi_1,
        phi_c,
        1e-13,
        8,
    )?;
    let dec = adaptive_simpson(
        |p| inp.u_g1 * p.sin() - inp.p_m2,
        phi_c,
        inp.phi_3u,
        1e-13,
        8,
    )?;
    Ok((acc, dec))
}

/// Time after fault inception at which the during-fault trajectory first
/// reaches `phi_cr`.
pub fn cct_from_cca(
    phi_cr: f64,
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
) -> Result<f64, EacError> {
    cfg.validate()?;
    let phi_1 = equilibria(scenario.i_d1, scenario.u_g1, params.x_g)?.phi_s;
    if !(phi_cr > phi_1) || !phi_cr.is_finite() {
        return Err(EacError::InvalidInputs(format!(
            "critical angle {phi_cr} must exceed phi_1 = {phi_1}"
        )));
    }
    let omega_1 = jump_fault_entry(scenario, params, phi_1);
    let g = derive_gse(params, scenario.i_d2, scenario.u_g2);
    let rhs = |y: &[f64; 2]| {
        let d = gse_rhs(PllState::new(y[0], y[1]), &g);
        Ok([d.phi, d.omega])
    };
    let mut prev = (0.0, [phi_1, omega_1]);
    let mut bracket = None;
    let mut peak = None;
    let mut climbing = omega_1 > 0.0;
    integrate(&rhs, [phi_1, omega_1], 0.0, CCT_SEARCH_HORIZON, cfg, |t, y| {
        if y[0] >= phi_cr {
            bracket = Some((prev, t));
            return Flow::Stop;
        }
        if climbing && y[1] <= 0.0 {
            peak = Some(y[0].max(prev.1[0]));
            return Flow::Stop;
        }
        climbing |= y[1] > 0.0;
        prev = (t, *y);
        Flow::Continue
    })?;
    let Some(((t0, y0), t1)) = bracket else {
        return Err(EacError::NeverReached {
            phi_cr,
            peak_phi: peak.unwrap_or(prev.1[0]),
        });
    };
    // Dense output: re-take the step from the last sample below `phi_cr`
    // with a variable length and solve for the crossing.
    let f = |tau: f64| match rk4_step(&rhs, &y0, tau) {
        Ok(y) => y[0] - phi_cr,
        Err(_) => f64::NAN,
    };
    let tau = brent(f, 0.0, t1 - t0, CCT_TIME_TOL * 1e-3, 200)
        .map_err(|e| EacError::InvalidInputs(format!("crossing localization failed: {e}")))?;
    Ok(t0 + tau)
}

/// A computed value or the reason it is missing. Serializes as a bare
/// number or a bare string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Value(f64),
    Failed(String),
}

impl Outcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            Outcome::Value(v) => Some(*v),
            Outcome::Failed(_) => None,
        }
    }

    fn from_result<E: std::fmt::Display>(r: &Result<f64, E>) -> Self {
        match r {
            Ok(v) => Outcome::Value(*v),
            Err(e) => Outcome::Failed(e.to_string()),
        }
    }
}

/// Signed relative errors `(approx - oracle) / oracle` of the three
/// approximations; `None` where either side is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    pub approx_1: Option<f64>,
    pub approx_2: Option<f64>,
    pub approx_3: Option<f64>,
}

impl ErrorTriple {
    fn new(approx: [&Outcome; 3], oracle: &Outcome) -> Option<Self> {
        let o = oracle.value()?;
        let e = |a: &Outcome| a.value().map(|a| (a - o) / o);
        Some(Self {
            approx_1: e(approx[0]),
            approx_2: e(approx[1]),
            approx_3: e(approx[2]),
        })
    }

    pub fn as_array(&self) -> [Option<f64>; 3] {
        [self.approx_1, self.approx_2, self.approx_3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaReport {
    pub phi_1: f64,
    pub phi_3u: f64,
    pub omega_1: f64,
    pub h_2: f64,
    pub h_3: f64,
    pub s_d: Outcome,
    pub phi_cr_1: Outcome,
    pub phi_cr_2: Outcome,
    pub phi_cr_3: Outcome,
    pub oracle: Option<Outcome>,
    pub errors: Option<ErrorTriple>,
}

impl CcaReport {
    pub fn approximations(&self) -> [&Outcome; 3] {
        [&self.phi_cr_1, &self.phi_cr_2, &self.phi_cr_3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CctReport {
    pub t_cr_1: Outcome,
    pub t_cr_2: Outcome,
    pub t_cr_3: Outcome,
    pub oracle: Option<Outcome>,
    pub errors: Option<ErrorTriple>,
}

impl CctReport {
    pub fn approximations(&self) -> [&Outcome; 3] {
        [&self.t_cr_1, &self.t_cr_2, &self.t_cr_3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub cca: CcaReport,
    pub cct: CctReport,
}

/// Runs all three approximations, maps them to clearing times and, with
/// `with_oracle`, compares against the bisection oracle. Failures are kept
/// per field so partial results survive.
pub fn analyze(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    with_oracle: bool,
) -> Result<Analysis, EacError> {
    analyze_with(scenario, params, cfg, with_oracle, DampingModel::default())
}

pub fn analyze_with(
    scenario: &Scenario,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    with_oracle: bool,
    damping: DampingModel,
) -> Result<Analysis, EacError> {
    params.validate()?;
    scenario.validate(params)?;
    let inp = EacInputs::from_scenario(scenario, params, damping)?;
    let omega_1 = jump_fault_entry(scenario, params, inp.phi_1);
    let (h_2, h_3) = energy_constants(&inp, omega_1);

    let c1 = cca_first(&inp);
    let c2 = cca_second(&inp, omega_1);
    let s_d = c2
        .clone()
        .and_then(|c2| damping_integral(&inp, c2, h_2, h_3));
    let c3 = match (&c2, &s_d) {
        (Ok(c2), Ok(s_d)) => cca_third(&inp, *c2, *s_d),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    let cct = |c: &Result<f64, EacError>| {
        c.clone()
            .and_then(|phi| cct_from_cca(phi, scenario, params, cfg))
    };
    let (t1, t2, t3) = (cct(&c1), cct(&c2), cct(&c3));

    let oracle = with_oracle.then(|| oracle_cct(scenario, params, cfg));
    let oracle_phi = oracle
        .as_ref()
        .map(|r| Outcome::from_result(&r.as_ref().map(|o| o.phi_cr).map_err(Clone::clone)));
    let oracle_t = oracle
        .as_ref()
        .map(|r| Outcome::from_result(&r.as_ref().map(|o| o.t_cr).map_err(Clone::clone)));

    let mut cca = CcaReport {
        phi_1: inp.phi_1,
        phi_3u: inp.phi_3u,
        omega_1,
        h_2,
        h_3,
        s_d: Outcome::from_result(&s_d),
        phi_cr_1: Outcome::from_result(&c1),
        phi_cr_2: Outcome::from_result(&c2),
        phi_cr_3: Outcome::from_result(&c3),
        oracle: oracle_phi,
        errors: None,
    };
    cca.errors = cca
        .oracle
        .as_ref()
        .and_then(|o| ErrorTriple::new(cca.approximations(), o));
    let mut cct = CctReport {
        t_cr_1: Outcome::from_result(&t1),
        t_cr_2: Outcome::from_result(&t2),
        t_cr_3: Outcome::from_result(&t3),
        oracle: oracle_t,
        errors: None,
    };
    cct.errors = cct
        .oracle
        .as_ref()
        .and_then(|o| ErrorTriple::new(cct.approximations(), o));
    Ok(Analysis { cca, cct })
}

/// Whether `phi` lies strictly between the two equilibria bounding every
/// approximation.
pub fn within_bounds(inp: &EacInputs, phi: f64) -> bool {
    phi > inp.phi_1 && phi < inp.phi_3u
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn hand_inputs(k_ppll: f64) -> EacInputs {
        EacInputs {
            phi_1: 0.4f64.asin(),
            phi_3u: PI - 0.2f64.asin(),
            p_m2: 0.2,
            u_g2: 0.2,
            u_g1: 1.0,
            m: 1.0,
            k_ppll,
            alpha_2: 0.0,
            alpha_3: 0.0,
        }
    }

    #[test]
    fn first_approximation_hand_value() {
        let inp = hand_inputs(0.0);
        let c = cca_first(&inp).unwrap();
        // argument of the arccos, evaluated by hand
        let arg = (0.2 * 0.84f64.sqrt() + 0.96f64.sqrt() + 0.2 * (inp.phi_1 - inp.phi_3u)) / -0.8;
        assert!((arg - (-0.8217)).abs() < 5e-4, "{arg}");
        // arccos(-0.8217) = 2.5352
        assert!((c - 2.5352).abs() < 5e-4, "{c}");
        let (acc, dec) = equal_areas(&inp, c).unwrap();
        assert!((acc - dec).abs() < 1e-10);
    }

    #[test]
    fn energy_constants_hand_value() {
        let inp = hand_inputs(2.0);
        let (h_2, h_3) = energy_constants(&inp, 0.24);
        assert!((h_2 - (-0.2368)).abs() < 5e-5, "{h_2}");
        assert_eq!(h_3, -0.2 * inp.phi_3u - inp.phi_3u.cos());
        let (h_2_still, _) = energy_constants(&inp, 0.0);
        assert_eq!(h_2_still, -0.2 * inp.phi_1 - 0.2 * inp.phi_1.cos());
    }

    #[test]
    fn second_reduces_to_first_without_jumps() {
        let inp = hand_inputs(0.0);
        let c1 = cca_first(&inp).unwrap();
        let c2 = cca_second(&inp, 0.0).unwrap();
        assert!((c1 - c2).abs() < 1e-9, "{c1} {c2}");
    }

    #[test]
    fn second_root_and_jump_consistency() {
        let mut inp = hand_inputs(2.0);
        inp.m = 0.05;
        let omega_1 = 0.24;
        let (h_2, h_3) = energy_constants(&inp, omega_1);
        let c2 = cca_second(&inp, omega_1).unwrap();
        assert!(within_bounds(&inp, c2));
        assert!(cca_second_residual(&inp, h_2, h_3, c2).abs() < 1e-10);
        let w2 = inp.omega_sq_stage2(c2, h_2).sqrt();
        let w3 = inp.omega_sq_stage3(c2, h_3).sqrt();
        let jump = inp.k_ppll * (inp.u_g2 - inp.u_g1) * c2.sin();
        assert!((w3 - w2 - jump).abs() < 1e-10);
    }

    #[test]
    fn zero_damping_leaves_second_unchanged() {
        let inp = hand_inputs(2.0);
        let c3 = cca_third(&inp, 2.7, 0.0).unwrap();
        assert!((c3 - 2.7).abs() < 1e-15);
        assert_eq!(damping_integral(&inp, 2.7, -0.2, -0.3).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_argument_is_reported() {
        let inp = hand_inputs(0.0);
        assert!(matches!(
            cca_third(&inp, 2.7, 10.0),
            Err(EacError::ArgOutOfRange { approx: 3, .. })
        ));
    }

    #[test]
    fn outcome_serializes_bare() {
        assert_eq!(serde_json::to_string(&Outcome::Value(1.5)).unwrap(), "1.5");
        let f: Outcome = serde_json::from_str("\"no-bracket: always stable\"").unwrap();
        assert_eq!(f, Outcome::Failed("no-bracket: always stable".into()));
    }
}
