use serde::{Deserialize, Serialize};

use crate::model::PllState;

/// LVRT stage label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    PreFault = 1,
    DuringFault = 2,
    EarlyRecovery = 3,
    LateRecovery = 4,
}

impl Stage {
    pub fn number(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub stage: Stage,
    pub phi: f64,
    pub omega: f64,
    pub i_d: f64,
    pub i_q: f64,
    pub u_t: f64,
}

impl Sample {
    pub fn pll(&self) -> PllState {
        PllState::new(self.phi, self.omega)
    }
}

/// A stage switch. `before` is the last sample of the old stage at `t`; the
/// trajectory sample at `t` is the state after the switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub omega_before: f64,
    pub omega_after: f64,
    pub before: Sample,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub jumps: Vec<JumpEvent>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Time of the last stage switch, or of the first sample.
    pub fn last_switch_time(&self) -> Option<f64> {
        self.jumps
            .last()
            .map(|j| j.t)
            .or_else(|| self.samples.first().map(|s| s.t))
    }

    pub fn samples_in(&self, stage: Stage) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.stage == stage)
    }

    /// Rows in export order: each switch contributes its pre-switch sample
    /// immediately before the post-switch sample with the same `t`.
    pub fn rows(&self) -> Vec<Sample> {
        let mut out = Vec::with_capacity(self.samples.len() + self.jumps.len());
        let mut jumps = self.jumps.iter().peekable();
        for s in &self.samples {
            while let Some(j) = jumps.peek() {
                if j.t <= s.t {
                    out.push(j.before);
                    jumps.next();
                } else {
                    break;
                }
            }
            out.push(*s);
        }
        out.extend(jumps.map(|j| j.before));
        out
    }

    /// Checks time ordering, stage monotonicity and jump bookkeeping.
    pub fn check_invariants(&self) -> Result<(), String> {
        for w in self.samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(format!("time not increasing at t = {}", w[1].t));
            }
            if w[1].stage < w[0].stage {
                return Err(format!("stage decreases at t = {}", w[1].t));
            }
            if w[1].stage != w[0].stage
                && !self.jumps.iter().any(|j| j.t > w[0].t && j.t <= w[1].t)
            {
                return Err(format!("stage change without jump record at t = {}", w[1].t));
            }
        }
        for j in &self.jumps {
            if !self.samples.iter().any(|s| s.t == j.t) {
                return Err(format!("jump at t = {} has no post-switch sample", j.t));
            }
            if j.before.omega != j.omega_before {
                return Err(format!("jump at t = {} disagrees with its pre-switch sample", j.t));
            }
        }
        Ok(())
    }
}
