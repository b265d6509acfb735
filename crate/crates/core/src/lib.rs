//! Generalized swing equation (GSE) model of the low-voltage ride-through
//! dynamics of grid-following converters, and an equal-area-criterion
//! analyzer for the critical clearing angle and time.
//!
//! - [`model`]: parameters, equilibria, right-hand sides and jump maps.
//! - [`sim`]: the four-stage switching simulation, stability verdicts, the
//!   bisection clearing-time oracle, basin maps and farm aggregation.
//! - [`eac`]: the three CCA approximations and their clearing times.
//! - [`config`], [`report`], [`sweep`]: scenario files, JSON/CSV output and
//!   table-shaped sweeps.

pub mod config;
pub mod eac;
pub mod model;
pub mod numerics;
pub mod report;
pub mod sim;
pub mod sweep;
