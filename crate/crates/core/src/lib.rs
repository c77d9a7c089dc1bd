//! Grid-forming inverter control toolkit.
//!
//! The crate covers three reference-EMF generation laws (filtered droop with
//! coupling compensation, a virtual synchronous generator and the unified
//! droop/VSG controller), a phasor-level network model, closed-loop
//! small-signal analysis and a deterministic fixed-step simulator that runs
//! grid-connected and islanded step experiments.
//!
//! Module map:
//!
//! - [`tf`]: polynomials, rational transfer functions, state-space
//!   realization, pole extraction and step responses.
//! - [`controllers`]: controller parameter blocks and their continuous-time
//!   state derivatives, the droop-to-VSG parameter mapping and linearization.
//! - [`plant`]: power transfer across a line reactance and the islanded bus.
//! - [`analysis`]: closed-loop assembly, the three-pole/one-zero design form
//!   and step/ROCOF metrics.
//! - [`sim`]: scenarios, traces and the RK4 simulation engine.
//! - [`config`]: strict JSON scenario configuration and bundled presets.

pub mod analysis;
pub mod config;
pub mod controllers;
mod error;
pub mod ode;
pub mod plant;
pub mod sim;
pub mod tf;

pub use error::{Error, Result};

/// Nominal angular frequency of a 50 Hz system, rad/s.
pub const OMEGA_50HZ: f64 = 100.0 * std::f64::consts::PI;
