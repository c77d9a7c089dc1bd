//! Fixed-step simulation of a controller against the phasor plant.
//!
//! The state vector is the controller's dynamic states followed by the
//! inverter angle measured in the frame rotating at the plant's nominal
//! frequency. Scenarios start from the pre-event equilibrium and apply
//! timed events at the nearest integration step.

mod compare;
mod crossval;
mod engine;
mod parallel;
mod scenario;

pub use compare::{run_comparison, step_segment_metrics, ComparisonOptions, ComparisonRow};
pub use crossval::{cross_validate_small_signal, CrossValidation};
pub use engine::{run_scenario, solve_equilibrium, Equilibrium};
pub use parallel::{run_parallel_sharing, ParallelScenario, ParallelUnit, SharingReport};
pub use scenario::{format_sig, Event, EventKind, Scenario, Trace, TRACE_HEADER};
