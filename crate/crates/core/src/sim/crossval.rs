use serde::Serialize;

use super::engine::{run_scenario, solve_equilibrium};
use super::scenario::{EventKind, Scenario};
use crate::analysis::{build_gc_closed_loop, build_gc_design_model, build_is_closed_loop, DesignParams};
use crate::controllers::{linearize_controller, OperatingPoint};
use crate::plant::Mode;
use crate::tf::step_response;
use crate::{Error, Result};

/// Agreement between a simulated step and its small-signal prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossValidation {
    /// `max |d_sim - d_model| / max |d_model|` over the post-step segment.
    pub max_rel_deviation: f64,
    /// Step size, W.
    pub step_magnitude: f64,
    /// Step size as a fraction of the rated power.
    pub step_fraction: f64,
    /// True when the step is at most 2 % of rated power; larger steps are
    /// outside the regime where the comparison is meaningful.
    pub small_signal: bool,
}

/// Compares the simulated response to the scenario's first step event with
/// the linear model: active power against the grid-connected loop (or the
/// design model when `dp` is given), frequency against the islanded loop.
pub fn cross_validate_small_signal(
    sc: &Scenario,
    dp: Option<&DesignParams>,
    rated_power: f64,
) -> Result<CrossValidation> {
    let kind = match sc.mode {
        Mode::Gc => EventKind::ReferenceStep,
        Mode::Is => EventKind::LoadStep,
    };
    let ev = sc
        .events
        .iter()
        .find(|e| e.kind == kind)
        .copied()
        .ok_or_else(|| Error::param("events", "needs a step event matching the mode"))?;
    if ev.value == 0.0 {
        return Err(Error::param("events", "step magnitude must be nonzero"));
    }

    let eq = solve_equilibrium(sc)?;
    let model = match (sc.mode, dp) {
        (Mode::Gc, Some(dp)) => build_gc_design_model(dp, &sc.plant)?,
        (mode, _) => {
            let op = OperatingPoint {
                state: eq.state,
                p: eq.p,
                q: eq.q,
            };
            let lf = linearize_controller(&sc.controller, &op)?;
            match mode {
                Mode::Gc => build_gc_closed_loop(&lf, &sc.plant)?,
                Mode::Is => build_is_closed_loop(&lf)?,
            }
        }
    };

    let trace = run_scenario(sc)?;
    let k0 = sc.event_step(&ev);
    let series = match sc.mode {
        Mode::Gc => &trace.p[k0..],
        Mode::Is => &trace.omega[k0..],
    };
    let horizon = (series.len() - 1) as f64 * sc.dt;
    let unit = if horizon > sc.dt {
        step_response(&model, horizon, sc.dt)?
    } else {
        vec![model.dc_gain(); series.len()]
    };

    let base = series[0];
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for (y, u) in series.iter().zip(&unit) {
        let predicted = u * ev.value;
        worst = worst.max(((y - base) - predicted).abs());
        peak = peak.max(predicted.abs());
    }
    let step_fraction = ev.value.abs() / rated_power;
    Ok(CrossValidation {
        max_rel_deviation: if peak > 0.0 { worst / peak } else { worst },
        step_magnitude: ev.value,
        step_fraction,
        small_signal: step_fraction <= 0.02,
    })
}
