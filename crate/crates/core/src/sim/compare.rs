use rayon::prelude::*;

use super::engine::run_scenario;
use super::scenario::{Event, EventKind, Scenario, Trace};
use crate::analysis::{
    max_rocof, step_metrics_with, MetricOptions, MetricsReport, StepMetrics, DEFAULT_ROCOF_LIMIT,
    DEFAULT_ROCOF_WINDOW,
};
use crate::controllers::Strategy;
use crate::plant::Mode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonOptions {
    /// s
    pub rocof_window: f64,
    /// Hz/s
    pub rocof_limit: f64,
    pub metrics: MetricOptions,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self {
            rocof_window: DEFAULT_ROCOF_WINDOW,
            rocof_limit: DEFAULT_ROCOF_LIMIT,
            metrics: MetricOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub mode: Mode,
    pub metrics: StepMetrics,
}

impl ComparisonRow {
    pub fn report(&self, rocof_limit: f64) -> MetricsReport {
        MetricsReport::new(self.strategy.as_str(), self.mode.as_str(), &self.metrics, rocof_limit)
    }
}

/// The event whose response is measured: the first reference step in grid
/// mode, the first load step when islanded, else the first event.
fn step_event(sc: &Scenario) -> Option<Event> {
    let wanted = match sc.mode {
        Mode::Gc => EventKind::ReferenceStep,
        Mode::Is => EventKind::LoadStep,
    };
    sc.events
        .iter()
        .find(|e| e.kind == wanted)
        .or_else(|| sc.events.first())
        .copied()
}

/// Metrics of the post-step segment: active power in grid mode, frequency
/// when islanded. ROCOF is always taken from the frequency.
pub fn step_segment_metrics(sc: &Scenario, trace: &Trace, opts: &ComparisonOptions) -> Result<StepMetrics> {
    let (start, value) = match step_event(sc) {
        Some(e) => (sc.event_step(&e).min(trace.len() - 1), e.value),
        None => (0, 0.0),
    };
    let freq = &trace.freq[start..];
    let (series, magnitude) = match sc.mode {
        Mode::Gc => (&trace.p[start..], value),
        Mode::Is => (freq, freq[freq.len() - 1] - freq[0]),
    };
    let magnitude = if magnitude != 0.0 { magnitude } else { 1.0 };
    let mut m = step_metrics_with(series, sc.dt, magnitude, &opts.metrics)?;
    m.max_rocof = Some(max_rocof(freq, sc.dt, opts.rocof_window));
    Ok(m)
}

/// Runs scenarios that differ only in the control law, in parallel, and
/// returns one metrics row per scenario in input order.
pub fn run_comparison(scenarios: &[Scenario], opts: &ComparisonOptions) -> Result<Vec<ComparisonRow>> {
    if let Some(first) = scenarios.first() {
        for sc in &scenarios[1..] {
            if sc.mode != first.mode || sc.plant != first.plant || sc.events != first.events {
                return Err(Error::param(
                    "scenarios",
                    "compared scenarios must share mode, plant and events",
                ));
            }
        }
    }
    scenarios
        .par_iter()
        .map(|sc| {
            let trace = run_scenario(sc)?;
            Ok(ComparisonRow {
                strategy: sc.controller.strategy(),
                mode: sc.mode,
                metrics: step_segment_metrics(sc, &trace, opts)?,
            })
        })
        .collect()
}
