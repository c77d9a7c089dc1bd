use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default ROCOF averaging window, s.
pub const DEFAULT_ROCOF_WINDOW: f64 = 0.1;
/// Default ROCOF compliance limit, Hz/s.
pub const DEFAULT_ROCOF_LIMIT: f64 = 1.0;

/// Step-response figures of merit. Times are measured from the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub rise_time_10_90: f64,
    pub settling_time_2pct: f64,
    pub overshoot_pct: f64,
    pub steady_state: f64,
    /// Hz/s; only for frequency traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rocof: Option<f64>,
}

/// Thresholds used by [`step_metrics_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricOptions {
    #[serde(default = "MetricOptions::default_rise_low")]
    pub rise_low: f64,
    #[serde(default = "MetricOptions::default_rise_high")]
    pub rise_high: f64,
    #[serde(default = "MetricOptions::default_settling_band")]
    pub settling_band: f64,
}

impl MetricOptions {
    fn default_rise_low() -> f64 {
        0.1
    }
    fn default_rise_high() -> f64 {
        0.9
    }
    fn default_settling_band() -> f64 {
        0.02
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.rise_low && self.rise_low < self.rise_high && self.rise_high <= 1.0) {
            return Err(Error::param("rise_low", "need 0 < rise_low < rise_high <= 1"));
        }
        if !(self.settling_band > 0.0 && self.settling_band < 1.0) {
            return Err(Error::param("settling_band", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            rise_low: 0.1,
            rise_high: 0.9,
            settling_band: 0.02,
        }
    }
}

/// Rise (10-90 %), settling (2 % band) and overshoot of a step response.
pub fn step_metrics(series: &[f64], dt: f64, step_magnitude: f64) -> Result<StepMetrics> {
    step_metrics_with(series, dt, step_magnitude, &MetricOptions::default())
}

pub fn step_metrics_with(
    series: &[f64],
    dt: f64,
    step_magnitude: f64,
    opts: &MetricOptions,
) -> Result<StepMetrics> {
    if series.is_empty() {
        return Err(Error::param("series", "must not be empty"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    if !(step_magnitude != 0.0 && step_magnitude.is_finite()) {
        return Err(Error::param("step_magnitude", "must be finite and nonzero"));
    }
    opts.validate()?;
    if series.iter().any(|y| !y.is_finite()) {
        return Err(Error::param("series", "contains non-finite samples"));
    }

    let tail_len = (series.len() / 20).max(1);
    let tail = &series[series.len() - tail_len..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| (l.min(y), h.max(y)));
    let limit = 1e-3 * step_magnitude.abs();
    if hi - lo >= limit {
        return Err(Error::NotSettled {
            variation: hi - lo,
            limit,
        });
    }

    let y0 = series[0];
    let yss = *series.last().unwrap();
    let change = yss - y0;
    if change.abs() <= 1e-12 * step_magnitude.abs().max(yss.abs()) {
        return Ok(StepMetrics {
            rise_time_10_90: 0.0,
            settling_time_2pct: 0.0,
            overshoot_pct: 0.0,
            steady_state: yss,
            max_rocof: None,
        });
    }
    let norm = |y: f64| (y - y0) / change;

    let t_lo = first_crossing(series, opts.rise_low, norm).unwrap_or(0.0);
    let t_hi = first_crossing(series, opts.rise_high, norm).unwrap_or(0.0);
    let rise = (t_hi - t_lo).max(0.0) * dt;

    let outside = |y: f64| (norm(y) - 1.0).abs() > opts.settling_band;
    let settling = match series.iter().rposition(|&y| outside(y)) {
        None => 0.0,
        Some(i) if i + 1 == series.len() => i as f64,
        Some(i) => {
            // re-entry between samples i and i+1
            let (a, b) = (norm(series[i]) - 1.0, norm(series[i + 1]) - 1.0);
            let edge = if a > 0.0 { opts.settling_band } else { -opts.settling_band };
            let frac = if (b - a).abs() > 0.0 { ((edge - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
            i as f64 + frac
        }
    } * dt;

    let peak = series.iter().map(|&y| norm(y)).fold(f64::NEG_INFINITY, f64::max);
    let overshoot = ((peak - 1.0) * 100.0).max(0.0);

    Ok(StepMetrics {
        rise_time_10_90: rise,
        settling_time_2pct: settling,
        overshoot_pct: overshoot,
        steady_state: yss,
        max_rocof: None,
    })
}

fn first_crossing(series: &[f64], level: f64, norm: impl Fn(f64) -> f64) -> Option<f64> {
    if norm(series[0]) >= level {
        return Some(0.0);
    }
    for i in 1..series.len() {
        let (a, b) = (norm(series[i - 1]), norm(series[i]));
        if b >= level {
            let frac = if b > a { (level - a) / (b - a) } else { 1.0 };
            return Some(i as f64 - 1.0 + frac);
        }
    }
    None
}

/// Largest windowed slope `|f(t + w) - f(t)| / w` of a frequency trace.
///
/// The window is rounded to a whole number of samples (at least one).
pub fn max_rocof(freq: &[f64], dt: f64, window: f64) -> f64 {
    let w = ((window / dt).round() as usize).max(1);
    if freq.len() <= w {
        return 0.0;
    }
    let span = w as f64 * dt;
    freq.windows(w + 1)
        .map(|s| (s[w] - s[0]).abs() / span)
        .fold(0.0, f64::max)
}

/// One row of a metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub mode: String,
    pub rise_time_s: f64,
    pub settling_time_s: f64,
    pub overshoot_pct: f64,
    pub max_rocof_hz_s: Option<f64>,
    pub rocof_pass: Option<bool>,
}

impl MetricsReport {
    pub fn new(strategy: &str, mode: &str, m: &StepMetrics, rocof_limit: f64) -> Self {
        Self {
            strategy: strategy.to_owned(),
            mode: mode.to_owned(),
            rise_time_s: m.rise_time_10_90,
            settling_time_s: m.settling_time_2pct,
            overshoot_pct: m.overshoot_pct,
            max_rocof_hz_s: m.max_rocof,
            rocof_pass: m.max_rocof.map(|r| r <= rocof_limit),
        }
    }
}
