//! Small-signal loop assembly, the three-pole design form, and step-response
//! and ROCOF metrics.

mod design;
mod loops;
mod metrics;

pub use design::{build_gc_design_model, design_target, is_overshoot_free, DesignParams};
pub use loops::{build_gc_closed_loop, build_is_closed_loop, LoopFunctions};
pub use metrics::{
    max_rocof, step_metrics, step_metrics_with, MetricOptions, MetricsReport, StepMetrics,
    DEFAULT_ROCOF_LIMIT, DEFAULT_ROCOF_WINDOW,
};
