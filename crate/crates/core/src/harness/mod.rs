//! Experiment driver: references, closed-loop runs, metrics, comparisons
//! and file outputs.

mod config;
mod output;
mod phase;
mod reaching;
mod reference;
mod tracking;

pub use config::{
    DatasetSource, DisturbanceSpec, Experiment, IdentifySection, LabConfig, MetricsSection, OutputSection, PlantSource,
    SimSection, SimulateSection,
};
pub use output::{
    emit_comparison, emit_outputs, emit_phase, format_comparison, format_metrics, plot_script, write_trace_csv,
    TRACE_HEADER,
};
pub use phase::{descent_check, DescentReport, PhasePlane};
pub use reaching::{lipschitz_estimate, model_error_bound, reaching_margins, ReachingReport};
pub use reference::{make_reference, ReferenceSample, ReferenceSpec};
pub use tracking::{
    cases_for, compare_controllers, compare_controllers_seq, run_tracking, run_tracking_with, Comparison, TrackingCase,
    TrackingMetrics, TrackingRun, TrackingTrace,
};
