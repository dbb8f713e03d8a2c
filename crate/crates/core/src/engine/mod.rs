//! Slot loop, run configuration and result files.

pub mod config;
pub mod metrics;
pub mod sim;

pub use config::{resolve, CliOverrides, FileConfig, RunConfig, ScheduleMode, SimParams, TraceFlags};
pub use metrics::{emit, per_ue_throughput, percentile, preflight, MetricsStore, RunMetadata, SampleRecord};
pub use sim::{run, worker_threads, AllocRecord, RunOutput, Simulator};

use std::path::Path;

use crate::error::SimError;

/// Writes the result files plus any enabled traces.
pub fn emit_output(out: &RunOutput, dir: &Path) -> Result<(), SimError> {
    emit(&out.metrics, dir)?;
    if let Some(csv) = out.link_trace_csv() {
        std::fs::write(dir.join("trace_links.csv"), csv)?;
    }
    if let Some(csv) = out.alloc_trace_csv() {
        std::fs::write(dir.join("trace_alloc.csv"), csv)?;
    }
    Ok(())
}
