use std::path::PathBuf;

use thiserror::Error;

/// Problems detected while building or validating a configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown scenario id `{0}` (expected A or B)")]
    UnknownScenario(String),

    #[error("{key}: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("{key}: position ({x:.2}, {y:.2}) lies outside the grid extent")]
    OutsideGrid { key: String, x: f64, y: f64 },

    #[error("ncr {ncr} has no line of sight to its controlling gnb {gnb}")]
    NoBackhaulLos { ncr: usize, gnb: usize },

    #[error("ncr {ncr} references unknown controlling gnb {gnb}")]
    UnknownGnb { ncr: usize, gnb: usize },

    #[error("sci entries overlap at slot {slot}")]
    OverlappingSci { slot: u64 },

    #[error("sci entry has zero duration")]
    EmptySciEntry,

    #[error("config parse error: {0}")]
    Parse(String),
}

/// Runtime failures of the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ncr {ncr} is OFF in slot {slot}")]
    NcrOff { ncr: usize, slot: u64 },

    #[error("link {tx_kind} -> {rx_kind} does not exist in the model")]
    NoSuchLink {
        tx_kind: &'static str,
        rx_kind: &'static str,
    },

    #[error("empty sample set")]
    EmptySamples,

    #[error("percentile {0} outside [0, 100]")]
    InvalidPercentile(f64),

    #[error("slot {slot}: {source}")]
    AtSlot {
        slot: u64,
        #[source]
        source: Box<SimError>,
    },

    #[error("output directory {path:?} is not writable: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SimError {
    pub fn at_slot(self, slot: u64) -> Self {
        match self {
            e @ SimError::AtSlot { .. } => e,
            other => SimError::AtSlot {
                slot,
                source: Box::new(other),
            },
        }
    }

    pub fn is_config(&self) -> bool {
        match self {
            SimError::Config(_) => true,
            SimError::AtSlot { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
