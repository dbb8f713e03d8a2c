//! Grid geometry, node placement, pedestrian mobility and geometric LOS.

pub mod config;
pub mod layout;
pub mod mobility;

pub use config::{
    build_scenario, GnbOverride, GnbPlacement, NcrOverride, NcrPlacement, PlacementOverrides,
    RadioParams, ScenarioConfig, ScenarioId,
};
pub use layout::{segment_blocked, Corridor, GridLayout, Point2, Point3, Rect, RegionKind, Side};
pub use mobility::{spawn_ues, step_ue, turn_probabilities, Heading, UeMobilityState};
