//! TDD pattern, CBR traffic, beam sweeps, association and RB scheduling.

pub mod association;
pub mod scheduler;
pub mod sweep;
pub mod tdd;
pub mod traffic;

pub use association::{associate, Association, Candidate, ServingPath, OUTAGE_RSRP_DBM};
pub use scheduler::{is_orthogonal, split_rbs, RbAllocation, RoundRobin};
pub use sweep::{beam_gains, is_sweep_slot, max_min_beam, run_beam_sweep, LinkKind, SweepPeriods, SweepResult};
pub use tdd::{tdd_direction, Direction};
pub use traffic::{TrafficQueue, INTER_ARRIVAL_SLOTS, PACKET_BITS};
