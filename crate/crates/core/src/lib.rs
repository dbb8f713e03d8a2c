//! System-level simulator for 5G mmWave networks assisted by network-controlled
//! repeaters (NCRs).
//!
//! The simulator models a Manhattan-style urban grid with macro gNBs, NCRs that
//! amplify and forward under gNB control, and pedestrian UEs. It runs a
//! slot-driven TDD loop and reports SINR, MCS usage and throughput for direct
//! and NCR-forwarded links in both link directions.
//!
//! Module map:
//!
//! - [`scenario`]: grid layout, node placement, UE mobility and geometric LOS.
//! - [`antenna`]: URA element pattern, array response, DFT codebooks.
//! - [`channel`]: path loss, correlated shadowing, geometric multipath.
//! - [`ncr`]: NCR state machine, SCI schedules and the amplify-and-forward stage.
//! - [`phy`]: RSRP, the DL/UL SINR decomposition and link adaptation.
//! - [`mac`]: TDD pattern, traffic, beam sweeps, association, RB scheduling.
//! - [`engine`]: configuration, the slot loop, metrics and result emission.
//!
//! The numeric kernels (antenna, path loss, power stage, AF algebra, quantiles)
//! are generic over [`Scalar`]; the simulation state itself runs on [`Real`].

pub mod antenna;
pub mod channel;
pub mod engine;
pub mod error;
pub mod mac;
pub mod ncr;
pub mod phy;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod units;

pub use error::{ConfigError, SimError};
pub use scalar::Scalar;

/// Scalar used by the simulation state.
pub type Real = f64;
/// Complex baseband sample.
pub type Cplx = num_complex::Complex<Real>;

pub type ArrayConfig = antenna::ArrayConfig<Real>;
pub type BeamCodebook = antenna::BeamCodebook<Real>;
pub type NcrState = ncr::NcrState<Real>;
pub type McsTable = phy::mcs::McsTable<Real>;

/// Single-precision variants, handy for memory-bound sweeps.
pub type ArrayConfigF32 = antenna::ArrayConfig<f32>;
pub type BeamCodebookF32 = antenna::BeamCodebook<f32>;
