//! Link budgets: RSRP, the six-term SINR decomposition and link adaptation.

pub mod mcs;
pub mod rsrp;
pub mod sinr;

pub use mcs::{select_mcs, tb_bits, McsTable, SPECTRAL_EFFICIENCY};
pub use rsrp::{full_load_ncr_gain_db, per_re_power_dbm, rsrp_direct_dbm, rsrp_forwarded_dbm};
pub use sinr::{
    af_end_to_end, GainTable, LinkType, NcrSlot, PowerBudget, SinrComponents, SinrSample, SlotState, Transmission,
};
