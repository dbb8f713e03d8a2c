use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::units::lin_to_db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Backhaul,
    Access,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPeriods {
    pub access_period_slots: u64,
    /// `None`: the backhaul is swept once at slot 0 and never again.
    pub backhaul_period_slots: Option<u64>,
}

impl Default for SweepPeriods {
    fn default() -> Self {
        Self {
            access_period_slots: 80,
            backhaul_period_slots: None,
        }
    }
}

pub fn is_sweep_slot(kind: LinkKind, slot: u64, periods: &SweepPeriods) -> bool {
    match kind {
        LinkKind::Backhaul => match periods.backhaul_period_slots {
            Some(p) => slot % p == 0,
            None => slot == 0,
        },
        LinkKind::Access | LinkKind::Direct => slot % periods.access_period_slots == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    /// Beam at the transmitting panel (gNB, or the NCR's UE side).
    pub tx_beam: usize,
    /// Beam at the receiving panel when it has a codebook (NCR gNB side).
    pub rx_beam: Option<usize>,
    pub gain_lin: f64,
}

impl SweepResult {
    pub fn gain_db(&self) -> f64 {
        lin_to_db(self.gain_lin)
    }
}

/// Exhaustive codebook search maximising the wideband beamformed gain. UEs
/// have a single antenna, so access and direct sweeps search only the
/// transmitter; the backhaul searches both panels.
pub fn run_beam_sweep(kind: LinkKind, link: &LinkState, time_s: f64) -> SweepResult {
    let c = link.coefficients(time_s);
    match kind {
        LinkKind::Backhaul => {
            let (a, b, g) = link.best_beam_pair(&c);
            SweepResult {
                tx_beam: a,
                rx_beam: Some(b),
                gain_lin: g,
            }
        }
        LinkKind::Access | LinkKind::Direct => {
            let (a, g) = link.best_beam_a(&c, 0);
            SweepResult {
                tx_beam: a,
                rx_beam: None,
                gain_lin: g,
            }
        }
    }
}

/// Wideband gain of every transmit beam towards a single-antenna end.
pub fn beam_gains(link: &LinkState, time_s: f64) -> Vec<f64> {
    let c = link.coefficients(time_s);
    (0..link.beams_a())
        .map(|b| link.wideband_gain(&link.beam_vector(&c, b, 0)))
        .collect()
}

/// Beam serving every UE in `gains` best in the max-min sense: each row is
/// one UE's per-beam gain. Ties go to the lowest index.
pub fn max_min_beam(gains: &[&[f64]]) -> Option<usize> {
    let beams = gains.first()?.len();
    let mut best = (0, f64::NEG_INFINITY);
    for b in 0..beams {
        let worst = gains.iter().map(|g| g[b]).fold(f64::INFINITY, f64::min);
        if worst > best.1 {
            best = (b, worst);
        }
    }
    Some(best.0)
}
