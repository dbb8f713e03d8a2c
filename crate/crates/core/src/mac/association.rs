use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// RSRP below which a UE is considered out of coverage.
pub const OUTAGE_RSRP_DBM: f64 = -140.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServingPath {
    Direct,
    ViaNcr(usize),
}

impl ServingPath {
    pub fn ncr(self) -> Option<usize> {
        match self {
            ServingPath::Direct => None,
            ServingPath::ViaNcr(n) => Some(n),
        }
    }

    pub fn is_direct(self) -> bool {
        self == ServingPath::Direct
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub gnb: usize,
    pub path: ServingPath,
    pub rsrp_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub ue: usize,
    pub serving_gnb: usize,
    pub path: ServingPath,
    pub valid_from_slot: u64,
    pub rsrp_dbm: f64,
    pub outage: bool,
}

/// Strongest candidate wins; equal RSRP prefers direct service, then the
/// lower gNB index, then the lower NCR index.
fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.rsrp_dbm.partial_cmp(&b.rsrp_dbm) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => {
            let key = |c: &Candidate| (!c.path.is_direct(), c.gnb, c.path.ncr().unwrap_or(0));
            key(a) < key(b)
        }
    }
}

pub fn associate(ue: usize, candidates: &[Candidate], slot: u64, outage_rsrp_dbm: f64) -> Association {
    let mut best: Option<&Candidate> = None;
    for c in candidates {
        if !c.rsrp_dbm.is_finite() && c.rsrp_dbm != f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|b| better(c, b)) {
            best = Some(c);
        }
    }
    match best {
        Some(c) => Association {
            ue,
            serving_gnb: c.gnb,
            path: c.path,
            valid_from_slot: slot,
            rsrp_dbm: c.rsrp_dbm,
            outage: c.rsrp_dbm < outage_rsrp_dbm,
        },
        None => Association {
            ue,
            serving_gnb: 0,
            path: ServingPath::Direct,
            valid_from_slot: slot,
            rsrp_dbm: f64::NEG_INFINITY,
            outage: true,
        },
    }
}
