//! Network-controlled repeater: SCI-driven ON/OFF schedule, static backhaul
//! beam, and the amplify-and-forward power stage.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::mac::{tdd_direction, Direction};
use crate::units::THERMAL_NOISE_DBM_PER_HZ;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SciKind {
    Periodic,
    SemiPersistent,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SciEntry {
    pub offset: u64,
    pub duration: u64,
    pub beam: usize,
}

/// Side control information sent by the controlling gNB.
///
/// Periodic and semi-persistent entries repeat every `periodicity_slots`
/// starting at `start_slot`; dynamic entries apply once, relative to
/// `start_slot`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideControlInfo {
    pub kind: SciKind,
    pub periodicity_slots: u64,
    pub start_slot: u64,
    pub entries: Vec<SciEntry>,
}

impl SideControlInfo {
    pub fn empty() -> Self {
        Self {
            kind: SciKind::Dynamic,
            periodicity_slots: 1,
            start_slot: 0,
            entries: Vec::new(),
        }
    }

    /// A one-slot dynamic indication.
    pub fn dynamic_once(slot: u64, beam: usize) -> Self {
        Self {
            kind: SciKind::Dynamic,
            periodicity_slots: 1,
            start_slot: slot,
            entries: vec![SciEntry {
                offset: 0,
                duration: 1,
                beam,
            }],
        }
    }

    pub fn validate(&self, beam_count: usize) -> Result<(), ConfigError> {
        let repeating = self.kind != SciKind::Dynamic;
        if repeating && self.periodicity_slots == 0 {
            return Err(ConfigError::InvalidValue {
                key: "sci.periodicity_slots".into(),
                reason: "must be at least 1".into(),
            });
        }
        let mut spans: Vec<(u64, u64)> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            if e.duration == 0 {
                return Err(ConfigError::EmptySciEntry);
            }
            if e.beam >= beam_count {
                return Err(ConfigError::InvalidValue {
                    key: "sci.beam".into(),
                    reason: format!("beam {} outside codebook of {beam_count}", e.beam),
                });
            }
            if repeating && e.offset + e.duration > self.periodicity_slots {
                return Err(ConfigError::InvalidValue {
                    key: "sci.offset".into(),
                    reason: "entry extends past its periodicity".into(),
                });
            }
            spans.push((e.offset, e.offset + e.duration));
        }
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(ConfigError::OverlappingSci {
                    slot: self.start_slot + w[1].0,
                });
            }
        }
        Ok(())
    }

    /// Beam indicated for `slot`, if any entry covers it.
    pub fn beam_at(&self, slot: u64) -> Option<usize> {
        if slot < self.start_slot {
            return None;
        }
        let rel = slot - self.start_slot;
        let pos = match self.kind {
            SciKind::Dynamic => rel,
            SciKind::Periodic | SciKind::SemiPersistent => rel % self.periodicity_slots,
        };
        self.entries
            .iter()
            .find(|e| pos >= e.offset && pos < e.offset + e.duration)
            .map(|e| e.beam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Panel {
    GnbSide,
    UeSide,
}

/// What the NCR-MT tells the forwarding unit for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamIndication {
    pub access_panel: Panel,
    pub access_beam: usize,
    pub backhaul_beam: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcrState<T> {
    pub id: usize,
    pub amp_gain_db: T,
    pub max_output_dbm: T,
    pub backhaul_beam: usize,
    pub beam_count: usize,
    sci: SideControlInfo,
}

impl<T: Scalar> NcrState<T> {
    /// New repeater, OFF in every slot until an SCI arrives.
    pub fn new(id: usize, amp_gain_db: T, max_output_dbm: T, beam_count: usize) -> Self {
        Self {
            id,
            amp_gain_db,
            max_output_dbm,
            backhaul_beam: 0,
            beam_count,
            sci: SideControlInfo::empty(),
        }
    }

    pub fn sci(&self) -> &SideControlInfo {
        &self.sci
    }

    /// Replace the schedule. On rejection the current state is left as is.
    pub fn set_sci(&mut self, sci: SideControlInfo) -> Result<(), ConfigError> {
        sci.validate(self.beam_count)?;
        self.sci = sci;
        Ok(())
    }

    pub fn access_beam(&self, slot: u64) -> Option<usize> {
        self.sci.beam_at(slot)
    }

    pub fn is_on(&self, slot: u64) -> bool {
        self.access_beam(slot).is_some()
    }

    pub fn tdd_direction(&self, slot: u64) -> Direction {
        tdd_direction(slot)
    }

    fn require_on(&self, slot: u64) -> Result<(), SimError> {
        if self.is_on(slot) {
            Ok(())
        } else {
            Err(SimError::NcrOff { ncr: self.id, slot })
        }
    }

    pub fn forward_gain_db(&self, slot: u64, input_power_dbm: T) -> Result<(T, T), SimError> {
        self.require_on(slot)?;
        Ok(power_stage(self.amp_gain_db, self.max_output_dbm, input_power_dbm))
    }

    pub fn amplified_noise_dbm(&self, slot: u64, effective_gain_db: T, noise_figure_db: T, bandwidth_hz: T) -> Result<T, SimError> {
        self.require_on(slot)?;
        Ok(amplified_noise(effective_gain_db, noise_figure_db, bandwidth_hz))
    }
}

/// `apply_sci` in functional form: the updated state, or the rejection.
pub fn apply_sci<T: Scalar>(state: &NcrState<T>, sci: SideControlInfo) -> Result<NcrState<T>, ConfigError> {
    let mut next = state.clone();
    next.set_sci(sci)?;
    Ok(next)
}

pub fn mt_beam_indication<T: Scalar>(state: &NcrState<T>, slot: u64) -> Option<BeamIndication> {
    state.access_beam(slot).map(|beam| BeamIndication {
        access_panel: Panel::UeSide,
        access_beam: beam,
        backhaul_beam: state.backhaul_beam,
        direction: tdd_direction(slot),
    })
}

/// Fixed-gain amplifier with an output cap: `gain = min(G, P_max − input)`.
/// Returns `(effective gain, output power)`, both in dB(m).
pub fn power_stage<T: Scalar>(amp_gain_db: T, max_output_dbm: T, input_dbm: T) -> (T, T) {
    let gain = (max_output_dbm - input_dbm).min(amp_gain_db);
    let out = (input_dbm + gain).min(max_output_dbm);
    (gain, out)
}

/// Receiver noise re-emitted at the NCR output.
pub fn amplified_noise<T: Scalar>(effective_gain_db: T, noise_figure_db: T, bandwidth_hz: T) -> T {
    T::lit(THERMAL_NOISE_DBM_PER_HZ) + T::lit(10.0) * bandwidth_hz.log10() + noise_figure_db + effective_gain_db
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn state() -> NcrState<f64> {
        NcrState::new(0, 90.0, 33.0, 64)
    }

    #[test]
    fn default_is_off() {
        let s = state();
        assert!((0..1000).all(|t| !s.is_on(t)));
        assert!(s.forward_gain_db(3, -70.0).is_err());
        assert!(s.amplified_noise_dbm(3, 90.0, 9.0, 720e3).is_err());
        assert_eq!(mt_beam_indication(&s, 5), None);
    }

    #[test]
    fn periodic_full_coverage() {
        let sci = SideControlInfo {
            kind: SciKind::Periodic,
            periodicity_slots: 80,
            start_slot: 0,
            entries: vec![SciEntry {
                offset: 0,
                duration: 80,
                beam: 7,
            }],
        };
        let s = apply_sci(&state(), sci).unwrap();
        for t in 0..400 {
            assert_eq!(s.access_beam(t), Some(7));
        }
        let ind = mt_beam_indication(&s, 10).unwrap();
        assert_eq!(ind.direction, Direction::Dl);
        assert_eq!(ind.access_panel, Panel::UeSide);
        assert_eq!(mt_beam_indication(&s, 11).unwrap().direction, Direction::Ul);
        assert_eq!(mt_beam_indication(&s, 11).unwrap().access_beam, 7);
    }

    #[test]
    fn periodic_schedule_repeats() {
        let sci = SideControlInfo {
            kind: SciKind::Periodic,
            periodicity_slots: 20,
            start_slot: 0,
            entries: vec![
                SciEntry {
                    offset: 2,
                    duration: 3,
                    beam: 1,
                },
                SciEntry {
                    offset: 10,
                    duration: 5,
                    beam: 4,
                },
            ],
        };
        let s = apply_sci(&state(), sci).unwrap();
        for t in 0..200 {
            assert_eq!(s.access_beam(t), s.access_beam(t + 20));
        }
        assert_eq!(s.access_beam(1), None);
        assert_eq!(s.access_beam(2), Some(1));
        assert_eq!(s.access_beam(14), Some(4));
        assert_eq!(s.access_beam(15), None);
    }

    #[test]
    fn dynamic_applies_once() {
        let s = apply_sci(&state(), SideControlInfo::dynamic_once(33, 12)).unwrap();
        assert_eq!(s.access_beam(32), None);
        assert_eq!(s.access_beam(33), Some(12));
        assert_eq!(s.access_beam(34), None);
        assert_eq!(s.access_beam(113), None);
    }

    #[test]
    fn overlap_rejected_state_unchanged() {
        let mut s = apply_sci(&state(), SideControlInfo::dynamic_once(5, 3)).unwrap();
        let sci = SideControlInfo {
            kind: SciKind::Dynamic,
            periodicity_slots: 1,
            start_slot: 0,
            entries: vec![
                SciEntry {
                    offset: 10,
                    duration: 3,
                    beam: 1,
                },
                SciEntry {
                    offset: 12,
                    duration: 2,
                    beam: 2,
                },
            ],
        };
        assert_eq!(apply_sci(&s, sci.clone()), Err(ConfigError::OverlappingSci { slot: 12 }));
        assert!(s.set_sci(sci).is_err());
        assert_eq!(s.access_beam(5), Some(3));
        let zero = SideControlInfo {
            entries: vec![SciEntry {
                offset: 0,
                duration: 0,
                beam: 0,
            }],
            ..SideControlInfo::empty()
        };
        assert!(s.set_sci(zero).is_err());
        assert!(s.set_sci(SideControlInfo::dynamic_once(0, 64)).is_err());
    }

    #[test]
    fn power_stage_examples() {
        assert_eq!(power_stage(90.0, 33.0, -70.0), (90.0, 20.0));
        assert_eq!(power_stage(90.0, 33.0, -50.0), (83.0, 33.0));
        assert_eq!(power_stage(90.0, 33.0, -57.0), (90.0, 33.0));
        let s = apply_sci(&state(), SideControlInfo::dynamic_once(0, 0)).unwrap();
        assert_eq!(s.forward_gain_db(0, -70.0).unwrap(), (90.0, 20.0));
    }

    #[test]
    fn power_cap_sweep() {
        let mut x = -120.0;
        while x <= 10.0 {
            let (g, out) = power_stage(90.0_f64, 33.0, x);
            assert!(out <= 33.0);
            assert!(g <= 90.0);
            assert_eq!(g, (33.0_f64 - x).min(90.0));
            x += 0.01;
        }
        let (g, out) = power_stage(90.0_f32, 33.0, -50.0);
        assert_eq!((g, out), (83.0, 33.0));
    }

    #[test]
    fn amplified_noise_examples() {
        assert_abs_diff_eq!(amplified_noise(90.0, 9.0, 720e3), -16.43, epsilon = 0.005);
        assert_abs_diff_eq!(amplified_noise(83.0, 9.0, 720e3), -23.43, epsilon = 0.005);
        assert_abs_diff_eq!(amplified_noise(0.0, 0.0, 1.0), -174.0, epsilon = 1e-12);
    }
}
