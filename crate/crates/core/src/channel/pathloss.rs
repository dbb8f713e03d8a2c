use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    UMa,
    UMi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Gnb,
    Ncr,
    Ue,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Gnb => "gnb",
            NodeKind::Ncr => "ncr",
            NodeKind::Ue => "ue",
        }
    }
}

/// Propagation profile of a link. gNB links are urban macro, NCR–UE links urban
/// micro; the reverse direction uses the same profile.
pub fn assign_profile(tx: NodeKind, rx: NodeKind) -> Result<Profile, SimError> {
    use NodeKind::*;
    match (tx, rx) {
        (Gnb, Ncr) | (Ncr, Gnb) | (Gnb, Ue) | (Ue, Gnb) => Ok(Profile::UMa),
        (Ncr, Ue) | (Ue, Ncr) => Ok(Profile::UMi),
        (a, b) => Err(SimError::NoSuchLink {
            tx_kind: a.as_str(),
            rx_kind: b.as_str(),
        }),
    }
}

impl Profile {
    /// Log-normal shadowing standard deviation.
    pub fn shadowing_sigma_db(self, los: bool) -> f64 {
        match (self, los) {
            (Profile::UMa, true) => 4.0,
            (Profile::UMa, false) => 6.0,
            (Profile::UMi, true) => 4.0,
            (Profile::UMi, false) => 7.8,
        }
    }

    pub fn correlation_distance_m(self) -> f64 {
        match self {
            Profile::UMa => 37.0,
            Profile::UMi => 13.0,
        }
    }
}

pub const MIN_DISTANCE_M: f64 = 1.0;
pub const MAX_DISTANCE_M: f64 = 5000.0;

/// Distance-dependent path loss in dB (no breakpoint refinement).
pub fn pathloss_db<T: Scalar>(profile: Profile, los: bool, d3d_m: T, fc_ghz: T, ue_height_m: T) -> T {
    let mut d = d3d_m;
    if !(d >= T::lit(MIN_DISTANCE_M)) {
        log::warn!("path loss distance {d} m below 1 m, clamped");
        d = T::lit(MIN_DISTANCE_M);
    }
    if d > T::lit(MAX_DISTANCE_M) {
        d = T::lit(MAX_DISTANCE_M);
    }
    let ld = d.log10();
    let lf = fc_ghz.log10();
    let c = T::lit;
    match profile {
        Profile::UMa => {
            let los_pl = c(28.0) + c(22.0) * ld + c(20.0) * lf;
            if los {
                los_pl
            } else {
                let nlos = c(13.54) + c(39.08) * ld + c(20.0) * lf - c(0.6) * (ue_height_m - c(1.5));
                los_pl.max(nlos)
            }
        }
        Profile::UMi => {
            let los_pl = c(32.4) + c(21.0) * ld + c(20.0) * lf;
            if los {
                los_pl
            } else {
                let nlos = c(22.4) + c(35.3) * ld + c(21.3) * lf - c(0.3) * (ue_height_m - c(1.5));
                los_pl.max(nlos)
            }
        }
    }
}

/// Free-space loss, used as a sanity lower bound.
pub fn free_space_db(d_m: f64, fc_ghz: f64) -> f64 {
    32.45 + 20.0 * d_m.max(MIN_DISTANCE_M).log10() + 20.0 * fc_ghz.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn profiles() {
        assert_eq!(assign_profile(NodeKind::Gnb, NodeKind::Ue).unwrap(), Profile::UMa);
        assert_eq!(assign_profile(NodeKind::Gnb, NodeKind::Ncr).unwrap(), Profile::UMa);
        assert_eq!(assign_profile(NodeKind::Ncr, NodeKind::Ue).unwrap(), Profile::UMi);
        assert_eq!(assign_profile(NodeKind::Ue, NodeKind::Ncr).unwrap(), Profile::UMi);
        assert!(assign_profile(NodeKind::Gnb, NodeKind::Gnb).is_err());
        assert!(assign_profile(NodeKind::Ue, NodeKind::Ue).is_err());
    }

    #[test]
    fn uma_los_values() {
        let fc = 28.0_f64;
        assert_abs_diff_eq!(
            pathloss_db(Profile::UMa, true, 100.0, fc, 1.5),
            28.0 + 44.0 + 20.0 * 28f64.log10(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(pathloss_db(Profile::UMa, true, 100.0, fc, 1.5), 100.94, epsilon = 0.005);
        assert_abs_diff_eq!(pathloss_db(Profile::UMa, true, 1.0, fc, 1.5), 56.94, epsilon = 0.005);
        // Below 1 m clamps.
        assert_eq!(
            pathloss_db(Profile::UMa, true, 0.2, fc, 1.5),
            pathloss_db(Profile::UMa, true, 1.0, fc, 1.5)
        );
    }

    #[test]
    fn nlos_never_below_los() {
        for d in [10.0, 50.0, 120.0, 400.0] {
            for p in [Profile::UMa, Profile::UMi] {
                assert!(pathloss_db(p, false, d, 28.0, 1.5) >= pathloss_db(p, true, d, 28.0, 1.5));
            }
        }
    }

    #[test]
    fn monotone_in_distance() {
        for p in [Profile::UMa, Profile::UMi] {
            for los in [true, false] {
                let mut prev = f64::NEG_INFINITY;
                let mut d = 10.0;
                while d <= 500.0 {
                    let v = pathloss_db(p, los, d, 28.0, 1.5);
                    assert!(v > prev);
                    prev = v;
                    d += 0.5;
                }
            }
        }
    }

    #[test]
    fn not_below_free_space() {
        // UMi stays within 1 dB of free space everywhere. The UMa LOS line
        // (28 + 22·log d) only clears it beyond 10^1.725 ≈ 53.1 m at 28 GHz.
        let mut d = 1.0;
        while d <= 5000.0 {
            for los in [true, false] {
                assert!(pathloss_db(Profile::UMi, los, d, 28.0, 1.5) >= free_space_db(d, 28.0) - 1.0);
                if d >= 53.1 {
                    assert!(pathloss_db(Profile::UMa, los, d, 28.0, 1.5) >= free_space_db(d, 28.0) - 1.0, "{d}");
                }
            }
            d *= 1.05;
        }
        assert!(pathloss_db(Profile::UMa, true, 20.0, 28.0, 1.5) < free_space_db(20.0, 28.0) - 1.0);
    }

    #[test]
    fn generic_over_f32() {
        let v = pathloss_db(Profile::UMi, false, 50.0_f32, 28.0, 1.5);
        assert!((v as f64 - pathloss_db(Profile::UMi, false, 50.0_f64, 28.0, 1.5)).abs() < 1e-3);
    }
}
