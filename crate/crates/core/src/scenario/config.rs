use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::layout::{segment_blocked, GridLayout, Point2};
use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    A,
    B,
}

impl FromStr for ScenarioId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(ScenarioId::A),
            "B" | "b" => Ok(ScenarioId::B),
            other => Err(ConfigError::UnknownScenario(other.to_string())),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioId::A => "A",
            ScenarioId::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnbPlacement {
    pub position: Point2,
    pub height_m: f64,
    /// Panel boresight azimuth, radians from +x.
    pub azimuth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcrPlacement {
    pub position: Point2,
    pub height_m: f64,
    pub gnb_side_azimuth: f64,
    pub ue_side_azimuth: f64,
    pub controlling_gnb: usize,
}

/// Node and link-budget constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub gnb_tx_dbm: f64,
    pub ncr_max_output_dbm: f64,
    pub ue_tx_dbm: f64,
    pub ncr_gain_db: f64,
    pub noise_figure_db: f64,
    pub gnb_tilt_deg: f64,
    pub ncr_tilt_deg: f64,
    pub panel_element_gain_dbi: f64,
    pub array_rows: usize,
    pub array_cols: usize,
    pub ue_height_m: f64,
    pub ue_speed_mps: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            gnb_tx_dbm: 35.0,
            ncr_max_output_dbm: 33.0,
            ue_tx_dbm: 24.0,
            ncr_gain_db: 90.0,
            noise_figure_db: 9.0,
            gnb_tilt_deg: 12.0,
            ncr_tilt_deg: 12.0,
            panel_element_gain_dbi: 8.0,
            array_rows: 8,
            array_cols: 8,
            ue_height_m: 1.5,
            ue_speed_mps: 3.0 / 3.6,
        }
    }
}

/// Everything that defines the deployment: B gNBs, N NCRs, U UEs and K RBs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_id: ScenarioId,
    pub ncr_enabled: bool,
    pub layout: GridLayout,
    pub gnb_placements: Vec<GnbPlacement>,
    pub ncr_placements: Vec<NcrPlacement>,
    pub ue_count: usize,
    pub rb_count: usize,
    pub carrier_hz: f64,
    pub scs_hz: f64,
    pub slot_s: f64,
    pub symbols_per_slot: usize,
    pub subcarriers_per_rb: usize,
    pub radio: RadioParams,
    /// Sidewalk corridors excluded from UE spawning.
    pub masked_corridors: Vec<usize>,
}

impl ScenarioConfig {
    pub fn gnb_count(&self) -> usize {
        self.gnb_placements.len()
    }

    pub fn ncr_count(&self) -> usize {
        if self.ncr_enabled {
            self.ncr_placements.len()
        } else {
            0
        }
    }

    pub fn rb_bandwidth_hz(&self) -> f64 {
        self.scs_hz * self.subcarriers_per_rb as f64
    }

    pub fn carrier_bandwidth_hz(&self) -> f64 {
        self.rb_bandwidth_hz() * self.rb_count as f64
    }

    pub fn res_per_symbol(&self) -> usize {
        self.rb_count * self.subcarriers_per_rb
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::units::SPEED_OF_LIGHT_MPS / self.carrier_hz
    }

    /// NCRs controlled by `gnb`, by index among the active NCRs.
    pub fn ncrs_of(&self, gnb: usize) -> impl Iterator<Item = usize> + '_ {
        self.ncr_placements
            .iter()
            .take(self.ncr_count())
            .enumerate()
            .filter(move |(_, p)| p.controlling_gnb == gnb)
            .map(|(i, _)| i)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let layout = &self.layout;
        for (i, g) in self.gnb_placements.iter().enumerate() {
            check_position(layout, &format!("placement.gnb.{i}"), g.position)?;
            check_positive(&format!("placement.gnb.{i}.height"), g.height_m)?;
        }
        for (i, n) in self.ncr_placements.iter().enumerate() {
            check_position(layout, &format!("placement.ncr.{i}"), n.position)?;
            check_positive(&format!("placement.ncr.{i}.height"), n.height_m)?;
            let g = self
                .gnb_placements
                .get(n.controlling_gnb)
                .ok_or(ConfigError::UnknownGnb {
                    ncr: i,
                    gnb: n.controlling_gnb,
                })?;
            if segment_blocked(
                g.position.with_height(g.height_m),
                n.position.with_height(n.height_m),
                layout,
            ) {
                return Err(ConfigError::NoBackhaulLos {
                    ncr: i,
                    gnb: n.controlling_gnb,
                });
            }
        }
        if self.rb_count == 0 {
            return Err(invalid("system.rb_count", "must be at least 1"));
        }
        if self.ue_count == 0 {
            return Err(invalid("system.ue_count", "must be at least 1"));
        }
        for (key, v) in [
            ("system.carrier_hz", self.carrier_hz),
            ("system.scs_hz", self.scs_hz),
            ("system.slot_s", self.slot_s),
        ] {
            check_positive(key, v)?;
        }
        let corridors = layout.corridors().len();
        if let Some(&c) = self.masked_corridors.iter().find(|&&c| c >= corridors) {
            return Err(invalid(
                "scenario.masked_corridors",
                &format!("corridor {c} does not exist"),
            ));
        }
        if self.masked_corridors.len() >= corridors {
            return Err(invalid("scenario.masked_corridors", "no sidewalk left"));
        }
        Ok(())
    }
}

fn invalid(key: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn check_positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, "must be a positive finite number"))
    }
}

fn check_position(layout: &GridLayout, key: &str, p: Point2) -> Result<(), ConfigError> {
    if !p.x.is_finite() || !p.y.is_finite() || !layout.contains(p) {
        return Err(ConfigError::OutsideGrid {
            key: key.to_string(),
            x: p.x,
            y: p.y,
        });
    }
    if layout.blocks().iter().any(|b| b.interior_contains(p)) {
        return Err(invalid(key, "position lies inside a building block"));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnbOverride {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub height: Option<f64>,
    pub azimuth_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcrOverride {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub height: Option<f64>,
    pub gnb_side_azimuth_deg: Option<f64>,
    pub ue_side_azimuth_deg: Option<f64>,
    pub controlling_gnb: Option<usize>,
}

/// Per-node placement overrides keyed by node index (as a string key, e.g. `"0"`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementOverrides {
    #[serde(default)]
    pub gnb: BTreeMap<String, GnbOverride>,
    #[serde(default)]
    pub ncr: BTreeMap<String, NcrOverride>,
}

fn azimuth_to(from: Point2, to: Point2) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

/// Default node positions.
///
/// gNBs sit on the walls of the central block at the wall midpoints and face
/// away from it. Each gNB controls one NCR on a pole in the street it
/// illuminates; the NCR's UE-side panel looks down a street the gNB cannot see.
fn default_placements(id: ScenarioId, layout: &GridLayout) -> (Vec<GnbPlacement>, Vec<NcrPlacement>) {
    let radio_gnb_h = 25.0;
    let ncr_h = 10.0;
    let blocks = layout.blocks();
    let n = layout.block_count_per_side;
    let central = blocks[(n / 2) * n + n / 2];
    let cx = 0.5 * (central.x0 + central.x1);
    let cy = 0.5 * (central.y0 + central.y1);
    let west = GnbPlacement {
        position: Point2::new(central.x0, cy),
        height_m: radio_gnb_h,
        azimuth: PI,
    };
    let east = GnbPlacement {
        position: Point2::new(central.x1, cy),
        height_m: radio_gnb_h,
        azimuth: 0.0,
    };
    let north = GnbPlacement {
        position: Point2::new(cx, central.y1),
        height_m: radio_gnb_h,
        azimuth: FRAC_PI_2,
    };
    let south = GnbPlacement {
        position: Point2::new(cx, central.y0),
        height_m: radio_gnb_h,
        azimuth: -FRAC_PI_2,
    };
    // Street center lines adjacent to the central block.
    let lo = layout.origin.x + layout.street_center(n / 2 - 1);
    let hi = layout.origin.x + layout.street_center(n / 2);
    let e = layout.extent();
    let edge = 0.5 * layout.sidewalk_width_m;

    let ncr = |pos: Point2, gnb: usize, g: &GnbPlacement, ue_az: f64| NcrPlacement {
        position: pos,
        height_m: ncr_h,
        gnb_side_azimuth: azimuth_to(pos, g.position),
        ue_side_azimuth: ue_az,
        controlling_gnb: gnb,
    };

    match id {
        ScenarioId::A => {
            let gnbs = vec![west, east];
            let ncrs = vec![
                ncr(Point2::new(lo, hi), 0, &west, 0.0),
                ncr(Point2::new(hi, lo), 1, &east, PI),
            ];
            (gnbs, ncrs)
        }
        ScenarioId::B => {
            let gnbs = vec![west, east, north, south];
            let o = layout.origin;
            let ncrs = vec![
                ncr(Point2::new(lo, o.y + e - edge), 0, &west, 0.0),
                ncr(Point2::new(hi, o.y + edge), 1, &east, PI),
                ncr(Point2::new(o.x + e - edge, hi), 2, &north, -FRAC_PI_2),
                ncr(Point2::new(o.x + edge, lo), 3, &south, FRAC_PI_2),
            ];
            (gnbs, ncrs)
        }
    }
}

fn parse_index(prefix: &str, key: &str, len: usize) -> Result<usize, ConfigError> {
    let full = format!("{prefix}.{key}");
    let idx: usize = key
        .parse()
        .map_err(|_| invalid(&full, "index must be a non-negative integer"))?;
    if idx >= len {
        return Err(invalid(&full, &format!("only {len} nodes exist")));
    }
    Ok(idx)
}

/// Builds the default deployment for a scenario, applies overrides key by
/// key and validates the result.
pub fn build_scenario(
    id: ScenarioId,
    ncr_enabled: bool,
    overrides: Option<&PlacementOverrides>,
) -> Result<ScenarioConfig, ConfigError> {
    let layout = GridLayout::default();
    let radio = RadioParams::default();
    let (mut gnbs, mut ncrs) = default_placements(id, &layout);

    if let Some(ov) = overrides {
        for (key, o) in &ov.gnb {
            let i = parse_index("placement.gnb", key, gnbs.len())?;
            let g = &mut gnbs[i];
            if let Some(x) = o.x {
                g.position.x = x;
            }
            if let Some(y) = o.y {
                g.position.y = y;
            }
            if let Some(h) = o.height {
                g.height_m = h;
            }
            if let Some(a) = o.azimuth_deg {
                g.azimuth = a.to_radians();
            }
        }
        for (key, o) in &ov.ncr {
            let i = parse_index("placement.ncr", key, ncrs.len())?;
            let n = &mut ncrs[i];
            if let Some(x) = o.x {
                n.position.x = x;
            }
            if let Some(y) = o.y {
                n.position.y = y;
            }
            if let Some(h) = o.height {
                n.height_m = h;
            }
            if let Some(g) = o.controlling_gnb {
                n.controlling_gnb = g;
            }
            if let Some(a) = o.ue_side_azimuth_deg {
                n.ue_side_azimuth = a.to_radians();
            }
            match o.gnb_side_azimuth_deg {
                Some(a) => n.gnb_side_azimuth = a.to_radians(),
                None => {
                    if let Some(g) = gnbs.get(n.controlling_gnb) {
                        n.gnb_side_azimuth = azimuth_to(n.position, g.position);
                    }
                }
            }
        }
    }

    let cfg = ScenarioConfig {
        scenario_id: id,
        ncr_enabled,
        layout,
        gnb_placements: gnbs,
        ncr_placements: ncrs,
        ue_count: 72,
        rb_count: 66,
        carrier_hz: 28e9,
        scs_hz: 60e3,
        slot_s: 0.25e-3,
        symbols_per_slot: 14,
        subcarriers_per_rb: 12,
        radio,
        masked_corridors: Vec::new(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_a_counts() {
        let c = build_scenario(ScenarioId::A, true, None).unwrap();
        assert_eq!(c.gnb_count(), 2);
        assert_eq!(c.ncr_count(), 2);
        assert_eq!(c.ue_count, 72);
        assert_eq!(c.rb_count, 66);
    }

    #[test]
    fn macro_only_keeps_gnbs() {
        let with = build_scenario(ScenarioId::A, true, None).unwrap();
        let without = build_scenario(ScenarioId::A, false, None).unwrap();
        assert_eq!(with.gnb_placements, without.gnb_placements);
        assert_eq!(without.ncr_count(), 0);
    }

    #[test]
    fn scenario_b_counts() {
        let c = build_scenario(ScenarioId::B, true, None).unwrap();
        assert_eq!(c.gnb_count(), 4);
        assert_eq!(c.ncr_count(), 4);
    }

    #[test]
    fn defaults_have_backhaul_los() {
        for id in [ScenarioId::A, ScenarioId::B] {
            let c = build_scenario(id, true, None).unwrap();
            for n in &c.ncr_placements {
                let g = &c.gnb_placements[n.controlling_gnb];
                assert!(!segment_blocked(
                    g.position.with_height(g.height_m),
                    n.position.with_height(n.height_m),
                    &c.layout
                ));
            }
        }
    }

    #[test]
    fn ncr_behind_building_rejected() {
        let mut ov = PlacementOverrides::default();
        // Far side of the west block from gNB 0.
        ov.ncr.insert(
            "0".into(),
            NcrOverride {
                x: Some(1.5),
                y: Some(203.0),
                ..Default::default()
            },
        );
        let err = build_scenario(ScenarioId::A, true, Some(&ov)).unwrap_err();
        assert_eq!(err, ConfigError::NoBackhaulLos { ncr: 0, gnb: 0 });
    }

    #[test]
    fn outside_grid_rejected_with_key() {
        let mut ov = PlacementOverrides::default();
        ov.gnb.insert(
            "1".into(),
            GnbOverride {
                x: Some(-50.0),
                ..Default::default()
            },
        );
        match build_scenario(ScenarioId::A, false, Some(&ov)).unwrap_err() {
            ConfigError::OutsideGrid { key, .. } => assert_eq!(key, "placement.gnb.1"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn override_replaces_only_given_keys() {
        let base = build_scenario(ScenarioId::B, true, None).unwrap();
        let mut ov = PlacementOverrides::default();
        ov.gnb.insert(
            "2".into(),
            GnbOverride {
                height: Some(30.0),
                ..Default::default()
            },
        );
        let c = build_scenario(ScenarioId::B, true, Some(&ov)).unwrap();
        assert_eq!(c.gnb_placements[2].height_m, 30.0);
        assert_eq!(c.gnb_placements[2].position, base.gnb_placements[2].position);
        assert_eq!(c.gnb_placements[0], base.gnb_placements[0]);
    }

    #[test]
    fn bad_index_rejected() {
        let mut ov = PlacementOverrides::default();
        ov.ncr.insert("7".into(), NcrOverride::default());
        assert!(matches!(
            build_scenario(ScenarioId::A, true, Some(&ov)),
            Err(ConfigError::InvalidValue { .. })
        ));
    }
}
