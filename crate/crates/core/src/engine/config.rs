//! Run configuration and the flat dotted-key config file.
//!
//! The file is TOML. Nested tables and dotted keys are equivalent
//! (`[ncr]\ngain_db = 90` is `ncr.gain_db = 90`); every leaf key must be one
//! of the keys documented in the README, anything else is rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::Value;

use crate::channel::ChannelParams;
use crate::error::ConfigError;
use crate::mac::{SweepPeriods, INTER_ARRIVAL_SLOTS, OUTAGE_RSRP_DBM, PACKET_BITS};
use crate::ncr::{SciEntry, SciKind, SideControlInfo};
use crate::scenario::{build_scenario, GnbOverride, NcrOverride, PlacementOverrides, ScenarioConfig, ScenarioId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// The controlling gNB indicates a beam every slot for the UEs it
    /// scheduled through the NCR.
    Dynamic,
    /// Beams come from configured SCI only.
    Static,
    /// Every schedule stays empty; repeaters never switch on.
    Off,
}

impl std::str::FromStr for ScheduleMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dynamic" => Ok(ScheduleMode::Dynamic),
            "static" => Ok(ScheduleMode::Static),
            "off" => Ok(ScheduleMode::Off),
            other => Err(ConfigError::InvalidValue {
                key: "ncr.schedule_mode".into(),
                reason: format!("`{other}` is not one of dynamic, static, off"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TraceFlags {
    pub links: bool,
    pub alloc: bool,
}

impl std::str::FromStr for TraceFlags {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = TraceFlags::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "links" => f.links = true,
                "alloc" => f.alloc = true,
                other => {
                    return Err(ConfigError::InvalidValue {
                        key: "--trace".into(),
                        reason: format!("unknown trace `{other}` (expected links, alloc)"),
                    })
                }
            }
        }
        Ok(f)
    }
}

/// Everything besides the deployment that shapes a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimParams {
    pub sweep: SweepPeriods,
    pub packet_bits: u64,
    pub inter_arrival_slots: u64,
    pub max_ues_per_slot: usize,
    pub schedule_mode: ScheduleMode,
    pub static_sci: BTreeMap<usize, SideControlInfo>,
    /// UE displacement that triggers a large-scale channel refresh.
    pub refresh_distance_m: f64,
    pub outage_rsrp_dbm: f64,
    pub channel: ChannelParams,
    /// Check RB orthogonality every slot and keep the allocation log.
    pub debug_checks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub total_slots: u64,
    pub warmup_slots: u64,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    pub trace: TraceFlags,
    pub params: SimParams,
}

pub const DEFAULT_SLOTS: u64 = 40_000;
pub const DEFAULT_WARMUP_SLOTS: u64 = 4_000;

impl RunConfig {
    /// Default run for a scenario, seed and length; warmup is a tenth of the
    /// run, capped at the 4000-slot default.
    pub fn new(id: ScenarioId, ncr_enabled: bool, seed: u64, total_slots: u64) -> Result<Self, ConfigError> {
        let scenario = build_scenario(id, ncr_enabled, None)?;
        let params = default_params(&scenario);
        let cfg = Self {
            scenario,
            seed,
            total_slots,
            warmup_slots: (total_slots / 10).min(DEFAULT_WARMUP_SLOTS),
            output_dir: None,
            trace: TraceFlags::default(),
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate()?;
        let bad = |key: &str, reason: &str| ConfigError::InvalidValue {
            key: key.into(),
            reason: reason.into(),
        };
        if self.total_slots <= self.warmup_slots {
            return Err(bad("run.slots", "must exceed run.warmup_slots"));
        }
        let p = &self.params;
        if p.sweep.access_period_slots == 0 {
            return Err(bad("sweep.access_period_slots", "must be at least 1"));
        }
        if p.inter_arrival_slots == 0 {
            return Err(bad("traffic.inter_arrival_slots", "must be at least 1"));
        }
        if p.max_ues_per_slot == 0 {
            return Err(bad("scheduler.max_ues_per_slot", "must be at least 1"));
        }
        if !(p.refresh_distance_m > 0.0 && p.refresh_distance_m.is_finite()) {
            return Err(bad("channel.refresh_distance_m", "must be positive"));
        }
        let beams = self.scenario.radio.array_rows * self.scenario.radio.array_cols;
        for (&n, sci) in &p.static_sci {
            if n >= self.scenario.ncr_placements.len() {
                return Err(bad(&format!("sci.{n}"), "no such NCR"));
            }
            sci.validate(beams)?;
        }
        Ok(())
    }

    /// Content hash of everything that determines the results except the seed.
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            scenario: &'a ScenarioConfig,
            total_slots: u64,
            warmup_slots: u64,
            params: &'a SimParams,
        }
        let json = serde_json::to_vec(&Hashed {
            scenario: &self.scenario,
            total_slots: self.total_slots,
            warmup_slots: self.warmup_slots,
            params: &self.params,
        })
        .expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

pub fn default_params(scenario: &ScenarioConfig) -> SimParams {
    SimParams {
        sweep: SweepPeriods::default(),
        packet_bits: PACKET_BITS,
        inter_arrival_slots: INTER_ARRIVAL_SLOTS,
        max_ues_per_slot: 8,
        schedule_mode: ScheduleMode::Dynamic,
        static_sci: BTreeMap::new(),
        refresh_distance_m: 0.5,
        outage_rsrp_dbm: OUTAGE_RSRP_DBM,
        channel: ChannelParams::from_scenario(scenario),
        debug_checks: false,
    }
}

/// Parsed config file: leaf keys with their values, already checked against
/// the known key set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

const SCALAR_KEYS: &[&str] = &[
    "scenario.id",
    "scenario.ue_count",
    "scenario.masked_corridors",
    "run.seed",
    "run.slots",
    "run.warmup_slots",
    "system.carrier_hz",
    "system.rb_count",
    "system.noise_figure_db",
    "gnb.tx_power_dbm",
    "gnb.tilt_deg",
    "gnb.element_gain_dbi",
    "ue.tx_power_dbm",
    "ue.speed_kmh",
    "ue.height_m",
    "ncr.enabled",
    "ncr.gain_db",
    "ncr.max_output_dbm",
    "ncr.tilt_deg",
    "ncr.schedule_mode",
    "sweep.access_period_slots",
    "sweep.backhaul_period_slots",
    "traffic.packet_bits",
    "traffic.inter_arrival_slots",
    "scheduler.max_ues_per_slot",
    "channel.rician_k_db",
    "channel.max_delay_ns",
    "channel.refresh_distance_m",
    "association.outage_rsrp_dbm",
    "debug.checks",
];

const GNB_FIELDS: &[&str] = &["x", "y", "height", "azimuth_deg"];
const NCR_FIELDS: &[&str] = &["x", "y", "height", "gnb_side_azimuth_deg", "ue_side_azimuth_deg", "controlling_gnb"];
const SCI_FIELDS: &[&str] = &["kind", "periodicity_slots", "start_slot", "entries"];

fn known_key(key: &str) -> bool {
    if SCALAR_KEYS.contains(&key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    let indexed = |p: &str| p.parse::<usize>().is_ok();
    match parts.as_slice() {
        ["placement", "gnb", i, f] => indexed(i) && GNB_FIELDS.contains(f),
        ["placement", "ncr", i, f] => indexed(i) && NCR_FIELDS.contains(f),
        ["sci", i, f] => indexed(i) && SCI_FIELDS.contains(f),
        _ => false,
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(key, "expected a number")),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(invalid(key, "expected a non-negative integer")),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| invalid(key, "expected true or false"))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| invalid(key, "expected a string"))
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries);
        for key in entries.keys() {
            if !known_key(key) {
                return Err(invalid(key, "unknown configuration key"));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| as_f64(key, v)).transpose()
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(key).map(|v| as_u64(key, v)).transpose()
    }

    fn placement_overrides(&self) -> Result<PlacementOverrides, ConfigError> {
        let mut ov = PlacementOverrides::default();
        for (key, v) in &self.entries {
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["placement", "gnb", i, f] => {
                    let o: &mut GnbOverride = ov.gnb.entry(i.to_string()).or_default();
                    let x = as_f64(key, v)?;
                    match *f {
                        "x" => o.x = Some(x),
                        "y" => o.y = Some(x),
                        "height" => o.height = Some(x),
                        _ => o.azimuth_deg = Some(x),
                    }
                }
                ["placement", "ncr", i, f] => {
                    let o: &mut NcrOverride = ov.ncr.entry(i.to_string()).or_default();
                    match *f {
                        "controlling_gnb" => o.controlling_gnb = Some(as_u64(key, v)? as usize),
                        "x" => o.x = Some(as_f64(key, v)?),
                        "y" => o.y = Some(as_f64(key, v)?),
                        "height" => o.height = Some(as_f64(key, v)?),
                        "gnb_side_azimuth_deg" => o.gnb_side_azimuth_deg = Some(as_f64(key, v)?),
                        _ => o.ue_side_azimuth_deg = Some(as_f64(key, v)?),
                    }
                }
                _ => {}
            }
        }
        Ok(ov)
    }

    fn static_sci(&self) -> Result<BTreeMap<usize, SideControlInfo>, ConfigError> {
        let mut out: BTreeMap<usize, SideControlInfo> = BTreeMap::new();
        for (key, v) in &self.entries {
            let parts: Vec<&str> = key.split('.').collect();
            let ["sci", i, f] = parts.as_slice() else { continue };
            let n: usize = i.parse().map_err(|_| invalid(key, "bad index"))?;
            let sci = out.entry(n).or_insert_with(|| SideControlInfo {
                kind: SciKind::Periodic,
                periodicity_slots: 80,
                start_slot: 0,
                entries: Vec::new(),
            });
            match *f {
                "kind" => {
                    sci.kind = match as_str(key, v)? {
                        "periodic" => SciKind::Periodic,
                        "semi_persistent" => SciKind::SemiPersistent,
                        "dynamic" => SciKind::Dynamic,
                        other => return Err(invalid(key, format!("unknown SCI kind `{other}`"))),
                    }
                }
                "periodicity_slots" => sci.periodicity_slots = as_u64(key, v)?,
                "start_slot" => sci.start_slot = as_u64(key, v)?,
                _ => {
                    let arr = v.as_array().ok_or_else(|| invalid(key, "expected an array of tables"))?;
                    for item in arr {
                        let t = item
                            .as_table()
                            .ok_or_else(|| invalid(key, "entries must be tables {offset, duration, beam}"))?;
                        for k in t.keys() {
                            if !["offset", "duration", "beam"].contains(&k.as_str()) {
                                return Err(invalid(key, format!("unknown entry field `{k}`")));
                            }
                        }
                        let field = |name: &str| -> Result<u64, ConfigError> {
                            t.get(name)
                                .map(|x| as_u64(key, x))
                                .transpose()?
                                .ok_or_else(|| invalid(key, format!("entry lacks `{name}`")))
                        };
                        sci.entries.push(SciEntry {
                            offset: field("offset")?,
                            duration: field("duration")?,
                            beam: field("beam")? as usize,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliOverrides {
    pub scenario: Option<ScenarioId>,
    pub ncr_enabled: Option<bool>,
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub trace: TraceFlags,
}

/// Builds and validates the run configuration from file values and CLI flags.
pub fn resolve(file: &FileConfig, cli: &CliOverrides) -> Result<RunConfig, ConfigError> {
    let id = match cli.scenario {
        Some(id) => id,
        None => match file.get("scenario.id") {
            Some(v) => as_str("scenario.id", v)?.parse()?,
            None => ScenarioId::A,
        },
    };
    let ncr_enabled = match cli.ncr_enabled {
        Some(b) => b,
        None => file.get("ncr.enabled").map(|v| as_bool("ncr.enabled", v)).transpose()?.unwrap_or(true),
    };
    let overrides = file.placement_overrides()?;
    let mut scenario = build_scenario(id, ncr_enabled, Some(&overrides))?;

    if let Some(n) = file.u64("scenario.ue_count")? {
        scenario.ue_count = n as usize;
    }
    if let Some(v) = file.get("scenario.masked_corridors") {
        let arr = v
            .as_array()
            .ok_or_else(|| invalid("scenario.masked_corridors", "expected an array of corridor indices"))?;
        scenario.masked_corridors = arr
            .iter()
            .map(|x| as_u64("scenario.masked_corridors", x).map(|c| c as usize))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = file.f64("system.carrier_hz")? {
        scenario.carrier_hz = v;
    }
    if let Some(v) = file.u64("system.rb_count")? {
        scenario.rb_count = v as usize;
    }
    let r = &mut scenario.radio;
    let set = |slot: &mut f64, key: &str| -> Result<(), ConfigError> {
        if let Some(v) = file.f64(key)? {
            *slot = v;
        }
        Ok(())
    };
    set(&mut r.noise_figure_db, "system.noise_figure_db")?;
    set(&mut r.gnb_tx_dbm, "gnb.tx_power_dbm")?;
    set(&mut r.gnb_tilt_deg, "gnb.tilt_deg")?;
    set(&mut r.panel_element_gain_dbi, "gnb.element_gain_dbi")?;
    set(&mut r.ue_tx_dbm, "ue.tx_power_dbm")?;
    set(&mut r.ue_height_m, "ue.height_m")?;
    set(&mut r.ncr_gain_db, "ncr.gain_db")?;
    set(&mut r.ncr_max_output_dbm, "ncr.max_output_dbm")?;
    set(&mut r.ncr_tilt_deg, "ncr.tilt_deg")?;
    if let Some(kmh) = file.f64("ue.speed_kmh")? {
        r.ue_speed_mps = kmh / 3.6;
    }
    if !(r.ncr_gain_db >= 0.0) {
        return Err(invalid("ncr.gain_db", "must be non-negative"));
    }
    if !(r.ue_speed_mps >= 0.0 && r.ue_speed_mps.is_finite()) {
        return Err(invalid("ue.speed_kmh", "must be non-negative"));
    }
    if !(r.ue_height_m > 0.0) {
        return Err(invalid("ue.height_m", "must be positive"));
    }

    let mut params = default_params(&scenario);
    if let Some(v) = file.u64("sweep.access_period_slots")? {
        params.sweep.access_period_slots = v;
    }
    if let Some(v) = file.u64("sweep.backhaul_period_slots")? {
        params.sweep.backhaul_period_slots = (v > 0).then_some(v);
    }
    if let Some(v) = file.u64("traffic.packet_bits")? {
        params.packet_bits = v;
    }
    if let Some(v) = file.u64("traffic.inter_arrival_slots")? {
        params.inter_arrival_slots = v;
    }
    if let Some(v) = file.u64("scheduler.max_ues_per_slot")? {
        params.max_ues_per_slot = v as usize;
    }
    if let Some(v) = file.get("ncr.schedule_mode") {
        params.schedule_mode = as_str("ncr.schedule_mode", v)?.parse()?;
    }
    if let Some(v) = file.f64("channel.rician_k_db")? {
        params.channel.rician_k_db = v;
    }
    if let Some(v) = file.f64("channel.max_delay_ns")? {
        if !(v >= 0.0) {
            return Err(invalid("channel.max_delay_ns", "must be non-negative"));
        }
        params.channel.max_delay_s = v * 1e-9;
    }
    if let Some(v) = file.f64("channel.refresh_distance_m")? {
        params.refresh_distance_m = v;
    }
    if let Some(v) = file.f64("association.outage_rsrp_dbm")? {
        params.outage_rsrp_dbm = v;
    }
    if let Some(v) = file.get("debug.checks") {
        params.debug_checks = as_bool("debug.checks", v)?;
    }
    params.static_sci = file.static_sci()?;
    if !params.static_sci.is_empty() && params.schedule_mode != ScheduleMode::Static {
        return Err(invalid("sci", "SCI records require ncr.schedule_mode = \"static\""));
    }

    let total_slots = cli.slots.or(file.u64("run.slots")?).unwrap_or(DEFAULT_SLOTS);
    let warmup_slots = match file.u64("run.warmup_slots")? {
        Some(w) => w,
        None => (total_slots / 10).min(DEFAULT_WARMUP_SLOTS),
    };
    let seed = cli.seed.or(file.u64("run.seed")?).unwrap_or(1);

    let cfg = RunConfig {
        scenario,
        seed,
        total_slots,
        warmup_slots,
        output_dir: cli.output_dir.clone(),
        trace: cli.trace,
        params,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let f = FileConfig::parse("").unwrap();
        let c = resolve(&f, &CliOverrides::default()).unwrap();
        assert_eq!(c.total_slots, 40_000);
        assert_eq!(c.warmup_slots, 4_000);
        assert_eq!(c.scenario.scenario_id, ScenarioId::A);
        assert_eq!(c.params.schedule_mode, ScheduleMode::Dynamic);
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let a = FileConfig::parse("ncr.gain_db = 80\nsweep.access_period_slots = 40\n").unwrap();
        let b = FileConfig::parse("[ncr]\ngain_db = 80\n[sweep]\naccess_period_slots = 40\n").unwrap();
        assert_eq!(a, b);
        let c = resolve(&a, &CliOverrides::default()).unwrap();
        assert_eq!(c.scenario.radio.ncr_gain_db, 80.0);
        assert_eq!(c.params.sweep.access_period_slots, 40);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            FileConfig::parse("ncr.gian_db = 80"),
            Err(ConfigError::InvalidValue { .. })
        ));
        assert!(FileConfig::parse("placement.gnb.0.z = 1").is_err());
        assert!(FileConfig::parse("= 3").is_err());
    }

    #[test]
    fn cli_overrides_file() {
        let f = FileConfig::parse("scenario.id = \"A\"\nrun.seed = 3\nrun.slots = 500").unwrap();
        let cli = CliOverrides {
            scenario: Some(ScenarioId::B),
            seed: Some(9),
            ..Default::default()
        };
        let c = resolve(&f, &cli).unwrap();
        assert_eq!(c.scenario.scenario_id, ScenarioId::B);
        assert_eq!(c.seed, 9);
        assert_eq!(c.total_slots, 500);
        assert_eq!(c.warmup_slots, 50);
    }

    #[test]
    fn bad_values_rejected() {
        for text in [
            "run.slots = 100\nrun.warmup_slots = 100",
            "ncr.schedule_mode = \"sometimes\"",
            "scenario.id = \"C\"",
            "placement.ncr.0.x = 200.0\nplacement.ncr.0.y = 200.0",
            "placement.gnb.9.x = 1.0",
            "sweep.access_period_slots = 0",
            "system.rb_count = 0",
        ] {
            let r = FileConfig::parse(text).and_then(|f| resolve(&f, &CliOverrides::default()));
            assert!(r.is_err(), "{text}");
        }
    }

    #[test]
    fn static_sci_parsed_and_checked() {
        let ok = "ncr.schedule_mode = \"static\"\n\
                  sci.0.kind = \"periodic\"\nsci.0.periodicity_slots = 80\n\
                  sci.0.entries = [{offset = 0, duration = 40, beam = 7}, {offset = 40, duration = 40, beam = 9}]\n";
        let c = resolve(&FileConfig::parse(ok).unwrap(), &CliOverrides::default()).unwrap();
        assert_eq!(c.params.static_sci[&0].entries.len(), 2);
        let overlap = ok.replace("offset = 40", "offset = 30");
        assert!(matches!(
            resolve(&FileConfig::parse(&overlap).unwrap(), &CliOverrides::default()),
            Err(ConfigError::OverlappingSci { .. })
        ));
    }

    #[test]
    fn hash_ignores_seed_and_output() {
        let a = RunConfig::new(ScenarioId::A, true, 1, 1000).unwrap();
        let mut b = a.clone();
        b.seed = 2;
        b.output_dir = Some("/tmp/x".into());
        assert_eq!(a.config_hash(), b.config_hash());
        let c = RunConfig::new(ScenarioId::A, false, 1, 1000).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }
}
