use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_traits::Float;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::SimError;
use crate::mac::Direction;
use crate::phy::{LinkType, SPECTRAL_EFFICIENCY};

pub const SINR_HEADER: &str = "slot,direction,link_type,ue,serving_gnb,serving_ncr,sinr_db";
pub const THROUGHPUT_HEADER: &str = "ue,direction,mbit_s";
pub const MCS_HEADER: &str = "mcs,direction,count";
pub const ALLOC_HEADER: &str = "slot,gnb,ue,rb_start,rb_len,direction,path";

const MCS_COUNT: usize = SPECTRAL_EFFICIENCY.len();

/// One post-warmup SINR observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub slot: u64,
    pub direction: Direction,
    pub link_type: LinkType,
    pub ue: u32,
    pub serving_gnb: u32,
    pub serving_ncr: Option<u32>,
    pub sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub scenario: String,
    pub ncr_enabled: bool,
    pub schedule_mode: String,
    pub seed: u64,
    pub total_slots: u64,
    pub warmup_slots: u64,
    pub ue_count: usize,
    pub slot_s: f64,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsStore {
    pub meta: RunMetadata,
    pub samples: Vec<SampleRecord>,
    /// Bits delivered after warmup that belong to post-warmup arrivals.
    pub counted_bits: Vec<[u64; 2]>,
    /// All bits delivered during the run.
    pub delivered_bits: Vec<[u64; 2]>,
    pub arrived_bits: Vec<[u64; 2]>,
    pub mcs_usage: [[u64; MCS_COUNT]; 2],
    /// Transmissions below the lowest MCS threshold.
    pub outage_allocations: [u64; 2],
}

/// Type-7 empirical quantile: linear interpolation between the closest ranks
/// of the sorted samples.
pub fn percentile<T: Float>(samples: &[T], p: f64) -> Result<T, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptySamples);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(SimError::InvalidPercentile(p));
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(percentile_sorted(&v, p))
}

fn percentile_sorted<T: Float>(v: &[T], p: f64) -> T {
    let h = (v.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = T::from(h - lo as f64).expect("fraction representable");
    v[lo] + (v[hi] - v[lo]) * frac
}

fn quantiles(values: &[f64]) -> Value {
    if values.is_empty() {
        return Value::Null;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    json!({
        "count": v.len(),
        "p10": percentile_sorted(&v, 10.0),
        "p50": percentile_sorted(&v, 50.0),
        "p90": percentile_sorted(&v, 90.0),
    })
}

impl MetricsStore {
    pub fn new(meta: RunMetadata) -> Self {
        let u = meta.ue_count;
        Self {
            meta,
            samples: Vec::new(),
            counted_bits: vec![[0; 2]; u],
            delivered_bits: vec![[0; 2]; u],
            arrived_bits: vec![[0; 2]; u],
            mcs_usage: [[0; MCS_COUNT]; 2],
            outage_allocations: [0; 2],
        }
    }

    pub fn post_warmup_slots(&self) -> u64 {
        self.meta.total_slots - self.meta.warmup_slots
    }

    /// SINR samples (dB) of one direction and link type.
    pub fn sinr_values(&self, direction: Direction, link_type: LinkType) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.direction == direction && s.link_type == link_type)
            .map(|s| s.sinr_db)
            .collect()
    }

    pub fn total_counted_bits(&self) -> u64 {
        self.counted_bits.iter().map(|b| b[0] + b[1]).sum()
    }

    pub fn to_summary(&self) -> Value {
        let with = self.meta.ncr_enabled;
        let mut sinr = serde_json::Map::new();
        let mut tput = serde_json::Map::new();
        for d in Direction::BOTH {
            let direct = quantiles(&self.sinr_values(d, LinkType::Direct));
            let fwd = quantiles(&self.sinr_values(d, LinkType::Forwarded));
            let (without, with_direct, forwarded) = if with {
                (Value::Null, direct, fwd)
            } else {
                (direct, Value::Null, Value::Null)
            };
            sinr.insert(
                d.as_str().to_string(),
                json!({
                    "direct_without_ncr": without,
                    "direct_with_ncr": with_direct,
                    "forwarded": forwarded,
                }),
            );
            let t = quantiles(&per_ue_throughput(self, d));
            let (t_without, t_with) = if with { (Value::Null, t) } else { (t, Value::Null) };
            tput.insert(
                d.as_str().to_string(),
                json!({ "without_ncr": t_without, "with_ncr": t_with }),
            );
        }
        json!({
            "run": self.meta,
            "seed": self.meta.seed,
            "config_hash": self.meta.config_hash,
            "sinr_db": sinr,
            "throughput_mbit_s": tput,
            "samples": self.samples.len(),
            "outage_allocations": { "DL": self.outage_allocations[0], "UL": self.outage_allocations[1] },
        })
    }

    pub fn sinr_csv(&self) -> String {
        let mut out = String::with_capacity(48 * self.samples.len() + 64);
        out.push_str(SINR_HEADER);
        out.push('\n');
        for s in &self.samples {
            let ncr = s.serving_ncr.map(|n| n.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.slot,
                s.direction.as_str(),
                s.link_type.as_str(),
                s.ue,
                s.serving_gnb,
                ncr,
                s.sinr_db
            );
        }
        out
    }

    pub fn throughput_csv(&self) -> String {
        let mut out = format!("{THROUGHPUT_HEADER}\n");
        let per_dir: Vec<Vec<f64>> = Direction::BOTH.iter().map(|&d| per_ue_throughput(self, d)).collect();
        for ue in 0..self.meta.ue_count {
            for d in Direction::BOTH {
                let _ = writeln!(out, "{ue},{},{}", d.as_str(), per_dir[d.index()][ue]);
            }
        }
        out
    }

    pub fn mcs_csv(&self) -> String {
        let mut out = format!("{MCS_HEADER}\n");
        for mcs in 0..MCS_COUNT {
            for d in Direction::BOTH {
                let _ = writeln!(out, "{mcs},{},{}", d.as_str(), self.mcs_usage[d.index()][mcs]);
            }
        }
        out
    }
}

/// Per-UE throughput (Mbit/s) in one direction: bits of post-warmup arrivals
/// delivered, over the post-warmup duration.
pub fn per_ue_throughput(store: &MetricsStore, direction: Direction) -> Vec<f64> {
    let secs = store.post_warmup_slots() as f64 * store.meta.slot_s;
    store
        .counted_bits
        .iter()
        .map(|b| b[direction.index()] as f64 / secs / 1e6)
        .collect()
}

/// Fails early when `dir` cannot be created or written.
pub fn preflight(dir: &Path) -> Result<(), SimError> {
    let unwritable = |source| SimError::Unwritable {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(".ncr-sim-write-test");
    fs::write(&probe, b"").map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)?;
    Ok(())
}

/// Writes the result files into `dir`.
pub fn emit(store: &MetricsStore, dir: &Path) -> Result<(), SimError> {
    preflight(dir)?;
    fs::write(dir.join("sinr_samples.csv"), store.sinr_csv())?;
    fs::write(dir.join("throughput.csv"), store.throughput_csv())?;
    fs::write(dir.join("mcs_usage.csv"), store.mcs_csv())?;
    let mut summary = serde_json::to_string_pretty(&store.to_summary())?;
    summary.push('\n');
    fs::write(dir.join("summary.json"), summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed, Purpose};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn meta() -> RunMetadata {
        RunMetadata {
            scenario: "A".into(),
            ncr_enabled: true,
            schedule_mode: "dynamic".into(),
            seed: 1,
            total_slots: 100,
            warmup_slots: 20,
            ue_count: 2,
            slot_s: 0.25e-3,
            config_hash: "x".into(),
            version: "0".into(),
        }
    }

    #[test]
    fn percentile_examples() {
        let v: Vec<f64> = (1..=99).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0).unwrap(), 50.0);
        assert_eq!(percentile(&[10.0, 20.0], 0.0).unwrap(), 10.0);
        assert_eq!(percentile(&[10.0, 20.0], 100.0).unwrap(), 20.0);
        assert_eq!(percentile(&[10.0f32, 20.0], 25.0).unwrap(), 12.5);
        assert!(matches!(percentile::<f64>(&[], 50.0), Err(SimError::EmptySamples)));
        assert!(matches!(percentile(&[1.0], 101.0), Err(SimError::InvalidPercentile(_))));
    }

    #[test]
    fn normal_p90() {
        let mut rng = keyed(5, Purpose::Test, 0, 0);
        let v: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let p = percentile(&v, 90.0).unwrap();
        assert!((p - 1.2816).abs() < 0.02, "{p}");
    }

    #[test]
    fn percentile_is_monotone_in_p() {
        let mut rng = keyed(6, Purpose::Test, 0, 0);
        let v: Vec<f64> = (0..57).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut prev = f64::NEG_INFINITY;
        for p in 0..=100 {
            let q = percentile(&v, p as f64).unwrap();
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn summary_has_full_grid() {
        let mut m = MetricsStore::new(meta());
        m.samples.push(SampleRecord {
            slot: 30,
            direction: Direction::Dl,
            link_type: LinkType::Forwarded,
            ue: 0,
            serving_gnb: 0,
            serving_ncr: Some(1),
            sinr_db: 12.5,
        });
        m.counted_bits[1] = [8000, 0];
        let s = m.to_summary();
        for d in ["DL", "UL"] {
            for k in ["direct_without_ncr", "direct_with_ncr", "forwarded"] {
                assert!(s["sinr_db"][d].get(k).is_some());
            }
            for k in ["without_ncr", "with_ncr"] {
                assert!(s["throughput_mbit_s"][d].get(k).is_some());
            }
        }
        assert_eq!(s["sinr_db"]["DL"]["forwarded"]["p50"], 12.5);
        assert!(s["sinr_db"]["DL"]["direct_without_ncr"].is_null());
        assert_eq!(s["seed"], 1);
        // 8000 bits over 80 slots of 0.25 ms.
        let t = per_ue_throughput(&m, Direction::Dl);
        assert!((t[1] - 0.4).abs() < 1e-12);
        assert!(m.sinr_csv().ends_with("30,DL,forwarded,0,0,1,12.5\n"));
    }

    #[test]
    fn emit_is_repeatable_and_unwritable_is_reported() {
        let m = MetricsStore::new(meta());
        let dir = tempfile::tempdir().unwrap();
        emit(&m, dir.path()).unwrap();
        let first = fs::read(dir.path().join("summary.json")).unwrap();
        emit(&m, dir.path()).unwrap();
        assert_eq!(first, fs::read(dir.path().join("summary.json")).unwrap());
        let csv = fs::read_to_string(dir.path().join("mcs_usage.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 32);

        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(preflight(&file.join("sub")), Err(SimError::Unwritable { .. })));
    }
}
