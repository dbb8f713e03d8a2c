use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::mac::{Direction, ServingPath};
use crate::ncr::power_stage;
use crate::units::{db_to_lin, lin_to_db};

/// Linear (mW) composite gains of the links the SINR terms need, for a
/// contiguous RB range. Implementations write one value per RB into `out`.
pub trait GainTable {
    fn gnb_ue(&self, gnb: usize, ue: usize, gnb_beam: usize, rbs: Range<usize>, out: &mut [f64]);
    fn ncr_ue(&self, ncr: usize, ue: usize, access_beam: usize, rbs: Range<usize>, out: &mut [f64]);
    fn gnb_ncr(&self, gnb: usize, ncr: usize, gnb_beam: usize, backhaul_beam: usize, rbs: Range<usize>, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkType {
    Direct,
    Forwarded,
}

impl LinkType {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkType::Direct => "direct",
            LinkType::Forwarded => "forwarded",
        }
    }
}

/// One scheduled transmission of a gNB: the UE, its RB chunk, the gNB panel
/// beam (towards the UE, or towards the NCR when forwarded) and the path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub gnb: usize,
    pub ue: usize,
    pub rbs: Range<usize>,
    pub gnb_beam: usize,
    pub path: ServingPath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcrSlot {
    pub controlling_gnb: usize,
    pub backhaul_beam: usize,
    /// `None` when the repeater is OFF in this slot.
    pub access_beam: Option<usize>,
    pub gain_lin: f64,
    /// Amplified receiver noise per RB at the output panel (mW).
    pub noise_out_mw: f64,
}

impl NcrSlot {
    pub fn off(controlling_gnb: usize, backhaul_beam: usize) -> Self {
        Self {
            controlling_gnb,
            backhaul_beam,
            access_beam: None,
            gain_lin: 0.0,
            noise_out_mw: 0.0,
        }
    }

    pub fn is_on(&self) -> bool {
        self.access_beam.is_some()
    }
}

/// Transmit powers and per-RB noise in mW. gNBs spread their power evenly
/// over the carrier; a UE puts its whole power on the RBs it was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    /// gNB power per RB.
    pub gnb_tx_mw: f64,
    /// Total UE power.
    pub ue_total_mw: f64,
    /// Thermal noise plus noise figure at gNB and UE receivers.
    pub rx_noise_mw: f64,
    /// Same quantity at an NCR input.
    pub ncr_noise_mw: f64,
}

impl PowerBudget {
    pub fn from_dbm(gnb_total_dbm: f64, ue_total_dbm: f64, noise_per_rb_dbm: f64, ncr_noise_per_rb_dbm: f64, rb_count: usize) -> Self {
        let split = 10.0 * (rb_count as f64).log10();
        Self {
            gnb_tx_mw: db_to_lin(gnb_total_dbm - split),
            ue_total_mw: db_to_lin(ue_total_dbm),
            rx_noise_mw: db_to_lin(noise_per_rb_dbm),
            ncr_noise_mw: db_to_lin(ncr_noise_per_rb_dbm),
        }
    }

    /// UE power per RB for an allocation of `n_rb` RBs.
    pub fn ue_rb_mw(&self, n_rb: usize) -> f64 {
        self.ue_total_mw / n_rb.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SinrComponents {
    pub signal: f64,
    pub ncr_noise: f64,
    pub rx_noise: f64,
    pub direct_interf: f64,
    pub fwd_interf: f64,
    pub fwd_noise_interf: f64,
}

impl SinrComponents {
    pub fn interference_plus_noise(&self) -> f64 {
        self.ncr_noise + self.rx_noise + self.direct_interf + self.fwd_interf + self.fwd_noise_interf
    }

    pub fn sinr_lin(&self) -> f64 {
        self.signal / self.interference_plus_noise()
    }

    pub fn sinr_db(&self) -> f64 {
        lin_to_db(self.sinr_lin())
    }

    /// `[signal, ncr_noise, rx_noise, direct_interf, fwd_interf, fwd_noise_interf]` in dBm.
    pub fn to_dbm(&self) -> [f64; 6] {
        [
            self.signal,
            self.ncr_noise,
            self.rx_noise,
            self.direct_interf,
            self.fwd_interf,
            self.fwd_noise_interf,
        ]
        .map(lin_to_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub slot: u64,
    pub direction: Direction,
    pub ue: usize,
    pub link_type: LinkType,
    pub serving_gnb: usize,
    pub serving_ncr: Option<usize>,
    pub rb_set: Range<usize>,
    pub sinr_db: f64,
    /// RB-averaged linear powers (mW).
    pub components: SinrComponents,
}

/// Frozen per-slot state all SINR evaluations read.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub slot: u64,
    pub direction: Direction,
    pub rb_count: usize,
    /// Per gNB, its transmissions (orthogonal RB chunks).
    pub transmissions: Vec<Vec<Transmission>>,
    pub ncrs: Vec<NcrSlot>,
    pub power: PowerBudget,
    /// `ncr_input[n][j·K + k]`: power reaching NCR `n`'s active input panel on
    /// RB `k` from cell `j` (its gNB in DL, its UEs in UL).
    pub ncr_input: Vec<Vec<f64>>,
}

fn overlap(a: &Range<usize>, b: &Range<usize>) -> Option<Range<usize>> {
    let s = a.start.max(b.start);
    let e = a.end.min(b.end);
    (s < e).then_some(s..e)
}

impl SlotState {
    pub fn new(slot: u64, direction: Direction, rb_count: usize, gnb_count: usize, ncrs: Vec<NcrSlot>, power: PowerBudget) -> Self {
        Self {
            slot,
            direction,
            rb_count,
            transmissions: vec![Vec::new(); gnb_count],
            ncr_input: vec![Vec::new(); ncrs.len()],
            ncrs,
            power,
        }
    }

    pub fn gnb_count(&self) -> usize {
        self.transmissions.len()
    }

    /// Fills `ncr_input` for every ON repeater from the frozen allocation.
    pub fn compute_ncr_inputs<G: GainTable>(&mut self, gains: &G) {
        let k_count = self.rb_count;
        let b = self.gnb_count();
        let mut buf = vec![0.0; k_count];
        for n in 0..self.ncrs.len() {
            let ncr = self.ncrs[n];
            let mut input = vec![0.0; b * k_count];
            if let Some(access) = ncr.access_beam {
                for (j, list) in self.transmissions.iter().enumerate() {
                    for t in list {
                        let len = t.rbs.len();
                        let (p, out) = match self.direction {
                            Direction::Dl => {
                                gains.gnb_ncr(j, n, t.gnb_beam, ncr.backhaul_beam, t.rbs.clone(), &mut buf[..len]);
                                (self.power.gnb_tx_mw, &buf[..len])
                            }
                            Direction::Ul => {
                                gains.ncr_ue(n, t.ue, access, t.rbs.clone(), &mut buf[..len]);
                                (self.power.ue_rb_mw(len), &buf[..len])
                            }
                        };
                        for (i, k) in t.rbs.clone().enumerate() {
                            input[j * k_count + k] += p * out[i];
                        }
                    }
                }
            }
            self.ncr_input[n] = input;
        }
    }

    /// Total input power of NCR `n` over the carrier, including its own noise.
    pub fn ncr_total_input_mw(&self, n: usize) -> f64 {
        self.ncr_input[n].iter().sum::<f64>() + self.power.ncr_noise_mw * self.rb_count as f64
    }

    /// Applies the capped amplifier to every ON repeater; returns
    /// `(effective gain dB, output dBm)` per repeater (`None` when OFF).
    pub fn apply_power_stage(&mut self, amp_gain_db: f64, max_output_dbm: f64) -> Vec<Option<(f64, f64)>> {
        (0..self.ncrs.len())
            .map(|n| {
                if !self.ncrs[n].is_on() {
                    return None;
                }
                let input_dbm = lin_to_db(self.ncr_total_input_mw(n));
                let (g, out) = power_stage(amp_gain_db, max_output_dbm, input_dbm);
                let ncr = &mut self.ncrs[n];
                ncr.gain_lin = db_to_lin(g);
                ncr.noise_out_mw = self.power.ncr_noise_mw * ncr.gain_lin;
                Some((g, out))
            })
            .collect()
    }

    /// SINR of one scheduled transmission in this slot's direction.
    pub fn sinr<G: GainTable>(&self, t: &Transmission, gains: &G) -> SinrSample {
        let c = match self.direction {
            Direction::Dl => self.components_dl(t, gains),
            Direction::Ul => self.components_ul(t, gains),
        };
        SinrSample {
            slot: self.slot,
            direction: self.direction,
            ue: t.ue,
            link_type: if t.path.is_direct() {
                LinkType::Direct
            } else {
                LinkType::Forwarded
            },
            serving_gnb: t.gnb,
            serving_ncr: t.path.ncr(),
            rb_set: t.rbs.clone(),
            sinr_db: c.sinr_db(),
            components: c,
        }
    }

    /// Sum over other cells' sources of NCR `n`'s input on the RBs of `r`.
    fn foreign_input(&self, n: usize, serving: usize, r: &Range<usize>, out: &mut [f64]) {
        let k_count = self.rb_count;
        let input = &self.ncr_input[n];
        for (i, k) in r.clone().enumerate() {
            let mut s = 0.0;
            for j in 0..self.gnb_count() {
                if j != serving {
                    s += input[j * k_count + k];
                }
            }
            out[i] = s;
        }
    }

    fn components_dl<G: GainTable>(&self, t: &Transmission, gains: &G) -> SinrComponents {
        let r = t.rbs.clone();
        let len = r.len();
        let p = &self.power;
        let mut sig = vec![0.0; len];
        let mut ncr_noise = vec![0.0; len];
        let mut dint = vec![0.0; len];
        let mut fint = vec![0.0; len];
        let mut fnoise = vec![0.0; len];
        let mut buf = vec![0.0; len];
        let mut buf2 = vec![0.0; len];

        match t.path {
            ServingPath::Direct => {
                gains.gnb_ue(t.gnb, t.ue, t.gnb_beam, r.clone(), &mut buf);
                for i in 0..len {
                    sig[i] = p.gnb_tx_mw * buf[i];
                }
            }
            ServingPath::ViaNcr(n) => {
                let ncr = self.ncrs[n];
                if let Some(a) = ncr.access_beam {
                    gains.gnb_ncr(t.gnb, n, t.gnb_beam, ncr.backhaul_beam, r.clone(), &mut buf);
                    gains.ncr_ue(n, t.ue, a, r.clone(), &mut buf2);
                    for i in 0..len {
                        sig[i] = p.gnb_tx_mw * buf[i] * ncr.gain_lin * buf2[i];
                        ncr_noise[i] = ncr.noise_out_mw * buf2[i];
                    }
                }
            }
        }

        for (j, list) in self.transmissions.iter().enumerate() {
            if j == t.gnb {
                continue;
            }
            for other in list {
                if let Some(ov) = overlap(&r, &other.rbs) {
                    let off = ov.start - r.start;
                    let n_ov = ov.len();
                    gains.gnb_ue(j, t.ue, other.gnb_beam, ov, &mut buf[..n_ov]);
                    for i in 0..n_ov {
                        dint[off + i] += p.gnb_tx_mw * buf[i];
                    }
                }
            }
        }

        let serving_ncr = t.path.ncr();
        for (n, ncr) in self.ncrs.iter().enumerate() {
            let Some(a) = ncr.access_beam else { continue };
            gains.ncr_ue(n, t.ue, a, r.clone(), &mut buf);
            self.foreign_input(n, t.gnb, &r, &mut buf2);
            for i in 0..len {
                fint[i] += ncr.gain_lin * buf2[i] * buf[i];
                if serving_ncr != Some(n) {
                    fnoise[i] += ncr.noise_out_mw * buf[i];
                }
            }
        }

        average(&sig, &ncr_noise, p.rx_noise_mw, &dint, &fint, &fnoise)
    }

    fn components_ul<G: GainTable>(&self, t: &Transmission, gains: &G) -> SinrComponents {
        let r = t.rbs.clone();
        let len = r.len();
        let p = &self.power;
        let mut sig = vec![0.0; len];
        let mut ncr_noise = vec![0.0; len];
        let mut dint = vec![0.0; len];
        let mut fint = vec![0.0; len];
        let mut fnoise = vec![0.0; len];
        let mut buf = vec![0.0; len];
        let mut buf2 = vec![0.0; len];

        match t.path {
            ServingPath::Direct => {
                gains.gnb_ue(t.gnb, t.ue, t.gnb_beam, r.clone(), &mut buf);
                for i in 0..len {
                    sig[i] = p.ue_rb_mw(len) * buf[i];
                }
            }
            ServingPath::ViaNcr(n) => {
                let ncr = self.ncrs[n];
                if let Some(a) = ncr.access_beam {
                    gains.ncr_ue(n, t.ue, a, r.clone(), &mut buf);
                    gains.gnb_ncr(t.gnb, n, t.gnb_beam, ncr.backhaul_beam, r.clone(), &mut buf2);
                    for i in 0..len {
                        sig[i] = p.ue_rb_mw(len) * buf[i] * ncr.gain_lin * buf2[i];
                        ncr_noise[i] = ncr.noise_out_mw * buf2[i];
                    }
                }
            }
        }

        for (j, list) in self.transmissions.iter().enumerate() {
            if j == t.gnb {
                continue;
            }
            for other in list {
                if let Some(ov) = overlap(&r, &other.rbs) {
                    let off = ov.start - r.start;
                    let n_ov = ov.len();
                    gains.gnb_ue(t.gnb, other.ue, t.gnb_beam, ov, &mut buf[..n_ov]);
                    let pu = p.ue_rb_mw(other.rbs.len());
                    for i in 0..n_ov {
                        dint[off + i] += pu * buf[i];
                    }
                }
            }
        }

        let serving_ncr = t.path.ncr();
        for (n, ncr) in self.ncrs.iter().enumerate() {
            if !ncr.is_on() {
                continue;
            }
            gains.gnb_ncr(t.gnb, n, t.gnb_beam, ncr.backhaul_beam, r.clone(), &mut buf);
            self.foreign_input(n, t.gnb, &r, &mut buf2);
            for i in 0..len {
                fint[i] += ncr.gain_lin * buf2[i] * buf[i];
                if serving_ncr != Some(n) {
                    fnoise[i] += ncr.noise_out_mw * buf[i];
                }
            }
        }

        average(&sig, &ncr_noise, p.rx_noise_mw, &dint, &fint, &fnoise)
    }
}

fn average(sig: &[f64], ncr_noise: &[f64], rx_noise: f64, dint: &[f64], fint: &[f64], fnoise: &[f64]) -> SinrComponents {
    let n = sig.len().max(1) as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    SinrComponents {
        signal: mean(sig),
        ncr_noise: mean(ncr_noise),
        rx_noise,
        direct_interf: mean(dint),
        fwd_interf: mean(fint),
        fwd_noise_interf: mean(fnoise),
    }
}

/// End-to-end SNR of a fixed-gain two-hop relay from its per-hop SNRs:
/// `1/γ = 1/γ₁ + 1/γ₂`.
pub fn af_end_to_end(gamma_backhaul: f64, gamma_access: f64) -> f64 {
    gamma_backhaul * gamma_access / (gamma_backhaul + gamma_access)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::{keyed, Purpose};
    use rand::Rng;

    /// Gains constant across RBs, drawn per node pair.
    #[derive(Debug, Clone)]
    pub struct FlatGains {
        pub gnb_ue: Vec<Vec<f64>>,
        pub ncr_ue: Vec<Vec<f64>>,
        pub gnb_ncr: Vec<Vec<f64>>,
    }

    impl GainTable for FlatGains {
        fn gnb_ue(&self, gnb: usize, ue: usize, _b: usize, _r: Range<usize>, out: &mut [f64]) {
            out.fill(self.gnb_ue[gnb][ue]);
        }
        fn ncr_ue(&self, ncr: usize, ue: usize, _b: usize, _r: Range<usize>, out: &mut [f64]) {
            out.fill(self.ncr_ue[ncr][ue]);
        }
        fn gnb_ncr(&self, gnb: usize, ncr: usize, _b: usize, _bb: usize, _r: Range<usize>, out: &mut [f64]) {
            out.fill(self.gnb_ncr[gnb][ncr]);
        }
    }

    fn budget() -> PowerBudget {
        PowerBudget::from_dbm(35.0, 24.0, -106.43, -106.43, 66)
    }

    fn single(dir: Direction, path: ServingPath, ncrs: Vec<NcrSlot>) -> (SlotState, Transmission) {
        let mut s = SlotState::new(0, dir, 66, 1, ncrs, budget());
        let t = Transmission {
            gnb: 0,
            ue: 0,
            rbs: 0..66,
            gnb_beam: 0,
            path,
        };
        s.transmissions[0].push(t.clone());
        (s, t)
    }

    #[test]
    fn isolated_link_is_snr() {
        let g = FlatGains {
            gnb_ue: vec![vec![1e-10]],
            ncr_ue: vec![],
            gnb_ncr: vec![],
        };
        let (s, t) = single(Direction::Dl, ServingPath::Direct, vec![]);
        let smp = s.sinr(&t, &g);
        let c = smp.components;
        assert_eq!(c.direct_interf, 0.0);
        assert_eq!(c.fwd_interf, 0.0);
        assert_eq!(c.fwd_noise_interf, 0.0);
        assert_eq!(c.ncr_noise, 0.0);
        let expect = 35.0 - 10.0 * 66f64.log10() - 100.0 + 106.43;
        assert!((smp.sinr_db - expect).abs() < 1e-9);
        assert!((lin_to_db(c.signal / c.interference_plus_noise()) - smp.sinr_db).abs() < 1e-9);
    }

    #[test]
    fn uplink_is_downlink_minus_power_delta() {
        let g = FlatGains {
            gnb_ue: vec![vec![3e-11]],
            ncr_ue: vec![],
            gnb_ncr: vec![],
        };
        let (dl, t) = single(Direction::Dl, ServingPath::Direct, vec![]);
        let (ul, _) = single(Direction::Ul, ServingPath::Direct, vec![]);
        let d = dl.sinr(&t, &g).sinr_db;
        let u = ul.sinr(&t, &g).sinr_db;
        assert!((d - u - 11.0).abs() < 1e-9);
        let zero = FlatGains {
            gnb_ue: vec![vec![0.0]],
            ncr_ue: vec![],
            gnb_ncr: vec![],
        };
        assert_eq!(ul.sinr(&t, &zero).sinr_db, -200.0);
    }

    #[test]
    fn forwarded_below_both_hops() {
        let mut rng = keyed(1, Purpose::Test, 500, 0);
        for _ in 0..1000 {
            let g_bh = db_to_lin(-rng.random_range(60.0..130.0));
            let g_ac = db_to_lin(-rng.random_range(60.0..130.0));
            let g = FlatGains {
                gnb_ue: vec![vec![0.0]],
                ncr_ue: vec![vec![g_ac]],
                gnb_ncr: vec![vec![g_bh]],
            };
            let ncr = NcrSlot {
                access_beam: Some(0),
                ..NcrSlot::off(0, 0)
            };
            let (mut s, t) = single(Direction::Dl, ServingPath::ViaNcr(0), vec![ncr]);
            s.compute_ncr_inputs(&g);
            s.apply_power_stage(90.0, 33.0);
            let smp = s.sinr(&t, &g);
            let p = s.power;
            let gl = s.ncrs[0].gain_lin;
            let gamma_bh = p.gnb_tx_mw * g_bh / p.ncr_noise_mw;
            let gamma_ac = p.gnb_tx_mw * g_bh * gl * g_ac / p.rx_noise_mw;
            let e2e = db_to_lin(smp.sinr_db);
            assert!(e2e <= gamma_bh.min(gamma_ac) * (1.0 + 1e-12));
            assert!((lin_to_db(af_end_to_end(gamma_bh, gamma_ac)) - smp.sinr_db).abs() < 1e-6);
        }
    }

    #[test]
    fn off_ncr_changes_nothing_for_direct_ues() {
        let g = FlatGains {
            gnb_ue: vec![vec![1e-9, 2e-10], vec![3e-11, 1e-9]],
            ncr_ue: vec![vec![1e-7, 1e-7]],
            gnb_ncr: vec![vec![1e-8], vec![1e-9]],
        };
        let mk = |ncrs: Vec<NcrSlot>| {
            let mut s = SlotState::new(4, Direction::Dl, 66, 2, ncrs, budget());
            s.transmissions[0].push(Transmission {
                gnb: 0,
                ue: 0,
                rbs: 0..33,
                gnb_beam: 1,
                path: ServingPath::Direct,
            });
            s.transmissions[1].push(Transmission {
                gnb: 1,
                ue: 1,
                rbs: 10..66,
                gnb_beam: 2,
                path: ServingPath::Direct,
            });
            s.compute_ncr_inputs(&g);
            s.apply_power_stage(90.0, 33.0);
            s
        };
        let without = mk(vec![]);
        let with_off = mk(vec![NcrSlot::off(0, 3)]);
        for t in without.transmissions.iter().flatten() {
            assert_eq!(without.sinr(t, &g), with_off.sinr(t, &g));
        }
    }

    #[test]
    fn extra_interferer_never_helps() {
        let mut rng = keyed(2, Purpose::Test, 501, 0);
        for _ in 0..100 {
            let mut r = |lo: f64, hi: f64| db_to_lin(-rng.random_range(lo..hi));
            let g = FlatGains {
                gnb_ue: (0..3).map(|_| (0..3).map(|_| r(70.0, 140.0)).collect()).collect(),
                ncr_ue: vec![(0..3).map(|_| r(60.0, 130.0)).collect()],
                gnb_ncr: (0..3).map(|_| vec![r(60.0, 120.0)]).collect(),
            };
            for dir in Direction::BOTH {
                let build = |active: usize| {
                    let ncr = NcrSlot {
                        access_beam: Some(0),
                        ..NcrSlot::off(0, 0)
                    };
                    let mut s = SlotState::new(0, dir, 66, 3, vec![ncr], budget());
                    for j in 0..active {
                        s.transmissions[j].push(Transmission {
                            gnb: j,
                            ue: j,
                            rbs: 0..66,
                            gnb_beam: 0,
                            path: if j == 0 {
                                ServingPath::ViaNcr(0)
                            } else {
                                ServingPath::Direct
                            },
                        });
                    }
                    s.compute_ncr_inputs(&g);
                    s.apply_power_stage(90.0, 33.0);
                    s
                };
                let two = build(2);
                let three = build(3);
                for j in 0..2 {
                    let t = two.transmissions[j][0].clone();
                    assert!(three.sinr(&t, &g).sinr_db <= two.sinr(&t, &g).sinr_db + 1e-12);
                }
            }
        }
    }
}
