use std::ops::Range;

use rayon::prelude::*;

use super::config::{RunConfig, ScheduleMode};
use super::metrics::{MetricsStore, RunMetadata, SampleRecord, ALLOC_HEADER};
use crate::antenna::build_dft_codebook;
use crate::channel::{sample_shadowing, trace_row, Endpoint, Geometry, LinkState, NodeKind, ShadowingField, LINK_TRACE_HEADER, PATHS};
use crate::error::SimError;
use crate::mac::{
    associate, is_orthogonal, is_sweep_slot, max_min_beam, run_beam_sweep, tdd_direction, Association, Candidate, Direction,
    LinkKind, RbAllocation, RoundRobin, ServingPath, TrafficQueue,
};
use crate::ncr::SideControlInfo;
use crate::phy::{
    full_load_ncr_gain_db, per_re_power_dbm, select_mcs, tb_bits, GainTable, NcrSlot, PowerBudget, SinrSample, SlotState,
    Transmission,
};
use crate::rng::{keyed, pair_key, Purpose, SimRng};
use crate::scenario::{segment_blocked, spawn_ues, step_ue, Heading, Point2, Point3, UeMobilityState};
use crate::units::{db_to_lin, lin_to_db, noise_power_dbm};
use crate::{ArrayConfig, BeamCodebook, Cplx, McsTable, NcrState};

/// One scheduled allocation, kept for the allocation trace and debug checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocRecord {
    pub slot: u64,
    pub gnb: usize,
    pub ue: usize,
    pub rbs: Range<usize>,
    pub direction: Direction,
    pub path: ServingPath,
}

impl AllocRecord {
    fn csv_row(&self) -> String {
        let path = match self.path {
            ServingPath::Direct => "direct".to_string(),
            ServingPath::ViaNcr(n) => format!("ncr{n}"),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.slot,
            self.gnb,
            self.ue,
            self.rbs.start,
            self.rbs.len(),
            self.direction.as_str(),
            path
        )
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsStore,
    pub link_trace: Option<Vec<String>>,
    pub alloc_log: Option<Vec<AllocRecord>>,
    /// Slots in which some gNB assigned an RB twice (debug checks only).
    pub collisions: u64,
}

impl RunOutput {
    pub fn link_trace_csv(&self) -> Option<String> {
        self.link_trace.as_ref().map(|rows| {
            let mut s = String::from(LINK_TRACE_HEADER);
            s.push('\n');
            for r in rows {
                s.push_str(r);
                s.push('\n');
            }
            s
        })
    }

    pub fn alloc_trace_csv(&self) -> Option<String> {
        self.alloc_log.as_ref().map(|rows| {
            let mut s = String::from(ALLOC_HEADER);
            s.push('\n');
            for r in rows {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Backhaul {
    gnb_beam: usize,
    ncr_beam: usize,
    gain_lin: f64,
}

/// Latest sweep outcome for one UE.
#[derive(Debug, Clone, Default)]
struct UeBeams {
    /// Best gNB beam towards the UE, per gNB.
    direct_beam: Vec<usize>,
    /// Wideband gain of the serving NCR's access beams (empty when direct).
    access_gains: Vec<f64>,
    /// Direct UEs only: per NCR of the serving gNB, the gain from that NCR's
    /// backhaul panel into the gNB beam pointed at the UE.
    ncr_leak: Vec<f64>,
}

/// How far below its own best access beam a UE may be served by the beam
/// chosen for its NCR in a slot.
const BEAM_GROUP_TOLERANCE_DB: f64 = 3.0;

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
        .0
}

/// Number of worker threads: `NCR_SIM_THREADS` when set to a positive
/// integer, otherwise the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("NCR_SIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub struct Simulator {
    cfg: RunConfig,
    slot: u64,
    gnb_count: usize,
    ncr_count: usize,
    ue_count: usize,
    codebook: BeamCodebook,
    mcs: McsTable,
    pool: rayon::ThreadPool,

    ues: Vec<UeMobilityState>,
    mobility_rng: Vec<SimRng>,
    anchor: Vec<(Point2, Heading)>,
    gnb_fields: Vec<ShadowingField>,
    ncr_fields: Vec<ShadowingField>,
    links: Vec<LinkState>,
    coef_cache: Vec<[Cplx; PATHS]>,
    coef_stamp: Vec<u64>,

    ncrs: Vec<NcrState>,
    backhaul: Vec<Backhaul>,
    beams: Vec<UeBeams>,
    assoc: Vec<Association>,
    rr: Vec<[RoundRobin; 2]>,
    queue: TrafficQueue,

    power: PowerBudget,
    gnb_per_re_dbm: f64,
    carrier_noise_dbm: f64,

    metrics: MetricsStore,
    carry: Vec<[u64; 2]>,
    link_trace: Option<Vec<String>>,
    alloc_log: Option<Vec<AllocRecord>>,
    collisions: u64,
    last_samples: Vec<SinrSample>,
    last_ncr_stage: Vec<Option<(f64, f64)>>,
}

impl Simulator {
    pub fn new(cfg: RunConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let sc = &cfg.scenario;
        let radio = sc.radio;
        let seed = cfg.seed;
        let (b, n, u) = (sc.gnb_count(), sc.ncr_count(), sc.ue_count);

        let gnb_arrays: Vec<ArrayConfig> = sc
            .gnb_placements
            .iter()
            .map(|g| ArrayConfig::panel(g.azimuth, radio.gnb_tilt_deg, radio.panel_element_gain_dbi))
            .collect();
        let mut ncr_access_arrays = Vec::with_capacity(n);
        let mut ncr_backhaul_arrays = Vec::with_capacity(n);
        for p in sc.ncr_placements.iter().take(n) {
            let g = &sc.gnb_placements[p.controlling_gnb];
            ncr_access_arrays.push(ArrayConfig::panel(p.ue_side_azimuth, radio.ncr_tilt_deg, radio.panel_element_gain_dbi));
            // The gNB-side panel looks up at its donor.
            let up = (g.height_m - p.height_m).atan2(g.position.dist(p.position)).to_degrees();
            ncr_backhaul_arrays.push(ArrayConfig::panel(p.gnb_side_azimuth, -up, radio.panel_element_gain_dbi));
        }
        let codebook = build_dft_codebook(&gnb_arrays[0]);

        let ues = spawn_ues(sc, &mut keyed(seed, Purpose::Spawn, 0, 0));
        let mobility_rng = (0..u).map(|i| keyed(seed, Purpose::Mobility, i as u64, 0)).collect();
        let anchor = ues.iter().map(|s| (s.position, s.heading)).collect();

        let gnb_fields = (0..b)
            .map(|g| {
                ShadowingField::for_layout(
                    crate::channel::Profile::UMa,
                    &sc.layout,
                    &mut keyed(seed, Purpose::Shadowing, g as u64, 0),
                )
            })
            .collect();
        let ncr_fields = (0..n)
            .map(|i| {
                ShadowingField::for_layout(
                    crate::channel::Profile::UMi,
                    &sc.layout,
                    &mut keyed(seed, Purpose::Shadowing, 1000 + i as u64, 0),
                )
            })
            .collect();

        let ue_end = |i: usize| Endpoint {
            kind: NodeKind::Ue,
            id: i,
            array: ArrayConfig::omni(),
        };
        let mut links = Vec::with_capacity(b * u + n * u + b * n);
        for g in 0..b {
            for i in 0..u {
                let a = Endpoint {
                    kind: NodeKind::Gnb,
                    id: g,
                    array: gnb_arrays[g],
                };
                links.push(LinkState::new(seed, pair_key(1, g as u64, i as u64), a, ue_end(i))?);
            }
        }
        for r in 0..n {
            for i in 0..u {
                let a = Endpoint {
                    kind: NodeKind::Ncr,
                    id: r,
                    array: ncr_access_arrays[r],
                };
                links.push(LinkState::new(seed, pair_key(2, r as u64, i as u64), a, ue_end(i))?);
            }
        }
        for g in 0..b {
            for r in 0..n {
                let a = Endpoint {
                    kind: NodeKind::Gnb,
                    id: g,
                    array: gnb_arrays[g],
                };
                let bb = Endpoint {
                    kind: NodeKind::Ncr,
                    id: r,
                    array: ncr_backhaul_arrays[r],
                };
                links.push(LinkState::new(seed, pair_key(3, g as u64, r as u64), a, bb)?);
            }
        }
        let link_count = links.len();

        let beam_count = codebook.len();
        let mut ncrs: Vec<NcrState> = (0..n)
            .map(|i| NcrState::new(i, radio.ncr_gain_db, radio.ncr_max_output_dbm, beam_count))
            .collect();
        if cfg.params.schedule_mode == ScheduleMode::Static {
            for (&i, sci) in &cfg.params.static_sci {
                if let Some(state) = ncrs.get_mut(i) {
                    state.set_sci(sci.clone())?;
                }
            }
        }

        let k = sc.rb_count;
        let rb_noise = noise_power_dbm(sc.rb_bandwidth_hz(), radio.noise_figure_db);
        let power = PowerBudget::from_dbm(radio.gnb_tx_dbm, radio.ue_tx_dbm, rb_noise, rb_noise, k);

        let threads = worker_threads();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SimError::Io(std::io::Error::other(e.to_string())))?;

        let meta = RunMetadata {
            scenario: sc.scenario_id.to_string(),
            ncr_enabled: sc.ncr_count() > 0,
            schedule_mode: format!("{:?}", cfg.params.schedule_mode).to_lowercase(),
            seed,
            total_slots: cfg.total_slots,
            warmup_slots: cfg.warmup_slots,
            ue_count: u,
            slot_s: sc.slot_s,
            config_hash: cfg.config_hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let queue = TrafficQueue::new(u, cfg.params.packet_bits, cfg.params.inter_arrival_slots);
        let keep_allocs = cfg.trace.alloc || cfg.params.debug_checks;

        Ok(Self {
            slot: 0,
            gnb_count: b,
            ncr_count: n,
            ue_count: u,
            mcs: McsTable::default(),
            pool,
            ues,
            mobility_rng,
            anchor,
            gnb_fields,
            ncr_fields,
            coef_cache: vec![[Cplx::new(0.0, 0.0); PATHS]; link_count],
            coef_stamp: vec![u64::MAX; link_count],
            links,
            ncrs,
            backhaul: vec![
                Backhaul {
                    gnb_beam: 0,
                    ncr_beam: 0,
                    gain_lin: 0.0,
                };
                n
            ],
            beams: vec![UeBeams::default(); u],
            assoc: Vec::new(),
            rr: (0..b).map(|_| [RoundRobin::new(u), RoundRobin::new(u)]).collect(),
            queue,
            power,
            gnb_per_re_dbm: per_re_power_dbm(radio.gnb_tx_dbm, sc.res_per_symbol()),
            carrier_noise_dbm: noise_power_dbm(sc.carrier_bandwidth_hz(), radio.noise_figure_db),
            metrics: MetricsStore::new(meta),
            carry: vec![[0; 2]; u],
            link_trace: cfg.trace.links.then(Vec::new),
            alloc_log: keep_allocs.then(Vec::new),
            collisions: 0,
            last_samples: Vec::new(),
            last_ncr_stage: Vec::new(),
            codebook,
            cfg,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// Next slot to be simulated.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn is_done(&self) -> bool {
        self.slot >= self.cfg.total_slots
    }

    pub fn ue_states(&self) -> &[UeMobilityState] {
        &self.ues
    }

    pub fn associations(&self) -> &[Association] {
        &self.assoc
    }

    pub fn metrics(&self) -> &MetricsStore {
        &self.metrics
    }

    pub fn ncr_states(&self) -> &[NcrState] {
        &self.ncrs
    }

    /// SINR samples of the last simulated slot, with their components.
    pub fn last_samples(&self) -> &[SinrSample] {
        &self.last_samples
    }

    /// `(effective gain dB, output dBm)` of each NCR in the last slot, `None` when OFF.
    pub fn last_ncr_stage(&self) -> &[Option<(f64, f64)>] {
        &self.last_ncr_stage
    }

    fn gnb_ue(&self, g: usize, u: usize) -> usize {
        g * self.ue_count + u
    }

    fn ncr_ue(&self, n: usize, u: usize) -> usize {
        (self.gnb_count + n) * self.ue_count + u
    }

    fn gnb_ncr(&self, g: usize, n: usize) -> usize {
        (self.gnb_count + self.ncr_count) * self.ue_count + g * self.ncr_count + n
    }

    fn time(&self) -> f64 {
        self.slot as f64 * self.cfg.scenario.slot_s
    }

    fn refresh_ue_links(&mut self, u: usize, t: f64) {
        let sc = &self.cfg.scenario;
        let ue = self.ues[u];
        let pu = ue.position.with_height(ue.height_m);
        let motion = Some((ue.heading.azimuth(), ue.speed_mps));
        for g in 0..self.gnb_count {
            let p = &sc.gnb_placements[g];
            let pa = p.position.with_height(p.height_m);
            let los = !segment_blocked(pa, pu, &sc.layout);
            let geo = Geometry {
                a: pa,
                b: pu,
                los,
                shadowing_db: sample_shadowing(&self.gnb_fields[g], ue.position, los),
                b_motion: motion,
                time_s: t,
            };
            let i = self.gnb_ue(g, u);
            self.links[i].generate_paths(&geo, &self.cfg.params.channel, &self.codebook);
        }
        for n in 0..self.ncr_count {
            let p = &sc.ncr_placements[n];
            let pa = p.position.with_height(p.height_m);
            let los = !segment_blocked(pa, pu, &sc.layout);
            let geo = Geometry {
                a: pa,
                b: pu,
                los,
                shadowing_db: sample_shadowing(&self.ncr_fields[n], ue.position, los),
                b_motion: motion,
                time_s: t,
            };
            let i = self.ncr_ue(n, u);
            self.links[i].generate_paths(&geo, &self.cfg.params.channel, &self.codebook);
        }
        self.anchor[u] = (ue.position, ue.heading);
    }

    fn init_backhaul_links(&mut self, t: f64) {
        let sc = &self.cfg.scenario;
        for g in 0..self.gnb_count {
            let gp = &sc.gnb_placements[g];
            let pa: Point3 = gp.position.with_height(gp.height_m);
            for n in 0..self.ncr_count {
                let np = &sc.ncr_placements[n];
                let pb = np.position.with_height(np.height_m);
                let los = !segment_blocked(pa, pb, &sc.layout);
                let geo = Geometry {
                    a: pa,
                    b: pb,
                    los,
                    shadowing_db: sample_shadowing(&self.gnb_fields[g], np.position, los),
                    b_motion: None,
                    time_s: t,
                };
                let i = self.gnb_ncr(g, n);
                self.links[i].generate_paths(&geo, &self.cfg.params.channel, &self.codebook);
            }
        }
    }

    fn sweep_backhaul(&mut self, t: f64) {
        for n in 0..self.ncr_count {
            let g = self.cfg.scenario.ncr_placements[n].controlling_gnb;
            let r = run_beam_sweep(LinkKind::Backhaul, &self.links[self.gnb_ncr(g, n)], t);
            self.backhaul[n] = Backhaul {
                gnb_beam: r.tx_beam,
                ncr_beam: r.rx_beam.unwrap_or(0),
                gain_lin: r.gain_lin,
            };
            self.ncrs[n].backhaul_beam = self.backhaul[n].ncr_beam;
        }
    }

    /// Whether `n` may carry traffic under the configured schedule mode.
    fn ncr_offered(&self, n: usize) -> bool {
        match self.cfg.params.schedule_mode {
            ScheduleMode::Dynamic => true,
            ScheduleMode::Static => !self.ncrs[n].sci().entries.is_empty(),
            ScheduleMode::Off => false,
        }
    }

    fn sweep_access_and_associate(&mut self, t: f64) {
        let radio = self.cfg.scenario.radio;
        let outage = self.cfg.params.outage_rsrp_dbm;
        let fl_gain: Vec<f64> = (0..self.ncr_count)
            .map(|n| {
                full_load_ncr_gain_db(
                    radio.gnb_tx_dbm,
                    lin_to_db(self.backhaul[n].gain_lin),
                    self.carrier_noise_dbm,
                    radio.ncr_gain_db,
                    radio.ncr_max_output_dbm,
                )
            })
            .collect();
        let mut assoc = Vec::with_capacity(self.ue_count);
        let mut beams = Vec::with_capacity(self.ue_count);
        let mut cands = Vec::with_capacity(self.gnb_count + self.ncr_count);
        let mut access: Vec<Vec<f64>> = vec![Vec::new(); self.ncr_count];
        for u in 0..self.ue_count {
            cands.clear();
            let mut direct_beam = Vec::with_capacity(self.gnb_count);
            for g in 0..self.gnb_count {
                let r = run_beam_sweep(LinkKind::Direct, &self.links[self.gnb_ue(g, u)], t);
                direct_beam.push(r.tx_beam);
                cands.push(Candidate {
                    gnb: g,
                    path: ServingPath::Direct,
                    rsrp_dbm: self.gnb_per_re_dbm + r.gain_db(),
                });
            }
            for (n, gains) in access.iter_mut().enumerate() {
                gains.clear();
                if !self.ncr_offered(n) {
                    continue;
                }
                let link = &self.links[self.ncr_ue(n, u)];
                let c = link.coefficients(t);
                gains.extend((0..link.beams_a()).map(|b| link.wideband_gain(&link.beam_vector(&c, b, 0))));
                let best = gains.iter().copied().fold(0.0, f64::max);
                cands.push(Candidate {
                    gnb: self.cfg.scenario.ncr_placements[n].controlling_gnb,
                    path: ServingPath::ViaNcr(n),
                    rsrp_dbm: self.gnb_per_re_dbm + lin_to_db(self.backhaul[n].gain_lin) + fl_gain[n] + lin_to_db(best),
                });
            }
            let a = associate(u, &cands, self.slot, outage);
            let access_gains = match a.path {
                ServingPath::ViaNcr(n) => std::mem::take(&mut access[n]),
                ServingPath::Direct => Vec::new(),
            };
            let ncr_leak = match a.path {
                ServingPath::Direct => (0..self.ncr_count)
                    .map(|n| {
                        if self.cfg.scenario.ncr_placements[n].controlling_gnb != a.serving_gnb {
                            return 0.0;
                        }
                        let link = &self.links[self.gnb_ncr(a.serving_gnb, n)];
                        let c = link.coefficients(t);
                        link.wideband_gain(&link.beam_vector(&c, direct_beam[a.serving_gnb], self.backhaul[n].ncr_beam))
                    })
                    .collect(),
                ServingPath::ViaNcr(_) => Vec::new(),
            };
            beams.push(UeBeams {
                direct_beam,
                access_gains,
                ncr_leak,
            });
            assoc.push(a);
        }
        self.assoc = assoc;
        self.beams = beams;
    }

    /// Greedy, in priority order, co-scheduling filter for gNB `g`:
    /// - an NCR has one access beam per slot, set by its longest-waiting UE;
    ///   other via-NCR UEs join only if that beam is within
    ///   `BEAM_GROUP_TOLERANCE_DB` of their own best;
    /// - in UL an active NCR re-emits its amplified receiver noise into the
    ///   gNB, so a direct UE whose receive beam would hear that noise above
    ///   the thermal floor does not share a slot with it.
    fn beam_groups(&self, g: usize, dir: Direction, order: &[usize]) -> Vec<usize> {
        let floor = db_to_lin(-BEAM_GROUP_TOLERANCE_DB);
        let radio = self.cfg.scenario.radio;
        let leak_limit = self.power.rx_noise_mw / (self.power.ncr_noise_mw * db_to_lin(radio.ncr_gain_db));
        let conflicts = |u: usize, n: usize| dir == Direction::Ul && self.beams[u].ncr_leak.get(n).is_some_and(|&l| l > leak_limit);
        let mut lead: Vec<Option<usize>> = vec![None; self.ncr_count];
        let mut direct: Vec<usize> = Vec::new();
        let mut out = Vec::new();
        for &u in order {
            match self.assoc[u].path {
                ServingPath::Direct => {
                    let active = lead.iter().enumerate().filter(|(_, b)| b.is_some()).map(|(n, _)| n);
                    if active.clone().all(|n| !conflicts(u, n)) {
                        direct.push(u);
                        out.push(u);
                    }
                }
                ServingPath::ViaNcr(n) => {
                    debug_assert_eq!(self.cfg.scenario.ncr_placements[n].controlling_gnb, g);
                    let gains = &self.beams[u].access_gains;
                    let best = gains.iter().copied().fold(0.0, f64::max);
                    let beam = match lead[n] {
                        Some(b) => b,
                        None if direct.iter().any(|&d| conflicts(d, n)) => continue,
                        None => *lead[n].insert(argmax(gains)),
                    };
                    if gains.get(beam).is_some_and(|&x| x >= best * floor) {
                        out.push(u);
                    }
                }
            }
        }
        out
    }

    fn ensure_coefficients(&mut self, idx: usize, t: f64) {
        if self.coef_stamp[idx] != self.slot {
            self.coef_cache[idx] = self.links[idx].coefficients(t);
            self.coef_stamp[idx] = self.slot;
        }
    }

    /// Simulates one slot.
    pub fn step(&mut self) -> Result<(), SimError> {
        let s = self.slot;
        if s >= self.cfg.total_slots {
            return Ok(());
        }
        self.step_inner().map_err(|e| e.at_slot(s))?;
        self.slot += 1;
        Ok(())
    }

    fn step_inner(&mut self) -> Result<(), SimError> {
        let s = self.slot;
        let t = self.time();
        let sc_slot = self.cfg.scenario.slot_s;

        // Mobility.
        if s > 0 {
            let layout = &self.cfg.scenario.layout;
            for (ue, rng) in self.ues.iter_mut().zip(self.mobility_rng.iter_mut()) {
                *ue = step_ue(ue, sc_slot, layout, rng);
            }
        }

        // Large-scale refresh.
        if s == 0 {
            self.init_backhaul_links(t);
        }
        let thr = self.cfg.params.refresh_distance_m;
        for u in 0..self.ue_count {
            let (p, h) = self.anchor[u];
            let ue = self.ues[u];
            if s == 0 || ue.heading != h || ue.position.dist(p) >= thr {
                self.refresh_ue_links(u, t);
            }
        }

        // Sweeps and association.
        let periods = self.cfg.params.sweep;
        if is_sweep_slot(LinkKind::Backhaul, s, &periods) {
            self.sweep_backhaul(t);
        }
        if s == 0 || is_sweep_slot(LinkKind::Access, s, &periods) {
            self.sweep_access_and_associate(t);
            if let Some(trace) = self.link_trace.as_mut() {
                for (i, link) in self.links.iter().enumerate() {
                    trace.push(trace_row(s, i, link, t));
                }
            }
        }

        // Traffic.
        let warmup = self.cfg.warmup_slots;
        if s == warmup {
            for u in 0..self.ue_count {
                for d in Direction::BOTH {
                    self.carry[u][d.index()] = self.queue.backlog(u, d);
                }
            }
        }
        self.queue.step_traffic(s);

        // Scheduling.
        let dir = tdd_direction(s);
        let k = self.cfg.scenario.rb_count;
        let max_ues = self.cfg.params.max_ues_per_slot;
        let static_mode = self.cfg.params.schedule_mode == ScheduleMode::Static;
        let mut allocs: Vec<Vec<RbAllocation>> = Vec::with_capacity(self.gnb_count);
        for g in 0..self.gnb_count {
            let eligible: Vec<usize> = (0..self.ue_count)
                .filter(|&u| {
                    let a = &self.assoc[u];
                    a.serving_gnb == g
                        && !a.outage
                        && self.queue.backlog(u, dir) > 0
                        && match a.path {
                            ServingPath::ViaNcr(n) if static_mode => self.ncrs[n].is_on(s),
                            _ => true,
                        }
                })
                .collect();
            let eligible = if self.cfg.params.schedule_mode == ScheduleMode::Dynamic {
                self.beam_groups(g, dir, &self.rr[g][dir.index()].priority_order(&eligible))
            } else {
                eligible
            };
            let list = self.rr[g][dir.index()].schedule(&eligible, k, max_ues, s);
            if self.cfg.params.debug_checks && !is_orthogonal(&list, k) {
                self.collisions += 1;
            }
            allocs.push(list);
        }

        // Forwarding schedule for this slot.
        if self.cfg.params.schedule_mode == ScheduleMode::Dynamic {
            for n in 0..self.ncr_count {
                let g = self.cfg.scenario.ncr_placements[n].controlling_gnb;
                let rows: Vec<&[f64]> = allocs[g]
                    .iter()
                    .filter(|a| self.assoc[a.ue].path == ServingPath::ViaNcr(n))
                    .map(|a| self.beams[a.ue].access_gains.as_slice())
                    .filter(|g| !g.is_empty())
                    .collect();
                let sci = match max_min_beam(&rows) {
                    Some(beam) => SideControlInfo::dynamic_once(s, beam),
                    None => SideControlInfo::empty(),
                };
                self.ncrs[n].set_sci(sci)?;
            }
        }

        // Frozen slot state.
        let ncr_slots: Vec<NcrSlot> = (0..self.ncr_count)
            .map(|n| {
                let g = self.cfg.scenario.ncr_placements[n].controlling_gnb;
                NcrSlot {
                    access_beam: self.ncrs[n].access_beam(s),
                    ..NcrSlot::off(g, self.backhaul[n].ncr_beam)
                }
            })
            .collect();
        let mut state = SlotState::new(s, dir, k, self.gnb_count, ncr_slots, self.power);
        for (g, list) in allocs.iter().enumerate() {
            for a in list {
                let path = self.assoc[a.ue].path;
                let gnb_beam = match path {
                    ServingPath::Direct => self.beams[a.ue].direct_beam[g],
                    ServingPath::ViaNcr(n) => self.backhaul[n].gnb_beam,
                };
                state.transmissions[g].push(Transmission {
                    gnb: g,
                    ue: a.ue,
                    rbs: a.rbs.clone(),
                    gnb_beam,
                    path,
                });
                if let Some(log) = self.alloc_log.as_mut() {
                    log.push(AllocRecord {
                        slot: s,
                        gnb: g,
                        ue: a.ue,
                        rbs: a.rbs.clone(),
                        direction: dir,
                        path,
                    });
                }
            }
        }

        // Small-scale coefficients of every link this slot can touch.
        let scheduled: Vec<usize> = allocs.iter().flatten().map(|a| a.ue).collect();
        for &u in &scheduled {
            for g in 0..self.gnb_count {
                self.ensure_coefficients(self.gnb_ue(g, u), t);
            }
            for n in 0..self.ncr_count {
                self.ensure_coefficients(self.ncr_ue(n, u), t);
            }
        }
        for g in 0..self.gnb_count {
            for n in 0..self.ncr_count {
                self.ensure_coefficients(self.gnb_ncr(g, n), t);
            }
        }

        let gains = CachedGains {
            links: &self.links,
            coefs: &self.coef_cache,
            stamp: &self.coef_stamp,
            slot: s,
            time_s: t,
            gnb_count: self.gnb_count,
            ncr_count: self.ncr_count,
            ue_count: self.ue_count,
        };
        state.compute_ncr_inputs(&gains);
        let radio = self.cfg.scenario.radio;
        self.last_ncr_stage = state.apply_power_stage(radio.ncr_gain_db, radio.ncr_max_output_dbm);

        let work: Vec<&Transmission> = state.transmissions.iter().flatten().collect();
        let samples: Vec<SinrSample> = self
            .pool
            .install(|| work.par_iter().map(|t| state.sinr(t, &gains)).collect());

        // Link adaptation, delivery and recording.
        let record = s >= warmup;
        for smp in &samples {
            let d = dir.index();
            let delivered = match select_mcs(&self.mcs, smp.sinr_db) {
                Some(m) => {
                    if record {
                        self.metrics.mcs_usage[d][m] += 1;
                    }
                    let cap = tb_bits(&self.mcs, m, smp.rb_set.len());
                    self.queue.deliver(smp.ue, dir, cap)
                }
                None => {
                    if record {
                        self.metrics.outage_allocations[d] += 1;
                    }
                    0
                }
            };
            self.metrics.delivered_bits[smp.ue][d] += delivered;
            if record {
                let carry = &mut self.carry[smp.ue][d];
                let drained = delivered.min(*carry);
                *carry -= drained;
                self.metrics.counted_bits[smp.ue][d] += delivered - drained;
                self.metrics.samples.push(SampleRecord {
                    slot: s,
                    direction: dir,
                    link_type: smp.link_type,
                    ue: smp.ue as u32,
                    serving_gnb: smp.serving_gnb as u32,
                    serving_ncr: smp.serving_ncr.map(|n| n as u32),
                    sinr_db: smp.sinr_db,
                });
            }
        }
        self.last_samples = samples;
        Ok(())
    }

    /// Runs the remaining slots.
    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> RunOutput {
        for u in 0..self.ue_count {
            for d in Direction::BOTH {
                self.metrics.arrived_bits[u][d.index()] = self.queue.arrived(u, d);
            }
        }
        RunOutput {
            metrics: self.metrics,
            link_trace: self.link_trace,
            alloc_log: self.alloc_log,
            collisions: self.collisions,
        }
    }
}

/// Runs a configuration to completion.
pub fn run(cfg: RunConfig) -> Result<RunOutput, SimError> {
    let mut sim = Simulator::new(cfg)?;
    sim.run_to_end()?;
    Ok(sim.finish())
}

/// Gain lookups backed by this slot's path coefficients.
struct CachedGains<'a> {
    links: &'a [LinkState],
    coefs: &'a [[Cplx; PATHS]],
    stamp: &'a [u64],
    slot: u64,
    time_s: f64,
    gnb_count: usize,
    ncr_count: usize,
    ue_count: usize,
}

impl CachedGains<'_> {
    fn fill(&self, idx: usize, beam_a: usize, beam_b: usize, rbs: Range<usize>, out: &mut [f64]) {
        let link = &self.links[idx];
        let fresh;
        let c = if self.stamp[idx] == self.slot {
            &self.coefs[idx]
        } else {
            fresh = link.coefficients(self.time_s);
            &fresh
        };
        let x = link.beam_vector(c, beam_a, beam_b);
        for (o, k) in out.iter_mut().zip(rbs) {
            *o = link.rb_gain(&x, k);
        }
    }
}

impl GainTable for CachedGains<'_> {
    fn gnb_ue(&self, gnb: usize, ue: usize, gnb_beam: usize, rbs: Range<usize>, out: &mut [f64]) {
        self.fill(gnb * self.ue_count + ue, gnb_beam, 0, rbs, out);
    }

    fn ncr_ue(&self, ncr: usize, ue: usize, access_beam: usize, rbs: Range<usize>, out: &mut [f64]) {
        self.fill((self.gnb_count + ncr) * self.ue_count + ue, access_beam, 0, rbs, out);
    }

    fn gnb_ncr(&self, gnb: usize, ncr: usize, gnb_beam: usize, backhaul_beam: usize, rbs: Range<usize>, out: &mut [f64]) {
        let idx = (self.gnb_count + self.ncr_count) * self.ue_count + gnb * self.ncr_count + ncr;
        self.fill(idx, gnb_beam, backhaul_beam, rbs, out);
    }
}
