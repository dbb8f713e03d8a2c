use std::f64::consts::{PI, TAU};

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::pathloss::{assign_profile, pathloss_db, NodeKind, Profile};
use crate::antenna::{array_response, ElementPattern};
use crate::error::SimError;
use crate::rng::{keyed, Purpose};
use crate::scenario::{Point3, ScenarioConfig};
use crate::units::{db_to_lin, lin_to_db, SPEED_OF_LIGHT_MPS};
use crate::{ArrayConfig, BeamCodebook, Cplx};

/// Number of propagation paths per link.
pub const PATHS: usize = 6;

const ZERO: Cplx = Complex { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub rician_k_db: f64,
    /// Largest scatter-path excess delay on LOS links.
    pub max_delay_s: f64,
    pub los_azimuth_spread_deg: f64,
    pub nlos_azimuth_spread_deg: f64,
    pub elevation_spread_deg: f64,
    pub carrier_hz: f64,
    pub rb_count: usize,
    pub rb_bandwidth_hz: f64,
}

impl ChannelParams {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        Self {
            rician_k_db: 10.0,
            max_delay_s: 100e-9,
            los_azimuth_spread_deg: 15.0,
            nlos_azimuth_spread_deg: 30.0,
            elevation_spread_deg: 5.0,
            carrier_hz: cfg.carrier_hz,
            rb_count: cfg.rb_count,
            rb_bandwidth_hz: cfg.rb_bandwidth_hz(),
        }
    }

    pub fn los_power_fraction(&self) -> f64 {
        if self.rician_k_db.is_infinite() && self.rician_k_db > 0.0 {
            return 1.0;
        }
        let k = db_to_lin(self.rician_k_db);
        k / (k + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub kind: NodeKind,
    pub id: usize,
    pub array: ArrayConfig,
}

/// Placement of both ends at a large-scale update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub a: Point3,
    pub b: Point3,
    pub los: bool,
    pub shadowing_db: f64,
    /// Heading azimuth and speed of end `b`; infrastructure is static.
    pub b_motion: Option<(f64, f64)>,
    pub time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Path {
    /// Fraction of the link power carried by this path.
    pub power: f64,
    /// Global (azimuth, elevation) leaving end `a`.
    pub departure: (f64, f64),
    /// Global (azimuth, elevation) of arrival at end `b`, pointing back
    /// towards where the wave comes from.
    pub arrival: (f64, f64),
    pub delay_s: f64,
    pub doppler_hz: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Draw {
    weight: f64,
    phase: f64,
    dep_az: f64,
    dep_el: f64,
    arr_az: f64,
    arr_el: f64,
    delay: f64,
}

/// State of one undirected link. Both link directions read the same object,
/// so uplink and downlink see identical large- and small-scale terms.
///
/// The beamformed gain of path `l` is `c_l(t) · P_a[beam_a, l] · P_b[beam_b, l]`,
/// where `P` holds the codebook projections times the element amplitude and
/// `c_l(t)` carries path power and the Doppler rotation. RB `k` multiplies
/// path `l` by a unit frequency factor `f[k, l]`.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub a: Endpoint,
    pub b: Endpoint,
    pub profile: Profile,
    pub los: bool,
    pub distance_m: f64,
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub paths: [Path; PATHS],
    pub los_epoch: u64,
    seed: u64,
    key: u64,
    ready: bool,
    draws: [Draw; PATHS],
    beams_a: usize,
    beams_b: usize,
    proj_a: Vec<Cplx>,
    proj_b: Vec<Cplx>,
    freq: Vec<Cplx>,
    wideband: [[Cplx; PATHS]; PATHS],
    ref_time_s: f64,
    ref_phase: [f64; PATHS],
    scale: f64,
}

impl LinkState {
    pub fn new(seed: u64, key: u64, a: Endpoint, b: Endpoint) -> Result<Self, SimError> {
        let profile = assign_profile(a.kind, b.kind)?;
        Ok(Self {
            a,
            b,
            profile,
            los: false,
            distance_m: 0.0,
            pathloss_db: 0.0,
            shadowing_db: 0.0,
            paths: [Path::default(); PATHS],
            los_epoch: 0,
            seed,
            key,
            ready: false,
            draws: [Draw::default(); PATHS],
            beams_a: 0,
            beams_b: 0,
            proj_a: Vec::new(),
            proj_b: Vec::new(),
            freq: Vec::new(),
            wideband: [[ZERO; PATHS]; PATHS],
            ref_time_s: 0.0,
            ref_phase: [0.0; PATHS],
            scale: 0.0,
        })
    }

    pub fn beams_a(&self) -> usize {
        self.beams_a
    }

    pub fn beams_b(&self) -> usize {
        self.beams_b
    }

    pub fn rb_count(&self) -> usize {
        self.freq.len() / PATHS
    }

    /// Linear large-scale gain `10^{-(PL+SF)/10}`.
    pub fn large_scale_gain(&self) -> f64 {
        self.scale
    }

    fn draw(&mut self) {
        let mut rng = keyed(self.seed, Purpose::Paths, self.key, self.los_epoch);
        let b_is_ue = self.b.kind == NodeKind::Ue;
        for d in self.draws.iter_mut() {
            let u: f64 = rng.random();
            d.weight = -(1.0 - u).ln();
            d.phase = rng.random::<f64>() * TAU;
            d.dep_az = rng.sample(StandardNormal);
            d.dep_el = rng.sample(StandardNormal);
            d.arr_az = if b_is_ue {
                rng.random::<f64>() * TAU - PI
            } else {
                rng.sample(StandardNormal)
            };
            d.arr_el = rng.sample(StandardNormal);
            d.delay = rng.random();
        }
    }

    fn draw_frequency(&mut self, params: &ChannelParams) {
        let k_count = params.rb_count;
        self.freq = vec![ZERO; k_count * PATHS];
        if self.los {
            for k in 0..k_count {
                for l in 0..PATHS {
                    let phase = -TAU * self.paths[l].delay_s * k as f64 * params.rb_bandwidth_hz;
                    self.freq[k * PATHS + l] = Cplx::from_polar(1.0, phase);
                }
            }
        } else {
            let mut rng = keyed(self.seed, Purpose::Phases, self.key, self.los_epoch);
            for f in self.freq.iter_mut() {
                *f = Cplx::from_polar(1.0, rng.random::<f64>() * TAU);
            }
        }
        let kf = k_count.max(1) as f64;
        for l in 0..PATHS {
            for m in 0..PATHS {
                let mut acc = ZERO;
                for k in 0..k_count {
                    acc += self.freq[k * PATHS + l].conj() * self.freq[k * PATHS + m];
                }
                self.wideband[l][m] = acc / kf;
            }
        }
    }

    /// Large-scale update plus path regeneration. Random path parameters are
    /// drawn once per LOS epoch and re-anchored to the current geometry, so
    /// the channel evolves smoothly while the LOS state holds.
    pub fn generate_paths(&mut self, geo: &Geometry, params: &ChannelParams, codebook: &BeamCodebook) {
        let new_epoch = !self.ready || geo.los != self.los;
        if self.ready && new_epoch {
            self.los_epoch += 1;
        }
        if self.ready && !new_epoch {
            // Carry the Doppler phase forward to keep the channel continuous.
            for l in 0..PATHS {
                let adv = TAU * self.paths[l].doppler_hz * (geo.time_s - self.ref_time_s);
                self.ref_phase[l] = (self.ref_phase[l] + adv).rem_euclid(TAU);
            }
        }
        self.los = geo.los;
        if new_epoch {
            self.draw();
            for l in 0..PATHS {
                self.ref_phase[l] = if self.los && l == 0 { 0.0 } else { self.draws[l].phase };
            }
        }
        self.ref_time_s = geo.time_s;

        let d3 = geo.a.dist(geo.b);
        self.distance_m = d3;
        let fc_ghz = params.carrier_hz / 1e9;
        let low_height = geo.a.z.min(geo.b.z);
        self.pathloss_db = pathloss_db(self.profile, self.los, d3, fc_ghz, low_height);
        self.shadowing_db = geo.shadowing_db;
        self.scale = db_to_lin(-(self.pathloss_db + self.shadowing_db));

        let (dx, dy, dz) = (geo.b.x - geo.a.x, geo.b.y - geo.a.y, geo.b.z - geo.a.z);
        let az_ab = dy.atan2(dx);
        let el_ab = dz.atan2(dx.hypot(dy));
        let az_ba = az_ab + PI;
        let el_ba = -el_ab;

        let los_frac = if self.los { params.los_power_fraction() } else { 0.0 };
        let first_scatter = usize::from(self.los);
        let wsum: f64 = self.draws[first_scatter..].iter().map(|d| d.weight).sum();
        let az_spread = if self.los {
            params.los_azimuth_spread_deg
        } else {
            params.nlos_azimuth_spread_deg
        }
        .to_radians();
        let el_spread = params.elevation_spread_deg.to_radians();
        let b_is_ue = self.b.kind == NodeKind::Ue;
        let wavelength = SPEED_OF_LIGHT_MPS / params.carrier_hz;
        for l in 0..PATHS {
            let d = self.draws[l];
            let mut p = if self.los && l == 0 {
                Path {
                    power: los_frac,
                    departure: (az_ab, el_ab),
                    arrival: (az_ba, el_ba),
                    delay_s: 0.0,
                    doppler_hz: 0.0,
                }
            } else {
                let arrival = if b_is_ue {
                    (d.arr_az, d.arr_el * el_spread)
                } else {
                    (az_ba + d.arr_az * az_spread, el_ba + d.arr_el * el_spread)
                };
                Path {
                    power: (1.0 - los_frac) * d.weight / wsum,
                    departure: (az_ab + d.dep_az * az_spread, el_ab + d.dep_el * el_spread),
                    arrival,
                    delay_s: d.delay * params.max_delay_s,
                    doppler_hz: 0.0,
                }
            };
            if let Some((heading, speed)) = geo.b_motion {
                p.doppler_hz = speed / wavelength * (p.arrival.0 - heading).cos() * p.arrival.1.cos();
            }
            self.paths[l] = p;
        }

        let (pa, na) = project(&self.a.array, codebook, self.paths.iter().map(|p| p.departure));
        let (pb, nb) = project(&self.b.array, codebook, self.paths.iter().map(|p| p.arrival));
        self.proj_a = pa;
        self.beams_a = na;
        self.proj_b = pb;
        self.beams_b = nb;

        if new_epoch || self.freq.len() != params.rb_count * PATHS {
            self.draw_frequency(params);
        }
        self.ready = true;
    }

    /// Path coefficients at time `t`: amplitude and Doppler-rotated phase.
    pub fn coefficients(&self, time_s: f64) -> [Cplx; PATHS] {
        let dt = time_s - self.ref_time_s;
        std::array::from_fn(|l| {
            let p = &self.paths[l];
            Cplx::from_polar(p.power.sqrt(), self.ref_phase[l] + TAU * p.doppler_hz * dt)
        })
    }

    /// Per-path beamformed amplitudes for a beam pair.
    #[inline]
    pub fn beam_vector(&self, coefs: &[Cplx; PATHS], beam_a: usize, beam_b: usize) -> [Cplx; PATHS] {
        let pa = &self.proj_a[beam_a * PATHS..(beam_a + 1) * PATHS];
        let pb = &self.proj_b[beam_b * PATHS..(beam_b + 1) * PATHS];
        std::array::from_fn(|l| coefs[l] * pa[l] * pb[l])
    }

    /// Linear composite gain on one RB, including path loss and shadowing.
    #[inline]
    pub fn rb_gain(&self, x: &[Cplx; PATHS], rb: usize) -> f64 {
        let f = &self.freq[rb * PATHS..(rb + 1) * PATHS];
        let mut h = ZERO;
        for l in 0..PATHS {
            h += x[l] * f[l];
        }
        self.scale * h.norm_sqr()
    }

    /// Linear composite gain averaged over all RBs.
    pub fn wideband_gain(&self, x: &[Cplx; PATHS]) -> f64 {
        let mut acc = 0.0;
        for l in 0..PATHS {
            let mut row = ZERO;
            for m in 0..PATHS {
                row += self.wideband[l][m] * x[m];
            }
            acc += (x[l].conj() * row).re;
        }
        self.scale * acc.max(0.0)
    }

    /// Exhaustive sweep over end `a`'s codebook with end `b` fixed.
    /// Returns `(beam, linear wideband gain)`; ties go to the lowest index.
    pub fn best_beam_a(&self, coefs: &[Cplx; PATHS], beam_b: usize) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for ba in 0..self.beams_a {
            let g = self.wideband_gain(&self.beam_vector(coefs, ba, beam_b));
            if g > best.1 {
                best = (ba, g);
            }
        }
        best
    }

    /// Exhaustive sweep over end `b`'s codebook with end `a` fixed.
    pub fn best_beam_b(&self, coefs: &[Cplx; PATHS], beam_a: usize) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for bb in 0..self.beams_b {
            let g = self.wideband_gain(&self.beam_vector(coefs, beam_a, bb));
            if g > best.1 {
                best = (bb, g);
            }
        }
        best
    }

    /// Joint sweep over both codebooks: `(beam_a, beam_b, linear gain)`.
    pub fn best_beam_pair(&self, coefs: &[Cplx; PATHS]) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ba in 0..self.beams_a {
            for bb in 0..self.beams_b {
                let g = self.wideband_gain(&self.beam_vector(coefs, ba, bb));
                if g > best.2 {
                    best = (ba, bb, g);
                }
            }
        }
        best
    }

    /// Element amplitude times the array response of each path at one end.
    fn responses(&self, end_a: bool) -> Vec<Vec<Cplx>> {
        let (array, dirs): (&ArrayConfig, Vec<(f64, f64)>) = if end_a {
            (&self.a.array, self.paths.iter().map(|p| p.departure).collect())
        } else {
            (&self.b.array, self.paths.iter().map(|p| p.arrival).collect())
        };
        dirs.into_iter()
            .map(|(az, el)| {
                let amp = db_to_lin(array.element_gain_towards(az, el)).sqrt();
                array_response(array, az, el).into_iter().map(|v| v * amp).collect()
            })
            .collect()
    }

    /// Explicit per-RB channel matrix `H = Σ_l x_l · a_b,l · a_a,lᵀ`, row-major
    /// with `b`'s elements as rows, scaled by the large-scale amplitude.
    /// A weight vector `w` transmits as `conj(w)`, so the same codebook entry
    /// serves both directions and `|w_bᴴ H conj(w_a)| = |w_aᴴ Hᵀ conj(w_b)|`.
    pub fn channel_matrix(&self, time_s: f64, rb: usize) -> Vec<Cplx> {
        let ra = self.responses(true);
        let rbv = self.responses(false);
        let (na, nb) = (self.a.array.element_count(), self.b.array.element_count());
        let coefs = self.coefficients(time_s);
        let amp = self.scale.sqrt();
        let mut h = vec![ZERO; na * nb];
        for l in 0..PATHS {
            let x = coefs[l] * self.freq[rb * PATHS + l] * amp;
            for i in 0..nb {
                for j in 0..na {
                    h[i * na + j] += x * rbv[l][i] * ra[l][j];
                }
            }
        }
        h
    }

    /// `10·log10|w_bᴴ H_rb conj(w_a)|²` for arbitrary weights at both ends.
    pub fn effective_gain_db(&self, time_s: f64, w_a: &[Cplx], w_b: &[Cplx], rb: usize) -> Result<f64, SimError> {
        let (na, nb) = (self.a.array.element_count(), self.b.array.element_count());
        if w_a.len() != na {
            return Err(SimError::DimensionMismatch {
                expected: na,
                got: w_a.len(),
            });
        }
        if w_b.len() != nb {
            return Err(SimError::DimensionMismatch {
                expected: nb,
                got: w_b.len(),
            });
        }
        if rb >= self.rb_count() {
            return Err(SimError::DimensionMismatch {
                expected: self.rb_count(),
                got: rb,
            });
        }
        let ra = self.responses(true);
        let rbv = self.responses(false);
        let coefs = self.coefficients(time_s);
        let mut h = ZERO;
        for l in 0..PATHS {
            let pa: Cplx = w_a.iter().zip(&ra[l]).map(|(w, a)| w.conj() * a).sum();
            let pb: Cplx = w_b.iter().zip(&rbv[l]).map(|(w, a)| w.conj() * a).sum();
            h += coefs[l] * self.freq[rb * PATHS + l] * pa * pb;
        }
        Ok(lin_to_db(self.scale * h.norm_sqr()))
    }
}

fn project(
    array: &ArrayConfig,
    codebook: &BeamCodebook,
    dirs: impl Iterator<Item = (f64, f64)>,
) -> (Vec<Cplx>, usize) {
    let dirs: Vec<(f64, f64)> = dirs.collect();
    if array.pattern == ElementPattern::Omni && array.element_count() == 1 {
        return (vec![Cplx::new(1.0, 0.0); PATHS], 1);
    }
    let beams = codebook.len();
    let mut out = vec![ZERO; beams * PATHS];
    for (l, &(az, el)) in dirs.iter().enumerate() {
        let (laz, lel) = array.to_local(az, el);
        let amp = db_to_lin(crate::antenna::element_gain_db(array.pattern, array.max_element_gain_dbi, laz, lel)).sqrt();
        let proj = codebook.project_local(array, laz, lel);
        for (b, v) in proj.into_iter().enumerate() {
            out[b * PATHS + l] = v * amp;
        }
    }
    (out, beams)
}
