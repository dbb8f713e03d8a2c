//! Uniform rectangular arrays, the 3GPP 3D element pattern and DFT codebooks.
//!
//! Angles handed to the array are global (azimuth from +x, elevation above the
//! horizon). [`ArrayConfig::to_local`] rotates them into the panel frame, where
//! the boresight is the local +x axis after azimuth rotation and mechanical
//! downtilt.

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::units::lin_to_db;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementPattern {
    /// Parabolic 3D pattern with 65° half-power beamwidth and 30 dB floors.
    Tri3d,
    Omni,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig<T> {
    pub rows: usize,
    pub cols: usize,
    pub element_spacing_wavelengths: T,
    pub boresight_azimuth: T,
    pub downtilt: T,
    pub max_element_gain_dbi: T,
    pub pattern: ElementPattern,
}

impl<T: Scalar> ArrayConfig<T> {
    /// 8×8 panel used at gNBs and NCRs.
    pub fn panel(boresight_azimuth: T, downtilt_deg: T, max_gain_dbi: T) -> Self {
        Self {
            rows: 8,
            cols: 8,
            element_spacing_wavelengths: T::lit(0.5),
            boresight_azimuth,
            downtilt: downtilt_deg.to_radians(),
            max_element_gain_dbi: max_gain_dbi,
            pattern: ElementPattern::Tri3d,
        }
    }

    /// Single omnidirectional element.
    pub fn omni() -> Self {
        Self {
            rows: 1,
            cols: 1,
            element_spacing_wavelengths: T::lit(0.5),
            boresight_azimuth: T::zero(),
            downtilt: T::zero(),
            max_element_gain_dbi: T::zero(),
            pattern: ElementPattern::Omni,
        }
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::InvalidValue {
            key: "antenna".into(),
            reason: reason.into(),
        };
        if self.rows * self.cols == 0 {
            return Err(bad("array needs at least one element"));
        }
        if !(self.element_spacing_wavelengths > T::zero()) {
            return Err(bad("element spacing must be positive"));
        }
        if self.pattern == ElementPattern::Omni && self.max_element_gain_dbi != T::zero() {
            return Err(bad("omni elements have 0 dBi gain"));
        }
        Ok(())
    }

    /// Global `(azimuth, elevation)` to panel-local `(azimuth, elevation)`.
    pub fn to_local(&self, azimuth: T, elevation: T) -> (T, T) {
        let rel = azimuth - self.boresight_azimuth;
        let (ce, se) = (elevation.cos(), elevation.sin());
        let x1 = rel.cos() * ce;
        let y1 = rel.sin() * ce;
        let z1 = se;
        let (ct, st) = (self.downtilt.cos(), self.downtilt.sin());
        let x = x1 * ct - z1 * st;
        let z = x1 * st + z1 * ct;
        let el = z.max(-T::one()).min(T::one()).asin();
        (y1.atan2(x), el)
    }

    /// Element gain in dBi towards a global direction.
    pub fn element_gain_towards(&self, azimuth: T, elevation: T) -> T {
        let (az, el) = self.to_local(azimuth, elevation);
        element_gain_db(self.pattern, self.max_element_gain_dbi, az, el)
    }
}

/// Element gain for local angle offsets from boresight.
pub fn element_gain_db<T: Scalar>(pattern: ElementPattern, max_gain_dbi: T, azimuth_off: T, elevation_off: T) -> T {
    match pattern {
        ElementPattern::Omni => T::zero(),
        ElementPattern::Tri3d => {
            let hpbw = T::lit(65.0);
            let floor = T::lit(30.0);
            let twelve = T::lit(12.0);
            let v = -(twelve * (elevation_off.to_degrees() / hpbw).powi(2)).min(floor);
            let h = -(twelve * (azimuth_off.to_degrees() / hpbw).powi(2)).min(floor);
            max_gain_dbi - (-(v + h)).min(floor)
        }
    }
}

/// Unit-magnitude planar-array response, element `(m, n)` at index `m·cols + n`.
pub fn array_response<T: Scalar>(config: &ArrayConfig<T>, azimuth: T, elevation: T) -> Vec<Complex<T>> {
    let (az, el) = config.to_local(azimuth, elevation);
    local_response(config, az, el)
}

pub fn local_response<T: Scalar>(config: &ArrayConfig<T>, az: T, el: T) -> Vec<Complex<T>> {
    let k = T::TAU() * config.element_spacing_wavelengths;
    let u = el.sin();
    let v = az.sin() * el.cos();
    let mut out = Vec::with_capacity(config.element_count());
    for m in 0..config.rows {
        for n in 0..config.cols {
            let phase = k * (T::lit(m as f64) * u + T::lit(n as f64) * v);
            out.push(Complex::from_polar(T::one(), phase));
        }
    }
    out
}

/// `wᴴ·h`.
pub fn inner<T: Scalar>(w: &[Complex<T>], h: &[Complex<T>]) -> Complex<T> {
    w.iter()
        .zip(h)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamCodebook<T> {
    pub rows: usize,
    pub cols: usize,
    pub beams: Vec<Vec<Complex<T>>>,
}

/// Critically sampled 2D DFT codebook: one beam per element, each the
/// Kronecker product of per-axis DFT vectors, unit norm.
pub fn build_dft_codebook<T: Scalar>(config: &ArrayConfig<T>) -> BeamCodebook<T> {
    let (r, c) = (config.rows, config.cols);
    let norm = T::one() / T::lit((r * c) as f64).sqrt();
    let mut beams = Vec::with_capacity(r * c);
    for p in 0..r {
        for q in 0..c {
            let mut w = Vec::with_capacity(r * c);
            for m in 0..r {
                for n in 0..c {
                    let phase = T::TAU()
                        * (T::lit((p * m) as f64) / T::lit(r as f64)
                            + T::lit((q * n) as f64) / T::lit(c as f64));
                    w.push(Complex::from_polar(norm, phase));
                }
            }
            beams.push(w);
        }
    }
    BeamCodebook { rows: r, cols: c, beams }
}

impl<T: Scalar> BeamCodebook<T> {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// `wᴴ·a` for every beam against the local-direction response, using the
    /// separable structure of DFT beams and planar responses. Index order
    /// matches `beams`.
    pub fn project_local(&self, config: &ArrayConfig<T>, az: T, el: T) -> Vec<Complex<T>> {
        let k = T::TAU() * config.element_spacing_wavelengths;
        let u = el.sin();
        let v = az.sin() * el.cos();
        let axis = |len: usize, spatial: T| -> Vec<Complex<T>> {
            let norm = T::one() / T::lit(len as f64).sqrt();
            (0..len)
                .map(|p| {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for m in 0..len {
                        let mf = T::lit(m as f64);
                        let phase = k * mf * spatial - T::TAU() * T::lit(p as f64) * mf / T::lit(len as f64);
                        acc = acc + Complex::from_polar(T::one(), phase);
                    }
                    acc * norm
                })
                .collect()
        };
        let row = axis(self.rows, u);
        let col = axis(self.cols, v);
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for rp in &row {
            for cq in &col {
                out.push(*rp * *cq);
            }
        }
        out
    }

    /// Exhaustive sweep: `(beam index, gain in dB)` maximising `|wᴴh|²`.
    /// Ties resolve to the lowest index.
    pub fn best_beam(&self, h: &[Complex<T>]) -> (usize, T) {
        let mut best = (0, T::neg_infinity());
        for (i, w) in self.beams.iter().enumerate() {
            let g = inner(w, h).norm_sqr();
            if g > best.1 {
                best = (i, g);
            }
        }
        (best.0, lin_to_db(best.1))
    }

    /// `beam_id,element,re,im` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("beam_id,element,re,im\n");
        for (b, w) in self.beams.iter().enumerate() {
            for (e, x) in w.iter().enumerate() {
                let _ = writeln!(s, "{b},{e},{},{}", x.re, x.im);
            }
        }
        s
    }
}

/// Channel seen by a beamformer: a vector (one end has a single antenna) or a
/// row-major `rx × tx` matrix.
#[derive(Debug, Clone, Copy)]
pub enum ChannelRef<'a, T> {
    Vector(&'a [Complex<T>]),
    Matrix {
        rx: usize,
        tx: usize,
        data: &'a [Complex<T>],
    },
}

/// `10·log10|wᴴh|²` for a vector channel, or `10·log10|w_rxᴴ H w_tx|²` when a
/// partner (transmit) weight vector is given for a matrix channel.
pub fn beam_gain_db<T: Scalar>(
    weights: &[Complex<T>],
    channel: ChannelRef<'_, T>,
    partner: Option<&[Complex<T>]>,
) -> Result<T, SimError> {
    match (channel, partner) {
        (ChannelRef::Vector(h), None) => {
            if h.len() != weights.len() {
                return Err(SimError::DimensionMismatch {
                    expected: weights.len(),
                    got: h.len(),
                });
            }
            Ok(lin_to_db(inner(weights, h).norm_sqr()))
        }
        (ChannelRef::Matrix { rx, tx, data }, Some(wt)) => {
            if data.len() != rx * tx {
                return Err(SimError::DimensionMismatch {
                    expected: rx * tx,
                    got: data.len(),
                });
            }
            if weights.len() != rx {
                return Err(SimError::DimensionMismatch {
                    expected: rx,
                    got: weights.len(),
                });
            }
            if wt.len() != tx {
                return Err(SimError::DimensionMismatch {
                    expected: tx,
                    got: wt.len(),
                });
            }
            let hw: Vec<Complex<T>> = (0..rx)
                .map(|i| {
                    data[i * tx..(i + 1) * tx]
                        .iter()
                        .zip(wt)
                        .fold(Complex::new(T::zero(), T::zero()), |a, (h, w)| a + h * w)
                })
                .collect();
            Ok(lin_to_db(inner(weights, &hw).norm_sqr()))
        }
        (ChannelRef::Vector(h), Some(_)) => Err(SimError::DimensionMismatch {
            expected: 0,
            got: h.len(),
        }),
        (ChannelRef::Matrix { rx, tx, .. }, None) => Err(SimError::DimensionMismatch {
            expected: rx * tx,
            got: weights.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed, Purpose};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    fn panel() -> ArrayConfig<f64> {
        ArrayConfig::panel(0.0, 0.0, 8.0)
    }

    #[test]
    fn element_gain_values() {
        assert_eq!(element_gain_db(ElementPattern::Tri3d, 8.0, 0.0, 0.0), 8.0);
        assert_eq!(element_gain_db(ElementPattern::Omni, 0.0, 1.0, -0.3), 0.0);
        assert_abs_diff_eq!(
            element_gain_db(ElementPattern::Tri3d, 8.0, 65f64.to_radians(), 0.0),
            -4.0,
            epsilon = 1e-12
        );
        // Back lobe is capped at the 30 dB floor.
        assert_abs_diff_eq!(element_gain_db(ElementPattern::Tri3d, 8.0, PI, 0.0), -22.0, epsilon = 1e-12);
    }

    #[test]
    fn element_gain_even_in_offsets() {
        let mut rng = keyed(2, Purpose::Test, 0, 0);
        for _ in 0..1000 {
            let a: f64 = rng.random_range(-PI..PI);
            let e: f64 = rng.random_range(-PI / 2.0..PI / 2.0);
            let g = element_gain_db(ElementPattern::Tri3d, 8.0, a, e);
            assert_eq!(g, element_gain_db(ElementPattern::Tri3d, 8.0, -a, e));
            assert_eq!(g, element_gain_db(ElementPattern::Tri3d, 8.0, a, -e));
        }
    }

    #[test]
    fn boresight_response_is_all_ones() {
        let a = array_response(&panel(), 0.0, 0.0);
        assert_eq!(a.len(), 64);
        for x in &a {
            assert_abs_diff_eq!(x.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-15);
        }
        let af = lin_to_db(inner(&a, &a).norm_sqr());
        assert_abs_diff_eq!(af, 20.0 * 64f64.log10(), epsilon = 1e-9);
        // Normalised matched filter: 10·log10(64).
        let w: Vec<_> = a.iter().map(|x| x / 8.0).collect();
        assert_abs_diff_eq!(lin_to_db(inner(&w, &a).norm_sqr()), 18.0618, epsilon = 1e-4);
    }

    #[test]
    fn mirrored_directions_give_conjugate_responses() {
        let cfg = panel();
        let a = local_response(&cfg, 0.3, 0.2);
        let b = local_response(&cfg, -0.3, -0.2);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, -y.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn downtilt_moves_boresight() {
        let mut cfg = panel();
        cfg.downtilt = 12f64.to_radians();
        let (az, el) = cfg.to_local(0.0, -12f64.to_radians());
        assert_abs_diff_eq!(az, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(el, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cfg.element_gain_towards(0.0, -12f64.to_radians()), 8.0, epsilon = 1e-9);
    }

    #[test]
    fn codebook_is_orthonormal() {
        let cb = build_dft_codebook(&panel());
        assert_eq!(cb.len(), 64);
        for (i, wi) in cb.beams.iter().enumerate() {
            assert!((inner(wi, wi).norm() - 1.0).abs() < 1e-12);
            for wj in cb.beams.iter().skip(i + 1) {
                assert!(inner(wi, wj).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn beam_zero_matches_boresight() {
        let cfg = panel();
        let cb = build_dft_codebook(&cfg);
        let a = array_response(&cfg, 0.0, 0.0);
        let g = beam_gain_db(&cb.beams[0], ChannelRef::Vector(&a), None).unwrap();
        assert_abs_diff_eq!(g, 10.0 * 64f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn separable_projection_matches_inner_products() {
        let cfg = panel();
        let cb = build_dft_codebook(&cfg);
        let mut rng = keyed(4, Purpose::Test, 0, 0);
        for _ in 0..50 {
            let az: f64 = rng.random_range(-1.5..1.5);
            let el: f64 = rng.random_range(-1.0..1.0);
            let a = local_response(&cfg, az, el);
            let fast = cb.project_local(&cfg, az, el);
            for (w, f) in cb.beams.iter().zip(&fast) {
                let slow = inner(w, &a);
                assert!((slow - f).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sweep_equals_brute_force() {
        let cfg = panel();
        let cb = build_dft_codebook(&cfg);
        let mut rng = keyed(5, Purpose::Test, 0, 0);
        for _ in 0..200 {
            let a = array_response(&cfg, rng.random_range(-1.5..1.5), rng.random_range(-0.8..0.8));
            let (idx, g) = cb.best_beam(&a);
            let brute = cb
                .beams
                .iter()
                .map(|w| inner(w, &a).norm_sqr())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_abs_diff_eq!(g, lin_to_db(brute), epsilon = 1e-12);
            assert_abs_diff_eq!(inner(&cb.beams[idx], &a).norm_sqr(), brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn codebook_max_bounded_by_matched_filter() {
        let cb = build_dft_codebook(&panel());
        let mut rng = keyed(6, Purpose::Test, 0, 0);
        for _ in 0..1000 {
            let h: Vec<Complex<f64>> = (0..64)
                .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let bound = lin_to_db(h.iter().map(|x| x.norm_sqr()).sum::<f64>());
            let (_, g) = cb.best_beam(&h);
            assert!(g <= bound + 1e-9);
        }
        // Equality when h is a scaled codebook beam.
        let h: Vec<_> = cb.beams[13].iter().map(|x| x * 3.0).collect();
        let bound = lin_to_db(h.iter().map(|x| x.norm_sqr()).sum::<f64>());
        assert_abs_diff_eq!(cb.best_beam(&h).1, bound, epsilon = 1e-9);
    }

    #[test]
    fn unit_norm_beams_conserve_power() {
        let cb = build_dft_codebook(&panel());
        for w in &cb.beams {
            // Radiated power of a unit-norm beam equals one element at unit
            // amplitude scaled by 64 elements of power 1/64.
            let p: f64 = w.iter().map(|x| x.norm_sqr()).sum();
            assert!((p * 64.0 - 64.0).abs() / 64.0 < 1e-9);
        }
    }

    #[test]
    fn gain_edge_cases() {
        let cfg = panel();
        let cb = build_dft_codebook(&cfg);
        let a = array_response(&cfg, 0.0, 0.0);
        // Beam 1 is orthogonal to the boresight response.
        let g = beam_gain_db(&cb.beams[1], ChannelRef::Vector(&a), None).unwrap();
        assert_eq!(g, -200.0);
        let ue = [Complex::new(0.5, 0.0)];
        let g = beam_gain_db(&[Complex::new(1.0, 0.0)], ChannelRef::Vector(&ue), None).unwrap();
        assert_abs_diff_eq!(g, 10.0 * 0.25f64.log10(), epsilon = 1e-12);
        assert!(matches!(
            beam_gain_db(&cb.beams[0], ChannelRef::Vector(&ue), None),
            Err(SimError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matched_rank_one_matrix() {
        let cfg = panel();
        let cb = build_dft_codebook(&cfg);
        let a_rx = array_response(&cfg, 0.0, 0.0);
        let a_tx = array_response(&cfg, 0.0, 0.0);
        let mut h = Vec::with_capacity(64 * 64);
        for r in &a_rx {
            for t in &a_tx {
                h.push(r * t.conj());
            }
        }
        let g = beam_gain_db(
            &cb.beams[0],
            ChannelRef::Matrix { rx: 64, tx: 64, data: &h },
            Some(&cb.beams[0]),
        )
        .unwrap();
        assert_abs_diff_eq!(g, 2.0 * 10.0 * 64f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn f32_kernels_agree() {
        let c32 = ArrayConfig::<f32>::panel(0.0, 12.0, 8.0);
        let c64 = ArrayConfig::<f64>::panel(0.0, 12.0, 8.0);
        let g32 = c32.element_gain_towards(0.4, -0.1);
        let g64 = c64.element_gain_towards(0.4, -0.1);
        assert!((g32 as f64 - g64).abs() < 1e-4);
    }
}
