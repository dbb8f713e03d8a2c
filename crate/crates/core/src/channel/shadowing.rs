use rand::Rng;
use rand_distr::StandardNormal;

use super::pathloss::Profile;
use crate::rng::SimRng;
use crate::scenario::{GridLayout, Point2};

pub const GRID_SPACING_M: f64 = 5.0;

/// Grid spacing for a profile: 5 m, refined to a fifth of the correlation
/// distance when that is shorter, so bilinear interpolation does not inflate
/// the short-range correlation.
pub fn grid_spacing_m(profile: Profile) -> f64 {
    GRID_SPACING_M.min(profile.correlation_distance_m() / 5.0)
}

/// Unit-variance Gaussian field on a regular grid with separable exponential
/// correlation `exp(-|dx|/d) · exp(-|dy|/d)`, generated as a 2D AR(1) recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingField {
    pub profile: Profile,
    pub origin: Point2,
    pub spacing_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub correlation_distance_m: f64,
    values: Vec<f64>,
}

impl ShadowingField {
    /// Field covering `[origin, origin + (nx-1)·spacing] × [.., (ny-1)·spacing]`.
    pub fn generate(profile: Profile, origin: Point2, nx: usize, ny: usize, spacing_m: f64, rng: &mut SimRng) -> Self {
        assert!(nx >= 2 && ny >= 2, "shadowing grid needs at least 2×2 points");
        let d = profile.correlation_distance_m();
        let rho = (-spacing_m / d).exp();
        let s1 = (1.0 - rho * rho).sqrt();
        let s2 = 1.0 - rho * rho;
        let mut v = vec![0.0; nx * ny];
        let mut e = || -> f64 { rng.sample(StandardNormal) };
        for j in 0..ny {
            for i in 0..nx {
                let x = match (i, j) {
                    (0, 0) => e(),
                    (_, 0) => rho * v[i - 1] + s1 * e(),
                    (0, _) => rho * v[(j - 1) * nx] + s1 * e(),
                    _ => {
                        rho * v[j * nx + i - 1] + rho * v[(j - 1) * nx + i]
                            - rho * rho * v[(j - 1) * nx + i - 1]
                            + s2 * e()
                    }
                };
                v[j * nx + i] = x;
            }
        }
        Self {
            profile,
            origin,
            spacing_m,
            nx,
            ny,
            correlation_distance_m: d,
            values: v,
        }
    }

    /// Field covering the layout with one grid cell of margin on each side.
    pub fn for_layout(profile: Profile, layout: &GridLayout, rng: &mut SimRng) -> Self {
        let s = grid_spacing_m(profile);
        let n = (layout.extent() / s).ceil() as usize + 3;
        let origin = Point2::new(layout.origin.x - s, layout.origin.y - s);
        Self::generate(profile, origin, n, n, s, rng)
    }

    pub fn grid_value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    /// Bilinear interpolation of the unit field; positions outside the grid
    /// are clamped to its edge.
    pub fn unit_at(&self, p: Point2) -> f64 {
        let fx = ((p.x - self.origin.x) / self.spacing_m).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.spacing_m).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v00 = self.grid_value(i, j);
        let v10 = self.grid_value(i + 1, j);
        let v01 = self.grid_value(i, j + 1);
        let v11 = self.grid_value(i + 1, j + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }
}

/// Shadowing in dB at `position` for the field's profile and the given LOS state.
pub fn sample_shadowing(field: &ShadowingField, position: Point2, los: bool) -> f64 {
    field.profile.shadowing_sigma_db(los) * field.unit_at(position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed, Purpose};

    fn mean_std(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn deterministic_queries() {
        let l = GridLayout::default();
        let f = ShadowingField::for_layout(Profile::UMa, &l, &mut keyed(3, Purpose::Shadowing, 0, 0));
        let p = Point2::new(131.3, 77.7);
        assert_eq!(sample_shadowing(&f, p, true), sample_shadowing(&f, p, true));
        let g = ShadowingField::for_layout(Profile::UMa, &l, &mut keyed(3, Purpose::Shadowing, 0, 0));
        assert_eq!(f, g);
        // Grid points interpolate to themselves.
        let q = Point2::new(f.origin.x + 10.0, f.origin.y + 25.0);
        assert!((f.unit_at(q) - f.grid_value(2, 5)).abs() < 1e-12);
    }

    #[test]
    fn grid_std_matches_sigma() {
        for profile in [Profile::UMa, Profile::UMi] {
            let mut rng = keyed(11, Purpose::Test, profile as u64, 0);
            let f = ShadowingField::generate(profile, Point2::new(0.0, 0.0), 400, 400, 5.0, &mut rng);
            for los in [true, false] {
                let sigma = profile.shadowing_sigma_db(los);
                let xs: Vec<f64> = (0..400)
                    .flat_map(|j| (0..400).map(move |i| (i, j)))
                    .take(100_000)
                    .map(|(i, j)| sigma * f.grid_value(i, j))
                    .collect();
                let (m, s) = mean_std(&xs);
                assert!((s / sigma - 1.0).abs() < 0.05, "{profile:?} los={los}: std {s} vs {sigma}");
                assert!(m.abs() < 0.15 * sigma, "{profile:?} mean {m}");
            }
        }
    }

    #[test]
    fn autocorrelation_at_correlation_distance() {
        for profile in [Profile::UMa, Profile::UMi] {
            let d = profile.correlation_distance_m();
            let mut rng = keyed(5, Purpose::Test, 10 + profile as u64, 0);
            let s = grid_spacing_m(profile);
            let f = ShadowingField::generate(profile, Point2::new(0.0, 0.0), 400, 400, s, &mut rng);
            let span = 399.0 * s - d - 1.0;
            let mut sa = Vec::new();
            let mut sb = Vec::new();
            let mut prng = keyed(6, Purpose::Test, profile as u64, 0);
            for _ in 0..100_000 {
                let p = Point2::new(prng.random::<f64>() * span, prng.random::<f64>() * 399.0 * s);
                sa.push(f.unit_at(p));
                sb.push(f.unit_at(Point2::new(p.x + d, p.y)));
            }
            let (ma, sda) = mean_std(&sa);
            let (mb, sdb) = mean_std(&sb);
            let cov = sa.iter().zip(&sb).map(|(a, b)| (a - ma) * (b - mb)).sum::<f64>() / (sa.len() as f64 - 1.0);
            let r = cov / (sda * sdb);
            let target = (-1.0_f64).exp();
            assert!((r / target - 1.0).abs() < 0.10, "{profile:?}: r = {r}");
        }
    }

    #[test]
    fn far_points_decorrelate() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..1000u64 {
            let mut rng = keyed(9, Purpose::Test, 77, k);
            let f = ShadowingField::generate(Profile::UMa, Point2::new(0.0, 0.0), 222, 2, 5.0, &mut rng);
            a.push(f.unit_at(Point2::new(2.0, 2.0)));
            b.push(f.unit_at(Point2::new(1002.0, 2.0)));
        }
        let (ma, sa) = mean_std(&a);
        let (mb, sb) = mean_std(&b);
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / 999.0;
        assert!((cov / (sa * sb)).abs() < 0.05, "corr {}", cov / (sa * sb));
    }
}
