//! Pedestrian mobility on the sidewalk rings.
//!
//! A UE walks along a lane at a fixed offset from its block's wall. When it
//! reaches a lane corner it draws straight/left/right with probabilities
//! 0.6/0.2/0.2, re-scaled over the directions that stay on a sidewalk.
//! Crossing streets is not modelled.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::layout::{GridLayout, Point2, Side};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub fn unit(self) -> (f64, f64) {
        match self {
            Heading::East => (1.0, 0.0),
            Heading::North => (0.0, 1.0),
            Heading::West => (-1.0, 0.0),
            Heading::South => (0.0, -1.0),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::East => Heading::North,
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
        }
    }

    pub fn right(self) -> Heading {
        self.left().left().left()
    }

    pub fn azimuth(self) -> f64 {
        let (x, y) = self.unit();
        y.atan2(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeMobilityState {
    pub position: Point2,
    pub heading: Heading,
    pub speed_mps: f64,
    pub height_m: f64,
}

/// Base probabilities for straight, left and right at a corner.
pub const TURN_PROBABILITIES: [f64; 3] = [0.6, 0.2, 0.2];

/// Turn distribution over `[straight, left, right]` restricted to `available`
/// and re-normalised. All zeros when nothing is available.
pub fn turn_probabilities(available: [bool; 3]) -> [f64; 3] {
    let mut p = [0.0; 3];
    let mut total = 0.0;
    for i in 0..3 {
        if available[i] {
            p[i] = TURN_PROBABILITIES[i];
            total += p[i];
        }
    }
    if total > 0.0 {
        for v in &mut p {
            *v /= total;
        }
    }
    p
}

fn draw_turn(available: [bool; 3], rng: &mut SimRng) -> usize {
    let p = turn_probabilities(available);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            acc += pi;
            last = Some(i);
            if u < acc {
                return i;
            }
        }
    }
    last.unwrap_or(0)
}

/// Lane of a sidewalk point: the block it circles and the offset from the wall.
fn lane(layout: &GridLayout, p: Point2) -> (usize, f64) {
    let b = layout.nearest_block(p);
    let r = layout.block(b);
    (b, r.chebyshev_dist(p).clamp(0.0, layout.sidewalk_width_m))
}

/// The two headings along the lane side `p` lies on.
fn lane_headings(layout: &GridLayout, p: Point2) -> [Heading; 2] {
    let (b, o) = lane(layout, p);
    let r = layout.block(b);
    let dx = (r.x0 - p.x).max(p.x - r.x1).max(0.0);
    let dy = (r.y0 - p.y).max(p.y - r.y1).max(0.0);
    // On a west/east side when the x offset equals the lane offset.
    if (dx - o).abs() <= (dy - o).abs() && dx > 0.0 {
        [Heading::North, Heading::South]
    } else {
        [Heading::East, Heading::West]
    }
}

/// UEs spawned uniformly over sidewalk area, headings uniform over the lane
/// directions at the spawn point.
pub fn spawn_ues(config: &ScenarioConfig, rng: &mut SimRng) -> Vec<UeMobilityState> {
    let layout = &config.layout;
    let corridors = layout.corridors();
    let weights: Vec<f64> = corridors
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if config.masked_corridors.contains(&i) {
                0.0
            } else {
                c.rect.area()
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    (0..config.ue_count)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut idx = 0;
            for (i, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                idx = i;
                if u < w {
                    break;
                }
                u -= w;
            }
            let r = corridors[idx].rect;
            let p = Point2::new(
                r.x0 + rng.random::<f64>() * (r.x1 - r.x0),
                r.y0 + rng.random::<f64>() * (r.y1 - r.y0),
            );
            let options = lane_headings(layout, p);
            let heading = options[usize::from(rng.random::<bool>())];
            UeMobilityState {
                position: p,
                heading,
                speed_mps: config.radio.ue_speed_mps,
                height_m: config.radio.ue_height_m,
            }
        })
        .collect()
}

/// Index of the corridor containing `p`, if any.
pub fn corridor_of(layout: &GridLayout, p: Point2) -> Option<(usize, Side)> {
    layout
        .corridors()
        .iter()
        .enumerate()
        .find(|(_, c)| c.rect.contains(p))
        .map(|(i, c)| (i, c.side))
}

/// Advances one UE by `dt_s`.
pub fn step_ue(
    state: &UeMobilityState,
    dt_s: f64,
    layout: &GridLayout,
    rng: &mut SimRng,
) -> UeMobilityState {
    let mut s = *state;
    let mut remaining = s.speed_mps * dt_s;
    let probe = layout.sidewalk_width_m + 1.0;
    // At most a handful of corners can be reached in one step.
    for _ in 0..8 {
        if remaining <= 0.0 {
            break;
        }
        let (b, o) = lane(layout, s.position);
        let ring = layout.block(b).expanded(o);
        let (ux, uy) = s.heading.unit();
        // Distance to the lane corner ahead.
        let to_corner = match s.heading {
            Heading::East => ring.x1 - s.position.x,
            Heading::West => s.position.x - ring.x0,
            Heading::North => ring.y1 - s.position.y,
            Heading::South => s.position.y - ring.y0,
        };
        if to_corner > remaining {
            s.position.x += ux * remaining;
            s.position.y += uy * remaining;
            break;
        }
        let corner = Point2::new(
            s.position.x + ux * to_corner.max(0.0),
            s.position.y + uy * to_corner.max(0.0),
        );
        remaining -= to_corner.max(0.0);
        let candidates = [s.heading, s.heading.left(), s.heading.right()];
        let available = candidates.map(|h| {
            let (hx, hy) = h.unit();
            layout.on_sidewalk(Point2::new(corner.x + hx * probe, corner.y + hy * probe), 0.0)
        });
        s.position = corner;
        s.heading = if available.iter().any(|&a| a) {
            candidates[draw_turn(available, rng)]
        } else {
            s.heading.left().left()
        };
        if remaining <= 0.0 {
            break;
        }
        // Residual step along the new heading; lane sides are far longer than one step.
        let (nx, ny) = s.heading.unit();
        s.position.x += nx * remaining;
        s.position.y += ny * remaining;
        remaining = 0.0;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed, Purpose};
    use crate::scenario::config::{build_scenario, ScenarioId};

    fn cfg() -> ScenarioConfig {
        build_scenario(ScenarioId::A, true, None).unwrap()
    }

    #[test]
    fn three_way_corner_distribution() {
        assert_eq!(turn_probabilities([true, true, true]), [0.6, 0.2, 0.2]);
    }

    #[test]
    fn t_corner_rescales() {
        let p = turn_probabilities([false, true, true]);
        assert!((p[1] - 0.5).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_subsets_normalise() {
        for mask in 1u8..8 {
            let a = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
            let p = turn_probabilities(a);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{a:?}");
            for i in 0..3 {
                assert_eq!(p[i] > 0.0, a[i]);
            }
        }
    }

    #[test]
    fn drawn_frequencies_match() {
        let mut rng = keyed(3, Purpose::Test, 0, 0);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[draw_turn([true, true, true], &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(TURN_PROBABILITIES) {
            let f = *c as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() < 4.0 * sigma, "{f} vs {p}");
        }
    }

    #[test]
    fn spawn_is_deterministic() {
        let c = cfg();
        let a = spawn_ues(&c, &mut keyed(11, Purpose::Spawn, 0, 0));
        let b = spawn_ues(&c, &mut keyed(11, Purpose::Spawn, 0, 0));
        assert_eq!(a, b);
        assert_eq!(a.len(), 72);
        for s in &a {
            assert!(c.layout.on_sidewalk(s.position, 1e-9));
        }
    }

    #[test]
    fn spawn_counts_follow_corridor_area() {
        let mut c = cfg();
        c.ue_count = 100_000;
        let ues = spawn_ues(&c, &mut keyed(5, Purpose::Spawn, 0, 0));
        let corridors = c.layout.corridors();
        let total: f64 = corridors.iter().map(|k| k.rect.area()).sum();
        let mut counts = vec![0usize; corridors.len()];
        for u in &ues {
            let (i, _) = corridor_of(&c.layout, u.position).expect("on sidewalk");
            counts[i] += 1;
        }
        let n = ues.len() as f64;
        let mut chi2 = 0.0;
        for (k, &cnt) in corridors.iter().zip(&counts) {
            let p = k.rect.area() / total;
            let expect = n * p;
            let sigma = (n * p * (1.0 - p)).sqrt();
            assert!((cnt as f64 - expect).abs() < 3.0 * sigma + 1.0);
            chi2 += (cnt as f64 - expect).powi(2) / expect;
        }
        // 35 degrees of freedom, 99.9% quantile is about 66.6.
        assert!(chi2 < 66.6, "chi2 {chi2}");
    }

    #[test]
    fn masked_corridor_gets_no_ues() {
        let mut c = cfg();
        c.ue_count = 20_000;
        c.masked_corridors = vec![4];
        let ues = spawn_ues(&c, &mut keyed(5, Purpose::Spawn, 0, 0));
        assert!(ues
            .iter()
            .all(|u| corridor_of(&c.layout, u.position).map(|x| x.0) != Some(4)));
    }

    #[test]
    fn straight_segment_advances() {
        let c = cfg();
        let b = c.layout.blocks()[4];
        let s = UeMobilityState {
            position: Point2::new(b.x1 + 1.0, 0.5 * (b.y0 + b.y1)),
            heading: Heading::North,
            speed_mps: 3.0 / 3.6,
            height_m: 1.5,
        };
        let mut rng = keyed(1, Purpose::Test, 0, 0);
        let n = step_ue(&s, 0.25e-3, &c.layout, &mut rng);
        assert_eq!(n.heading, Heading::North);
        assert!((n.position.y - s.position.y - 0.8333333333 * 0.00025).abs() < 1e-9);
        assert_eq!(n.position.x, s.position.x);
    }

    #[test]
    fn corner_turns_onto_ring() {
        let c = cfg();
        let b = c.layout.blocks()[4];
        let s = UeMobilityState {
            position: Point2::new(b.x1 + 1.0, b.y1 + 1.0 - 1e-5),
            heading: Heading::North,
            speed_mps: 3.0 / 3.6,
            height_m: 1.5,
        };
        let mut rng = keyed(1, Purpose::Test, 0, 0);
        let n = step_ue(&s, 0.25e-3, &c.layout, &mut rng);
        assert_eq!(n.heading, Heading::West);
        assert!((n.position.y - (b.y1 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn million_steps_stay_on_sidewalk() {
        let c = cfg();
        let mut ues = spawn_ues(&c, &mut keyed(9, Purpose::Spawn, 0, 0));
        ues.truncate(4);
        // Fast walkers reach many corners within the step budget.
        for u in &mut ues {
            u.speed_mps = 100.0;
        }
        let mut rng = keyed(9, Purpose::Mobility, 0, 0);
        for step in 0..250_000 {
            for u in &mut ues {
                *u = step_ue(u, 0.25e-3, &c.layout, &mut rng);
                if step % 97 == 0 {
                    assert!(c.layout.dist_to_sidewalk(u.position) < 1e-9, "{u:?}");
                    assert!(c.layout.on_sidewalk(u.position, 1e-9));
                }
            }
        }
    }
}
