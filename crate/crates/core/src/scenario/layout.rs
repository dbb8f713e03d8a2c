use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn with_height(self, z: f64) -> Point3 {
        Point3 {
            x: self.x,
            y: self.y,
            z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn dist(self, o: Point3) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    /// Half-open containment, so adjacent rectangles never share a point.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    pub fn contains_closed(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    pub fn interior_contains(&self, p: Point2) -> bool {
        p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
    }

    /// Chebyshev distance from the rectangle; zero inside.
    pub fn chebyshev_dist(&self, p: Point2) -> f64 {
        let dx = (self.x0 - p.x).max(p.x - self.x1).max(0.0);
        let dy = (self.y0 - p.y).max(p.y - self.y1).max(0.0);
        dx.max(dy)
    }

    pub fn expanded(&self, d: f64) -> Rect {
        Rect::new(self.x0 - d, self.y0 - d, self.x1 + d, self.y1 + d)
    }

    /// Length of the part of segment `a`–`b` lying strictly inside the rectangle.
    pub fn interior_overlap(&self, a: Point2, b: Point2) -> f64 {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for (p, q) in [
            (-dx, a.x - self.x0),
            (dx, self.x1 - a.x),
            (-dy, a.y - self.y0),
            (dy, self.y1 - a.y),
        ] {
            if p == 0.0 {
                if q <= 0.0 {
                    return 0.0;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        if t1 > t0 {
            (t1 - t0) * dx.hypot(dy)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    Block,
    Sidewalk,
    Street,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Block => "block",
            RegionKind::Sidewalk => "sidewalk",
            RegionKind::Street => "street",
        }
    }
}

/// Which side of its block a sidewalk corridor runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    South,
    North,
    West,
    East,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub block: usize,
    pub side: Side,
    pub rect: Rect,
}

/// Square grid of buildings ringed by sidewalks and separated by streets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub block_count_per_side: usize,
    pub block_size_m: f64,
    pub sidewalk_width_m: f64,
    pub street_width_m: f64,
    pub origin: Point2,
}

impl Default for GridLayout {
    fn default() -> Self {
        Self {
            block_count_per_side: 3,
            block_size_m: 120.0,
            sidewalk_width_m: 3.0,
            street_width_m: 14.0,
            origin: Point2::new(0.0, 0.0),
        }
    }
}

impl GridLayout {
    /// Distance between the lower-left corners of adjacent blocks.
    pub fn pitch(&self) -> f64 {
        self.block_size_m + 2.0 * self.sidewalk_width_m + self.street_width_m
    }

    /// Side length of the square region: blocks with their sidewalk rings plus
    /// the streets between them.
    pub fn extent(&self) -> f64 {
        let n = self.block_count_per_side as f64;
        n * (self.block_size_m + 2.0 * self.sidewalk_width_m) + (n - 1.0) * self.street_width_m
    }

    pub fn bounds(&self) -> Rect {
        let e = self.extent();
        Rect::new(self.origin.x, self.origin.y, self.origin.x + e, self.origin.y + e)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.bounds().contains_closed(p, 1e-9)
    }

    fn block_start(&self, i: usize) -> f64 {
        self.sidewalk_width_m + i as f64 * self.pitch()
    }

    /// Block rectangles, row-major from the origin corner.
    pub fn blocks(&self) -> Vec<Rect> {
        let n = self.block_count_per_side;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let x0 = self.origin.x + self.block_start(i);
                let y0 = self.origin.y + self.block_start(j);
                out.push(Rect::new(x0, y0, x0 + self.block_size_m, y0 + self.block_size_m));
            }
        }
        out
    }

    pub fn block_center(&self, i: usize, j: usize) -> Point2 {
        let h = 0.5 * self.block_size_m;
        Point2::new(
            self.origin.x + self.block_start(i) + h,
            self.origin.y + self.block_start(j) + h,
        )
    }

    /// Center line coordinate of the `k`-th street between blocks `k` and `k+1`.
    pub fn street_center(&self, k: usize) -> f64 {
        self.block_start(k) + self.block_size_m + self.sidewalk_width_m + 0.5 * self.street_width_m
    }

    /// Sidewalk corridors: for each block a south and north strip spanning the
    /// corners, and a west and east strip between them.
    pub fn corridors(&self) -> Vec<Corridor> {
        let w = self.sidewalk_width_m;
        let mut out = Vec::new();
        for (b, r) in self.blocks().into_iter().enumerate() {
            out.push(Corridor {
                block: b,
                side: Side::South,
                rect: Rect::new(r.x0 - w, r.y0 - w, r.x1 + w, r.y0),
            });
            out.push(Corridor {
                block: b,
                side: Side::North,
                rect: Rect::new(r.x0 - w, r.y1, r.x1 + w, r.y1 + w),
            });
            out.push(Corridor {
                block: b,
                side: Side::West,
                rect: Rect::new(r.x0 - w, r.y0, r.x0, r.y1),
            });
            out.push(Corridor {
                block: b,
                side: Side::East,
                rect: Rect::new(r.x1, r.y0, r.x1 + w, r.y1),
            });
        }
        out
    }

    /// Street rectangles: full-length corridors in y, segments between them in x.
    pub fn streets(&self) -> Vec<Rect> {
        let n = self.block_count_per_side;
        let e = self.extent();
        let (ox, oy) = (self.origin.x, self.origin.y);
        let mut cuts = Vec::new();
        for k in 0..n.saturating_sub(1) {
            let s0 = self.block_start(k) + self.block_size_m + self.sidewalk_width_m;
            cuts.push((s0, s0 + self.street_width_m));
        }
        let mut out = Vec::new();
        for &(s0, s1) in &cuts {
            out.push(Rect::new(ox + s0, oy, ox + s1, oy + e));
        }
        for &(t0, t1) in &cuts {
            let mut x = 0.0;
            for &(s0, s1) in &cuts {
                out.push(Rect::new(ox + x, oy + t0, ox + s0, oy + t1));
                x = s1;
            }
            out.push(Rect::new(ox + x, oy + t0, ox + e, oy + t1));
        }
        out
    }

    pub fn classify(&self, p: Point2) -> Option<RegionKind> {
        if !self.bounds().contains(p) {
            return None;
        }
        for b in self.blocks() {
            if b.contains(p) {
                return Some(RegionKind::Block);
            }
        }
        for c in self.corridors() {
            if c.rect.contains(p) {
                return Some(RegionKind::Sidewalk);
            }
        }
        Some(RegionKind::Street)
    }

    /// True when `p` lies on a sidewalk (closed, with tolerance `tol`).
    pub fn on_sidewalk(&self, p: Point2, tol: f64) -> bool {
        self.blocks().iter().any(|b| {
            let d = b.chebyshev_dist(p);
            let inside = b.interior_contains(p);
            !inside && d <= self.sidewalk_width_m + tol
        })
    }

    /// Distance from `p` to the nearest sidewalk corridor.
    pub fn dist_to_sidewalk(&self, p: Point2) -> f64 {
        self.corridors()
            .iter()
            .map(|c| {
                let r = c.rect;
                let dx = (r.x0 - p.x).max(p.x - r.x1).max(0.0);
                let dy = (r.y0 - p.y).max(p.y - r.y1).max(0.0);
                dx.hypot(dy)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn block(&self, index: usize) -> Rect {
        let n = self.block_count_per_side;
        let (i, j) = (index % n, index / n);
        let x0 = self.origin.x + self.block_start(i);
        let y0 = self.origin.y + self.block_start(j);
        Rect::new(x0, y0, x0 + self.block_size_m, y0 + self.block_size_m)
    }

    /// Index of the block whose sidewalk ring contains (or is nearest to) `p`.
    pub fn nearest_block(&self, p: Point2) -> usize {
        let n = self.block_count_per_side;
        let pitch = self.pitch();
        let ring = self.block_size_m + 2.0 * self.sidewalk_width_m;
        let axis = |v: f64| {
            let k = ((v / pitch).floor().max(0.0) as usize).min(n - 1);
            // In the street, pick the closer neighbour.
            let off = v - k as f64 * pitch;
            if off > ring && k + 1 < n && off - ring > 0.5 * self.street_width_m {
                k + 1
            } else {
                k
            }
        };
        let i = axis(p.x - self.origin.x);
        let j = axis(p.y - self.origin.y);
        j * n + i
    }

    /// Rectangles of every region, one per line: `kind,x0,y0,x1,y1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,x0,y0,x1,y1\n");
        let mut row = |k: RegionKind, r: &Rect| {
            let _ = writeln!(s, "{},{},{},{},{}", k.as_str(), r.x0, r.y0, r.x1, r.y1);
        };
        for b in self.blocks() {
            row(RegionKind::Block, &b);
        }
        for c in self.corridors() {
            row(RegionKind::Sidewalk, &c.rect);
        }
        for st in self.streets() {
            row(RegionKind::Street, &st);
        }
        s
    }
}

/// True when the 2D projection of `p1`–`p2` passes through a building interior.
/// Buildings are treated as taller than every node.
pub fn segment_blocked(p1: Point3, p2: Point3, layout: &GridLayout) -> bool {
    let (a, b) = (p1.xy(), p2.xy());
    layout
        .blocks()
        .iter()
        .any(|r| r.interior_overlap(a, b) > 1e-9)
}
