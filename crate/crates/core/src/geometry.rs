//! Planar vector math and a uniform-grid segment index.
//!
//! The index answers two exact queries over a fixed set of segments:
//! nearest point and first ray hit. Both return the same value the
//! brute-force scan in this module would, up to ties between segments that
//! meet at a shared vertex.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from +x.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Squared distance from `p` to the segment and the closest point on it.
    #[inline]
    pub fn closest_point(&self, p: Vec2) -> (f64, Vec2) {
        let e = self.b - self.a;
        let len_sq = e.norm_sq();
        let t = if len_sq > 0.0 {
            ((p - self.a).dot(e) / len_sq).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = self.a + e * t;
        ((p - q).norm_sq(), q)
    }

    /// Ray parameter of the intersection of `origin + t * dir` with this
    /// segment, if any with `t > 0`. Parallel rays never hit.
    #[inline]
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let e = self.b - self.a;
        let denom = dir.cross(e);
        if denom == 0.0 {
            return None;
        }
        let ao = self.a - origin;
        let t = ao.cross(e) / denom;
        let s = ao.cross(dir) / denom;
        if t > 0.0 && (0.0..=1.0).contains(&s) {
            Some(t)
        } else {
            None
        }
    }

    /// Proper or touching intersection test between two segments.
    pub fn intersects(&self, o: &Segment) -> bool {
        fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
            (b - a).cross(c - a)
        }
        fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
            p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
        }
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && on_segment(o.a, o.b, self.a))
            || (d2 == 0.0 && on_segment(o.a, o.b, self.b))
            || (d3 == 0.0 && on_segment(self.a, self.b, o.a))
            || (d4 == 0.0 && on_segment(self.a, self.b, o.b))
    }
}

/// Nearest point over all segments by exhaustive scan.
pub fn nearest_brute(segments: &[Segment], p: Vec2) -> (f64, Vec2) {
    let mut best = (f64::INFINITY, p);
    for s in segments {
        let (d2, q) = s.closest_point(p);
        if d2 < best.0 {
            best = (d2, q);
        }
    }
    (best.0.sqrt(), best.1)
}

/// First ray hit within `max_range` over all segments by exhaustive scan.
pub fn raycast_brute(segments: &[Segment], origin: Vec2, dir: Vec2, max_range: f64) -> Option<f64> {
    segments
        .iter()
        .filter_map(|s| s.ray_hit(origin, dir))
        .filter(|&t| t <= max_range)
        .min_by(|a, b| a.total_cmp(b))
}

/// Uniform grid over segment bounding boxes, stored in CSR layout.
#[derive(Debug, Clone, Default)]
pub struct SegmentGrid {
    segments: Vec<Segment>,
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl SegmentGrid {
    pub fn new(segments: Vec<Segment>, cell: f64) -> Self {
        assert!(cell > 0.0, "grid cell size must be positive");
        if segments.is_empty() {
            return Self {
                cell,
                offsets: vec![0],
                ..Default::default()
            };
        }
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in &segments {
            for p in [s.a, s.b] {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        // One cell of padding on each side keeps boundary points strictly inside.
        let origin = Vec2::new(lo.x - cell, lo.y - cell);
        let nx = ((hi.x - origin.x) / cell).floor() as usize + 2;
        let ny = ((hi.y - origin.y) / cell).floor() as usize + 2;

        let cell_range = |s: &Segment| {
            let x0 = ((s.a.x.min(s.b.x) - origin.x) / cell).floor() as usize;
            let x1 = ((s.a.x.max(s.b.x) - origin.x) / cell).floor() as usize;
            let y0 = ((s.a.y.min(s.b.y) - origin.y) / cell).floor() as usize;
            let y1 = ((s.a.y.max(s.b.y) - origin.y) / cell).floor() as usize;
            (x0, x1.min(nx - 1), y0, y1.min(ny - 1))
        };

        let mut counts = vec![0u32; nx * ny + 1];
        for s in &segments {
            let (x0, x1, y0, y1) = cell_range(s);
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    counts[iy * nx + ix + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut items = vec![0u32; *offsets.last().unwrap() as usize];
        for (k, s) in segments.iter().enumerate() {
            let (x0, x1, y0, y1) = cell_range(s);
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let c = iy * nx + ix;
                    items[fill[c] as usize] = k as u32;
                    fill[c] += 1;
                }
            }
        }
        Self {
            segments,
            origin,
            cell,
            nx,
            ny,
            offsets,
            items,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    #[inline]
    fn cell_items(&self, ix: usize, iy: usize) -> &[u32] {
        let c = iy * self.nx + ix;
        &self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    #[inline]
    fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.cell;
        let fy = (p.y - self.origin.y) / self.cell;
        if fx >= 0.0 && fy >= 0.0 && (fx as usize) < self.nx && (fy as usize) < self.ny {
            Some((fx as usize, fy as usize))
        } else {
            None
        }
    }

    /// Distance to the nearest segment and the closest point.
    pub fn nearest(&self, p: Vec2) -> (f64, Vec2) {
        let Some((cx, cy)) = self.cell_of(p) else {
            return nearest_brute(&self.segments, p);
        };
        let (cx, cy) = (cx as i64, cy as i64);
        let mut best_d2 = f64::INFINITY;
        let mut best_q = p;
        let max_ring = self.nx.max(self.ny) as i64;
        let visit = |ix: i64, iy: i64, best_d2: &mut f64, best_q: &mut Vec2| {
            if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
                return;
            }
            for &k in self.cell_items(ix as usize, iy as usize) {
                let (d2, q) = self.segments[k as usize].closest_point(p);
                if d2 < *best_d2 {
                    *best_d2 = d2;
                    *best_q = q;
                }
            }
        };
        for ring in 0..=max_ring {
            if ring == 0 {
                visit(cx, cy, &mut best_d2, &mut best_q);
            } else {
                for ix in (cx - ring)..=(cx + ring) {
                    visit(ix, cy - ring, &mut best_d2, &mut best_q);
                    visit(ix, cy + ring, &mut best_d2, &mut best_q);
                }
                for iy in (cy - ring + 1)..=(cy + ring - 1) {
                    visit(cx - ring, iy, &mut best_d2, &mut best_q);
                    visit(cx + ring, iy, &mut best_d2, &mut best_q);
                }
            }
            // Anything in ring + 1 or beyond is at least ring * cell away.
            let bound = ring as f64 * self.cell;
            if best_d2.is_finite() && best_d2 <= bound * bound {
                break;
            }
        }
        (best_d2.sqrt(), best_q)
    }

    /// First hit along `origin + t * dir` (unit `dir`) with `t <= max_range`.
    pub fn raycast(&self, origin: Vec2, dir: Vec2, max_range: f64) -> Option<f64> {
        let Some((mut ix, mut iy)) = self.cell_of(origin) else {
            return raycast_brute(&self.segments, origin, dir, max_range);
        };
        let step_x: i64 = if dir.x > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dir.y > 0.0 { 1 } else { -1 };
        let next_boundary = |i: usize, step: i64, o: f64, start: f64| {
            let edge = if step > 0 { i as f64 + 1.0 } else { i as f64 };
            start + edge * self.cell - o
        };
        let mut t_max_x = if dir.x != 0.0 {
            next_boundary(ix, step_x, origin.x, self.origin.x) / dir.x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dir.y != 0.0 {
            next_boundary(iy, step_y, origin.y, self.origin.y) / dir.y
        } else {
            f64::INFINITY
        };
        let t_delta_x = if dir.x != 0.0 {
            self.cell / dir.x.abs()
        } else {
            f64::INFINITY
        };
        let t_delta_y = if dir.y != 0.0 {
            self.cell / dir.y.abs()
        } else {
            f64::INFINITY
        };

        let mut best = f64::INFINITY;
        loop {
            for &k in self.cell_items(ix, iy) {
                if let Some(t) = self.segments[k as usize].ray_hit(origin, dir) {
                    if t <= max_range && t < best {
                        best = t;
                    }
                }
            }
            let t_exit = t_max_x.min(t_max_y);
            if best <= t_exit || t_exit > max_range {
                break;
            }
            if t_max_x < t_max_y {
                let n = ix as i64 + step_x;
                if n < 0 || n >= self.nx as i64 {
                    break;
                }
                ix = n as usize;
                t_max_x += t_delta_x;
            } else {
                let n = iy as i64 + step_y;
                if n < 0 || n >= self.ny as i64 {
                    break;
                }
                iy = n as usize;
                t_max_y += t_delta_y;
            }
        }
        best.is_finite().then_some(best)
    }
}

/// Wraps an angle into `[-pi, pi)`. Angles already in range are returned
/// unchanged.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    if (-PI..PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}
