//! Slow, independently written reference implementations.
#![allow(dead_code)]

use rand::Rng;
use shoresim::geometry::Segment;
use shoresim::observations::{PixelClass, ProjectionConfig};

pub const BEAMS: usize = 540;

/// Continuous encoding, one pipeline stage at a time.
pub fn continuous_oracle(ranges: &[f64]) -> Vec<f64> {
    let mut stage1 = Vec::new();
    for &r in ranges {
        let missing = r.is_nan() || r <= 0.0 || r.is_infinite();
        stage1.push(if missing { 100.0 } else { r });
    }
    let mut stage2 = Vec::new();
    for r in stage1 {
        let clamped = if r < 0.01 { 0.01 } else { r };
        stage2.push(1.0 / clamped);
    }
    let mut stage3 = Vec::new();
    let mut i = 0;
    while i + 1 < stage2.len() {
        stage3.push(if stage2[i] < stage2[i + 1] {
            stage2[i]
        } else {
            stage2[i + 1]
        });
        i += 2;
    }
    stage3[7..stage3.len() - 7].to_vec()
}

fn beam_bearing(i: usize) -> f64 {
    (-135.0 + 0.5 * i as f64).to_radians()
}

/// Full-resolution class map by scanning every pixel against every return.
pub fn canvas_oracle(ranges: &[f64], cfg: &ProjectionConfig) -> Vec<PixelClass> {
    let width = (cfg.width_m / cfg.resolution).round() as usize;
    let height = (cfg.height_m / cfg.resolution).round() as usize;
    let hits: Vec<(f64, f64)> = ranges
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(i, &r)| {
            let a = beam_bearing(i);
            let forward = r * a.cos();
            let port = r * a.sin();
            (
                cfg.robot_col as f64 + port / cfg.resolution,
                cfg.robot_row as f64 + forward / cfg.resolution,
            )
        })
        .collect();
    let disc = cfg.disc_radius_m / cfg.resolution;
    let inner = (cfg.target_distance_m - cfg.track_width_m / 2.0) / cfg.resolution;
    let outer = (cfg.target_distance_m + cfg.track_width_m / 2.0) / cfg.resolution;
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let mut best = f64::INFINITY;
            for &(cx, cy) in &hits {
                let dx = col as f64 - cx;
                let dy = row as f64 - cy;
                let d2 = dx * dx + dy * dy;
                if d2 < best {
                    best = d2;
                }
            }
            let class = if best >= inner * inner && best <= outer * outer {
                PixelClass::Track
            } else if best <= disc * disc {
                PixelClass::Obstacle
            } else {
                PixelClass::Water
            };
            out.push(class);
        }
    }
    out
}

/// Random scan: a mix of misses, close returns and far returns.
pub fn random_scan<R: Rng>(rng: &mut R) -> Vec<f64> {
    let miss_rate = rng.random_range(0.0..0.9);
    (0..BEAMS)
        .map(|_| {
            let u: f64 = rng.random();
            if u < miss_rate {
                0.0
            } else if u < miss_rate + 0.02 {
                rng.random_range(0.0001..0.05)
            } else {
                rng.random_range(0.05..=20.0)
            }
        })
        .collect()
}

/// Nearest ray hit by solving origin + t*dir = a + s*(b - a) for every segment.
pub fn ray_oracle(segments: &[Segment], ox: f64, oy: f64, heading: f64, max_range: f64) -> f64 {
    let (dy, dx) = heading.sin_cos();
    let mut best = f64::INFINITY;
    for seg in segments {
        let (ex, ey) = (seg.b.x - seg.a.x, seg.b.y - seg.a.y);
        let det = dx * (-ey) - dy * (-ex);
        if det == 0.0 {
            continue;
        }
        let (rx, ry) = (seg.a.x - ox, seg.a.y - oy);
        let t = (rx * (-ey) - ry * (-ex)) / det;
        let s = (dx * ry - dy * rx) / det;
        if t > 0.0 && (0.0..=1.0).contains(&s) && t < best {
            best = t;
        }
    }
    if best <= max_range {
        best
    } else {
        0.0
    }
}

/// Scan built from [`ray_oracle`].
pub fn scan_oracle(segments: &[Segment], x: f64, y: f64, heading: f64) -> Vec<f64> {
    (0..BEAMS)
        .map(|i| ray_oracle(segments, x, y, heading + beam_bearing(i), 20.0))
        .collect()
}

/// Mean and population standard deviation, two-pass.
pub fn stats_oracle(xs: &[f64]) -> (f64, f64) {
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let mean = sum / xs.len() as f64;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - mean).powi(2);
    }
    (mean, (ss / xs.len() as f64).sqrt())
}
