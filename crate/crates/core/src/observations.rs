//! Observation encoders built from a single laser scan.
//!
//! * [`continuous_transform`]: misses become a far range, ranges are
//!   inverted, min-pooled in pairs and trimmed to 256 values.
//! * [`render_projection`]: a 20 m x 12 m local map at 10 cm/px with the
//!   robot 2 m from the top edge and 10 m from the left. Returns are
//!   inflated into red discs, a black band marks the cells at the target
//!   shore distance from the nearest return, and the 200x120 canvas is
//!   box-filtered down to 64x64.
//!
//! Canvas axes: rows grow in the direction of travel, columns grow to port.
//! Pixel `(col, row)` is the point `((row - robot_row) * res, (col - robot_col) * res)`
//! in the sensor frame (x forward, y port).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::lidar::{LaserScan, BEAM_COUNT, RANGE_MIN};

/// Range substituted for beams with no return, m.
pub const MISS_RANGE: f64 = 100.0;
pub const POOL_STRIDE: usize = 2;
pub const TRIM_PER_SIDE: usize = 7;
pub const CONTINUOUS_LEN: usize = BEAM_COUNT / POOL_STRIDE - 2 * TRIM_PER_SIDE;

pub const WATER_RGB: [u8; 3] = [0, 0, 255];
pub const OBSTACLE_RGB: [u8; 3] = [255, 0, 0];
pub const TRACK_RGB: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContinuousScan {
    pub values: Vec<f64>,
}

/// Inverted, min-pooled, trimmed scan of length [`CONTINUOUS_LEN`].
pub fn continuous_transform(scan: &LaserScan) -> Result<ContinuousScan> {
    if scan.ranges.len() != BEAM_COUNT {
        return Err(SimError::ScanLength {
            expected: BEAM_COUNT,
            got: scan.ranges.len(),
        });
    }
    let inverse = |r: f64| {
        let r = if r > 0.0 && r.is_finite() {
            r.max(RANGE_MIN)
        } else {
            MISS_RANGE
        };
        1.0 / r
    };
    let values = scan
        .ranges
        .chunks_exact(POOL_STRIDE)
        .map(|pair| inverse(pair[0]).min(inverse(pair[1])))
        .skip(TRIM_PER_SIDE)
        .take(CONTINUOUS_LEN)
        .collect();
    Ok(ContinuousScan { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    pub width_m: f64,
    pub height_m: f64,
    /// m per pixel
    pub resolution: f64,
    pub robot_col: usize,
    pub robot_row: usize,
    /// Radius of the disc drawn around each return, m.
    pub disc_radius_m: f64,
    pub track_width_m: f64,
    pub target_distance_m: f64,
    pub output_size: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            width_m: 20.0,
            height_m: 12.0,
            resolution: 0.1,
            robot_col: 100,
            robot_row: 20,
            disc_radius_m: 4.0,
            track_width_m: 1.0,
            target_distance_m: 10.0,
            output_size: 64,
        }
    }
}

impl ProjectionConfig {
    pub fn canvas_width(&self) -> usize {
        (self.width_m / self.resolution).round() as usize
    }

    pub fn canvas_height(&self) -> usize {
        (self.height_m / self.resolution).round() as usize
    }

    /// Sensor-frame return positions in fractional canvas pixels `(col, row)`.
    pub fn returns_in_pixels(&self, scan: &LaserScan) -> Vec<(f64, f64)> {
        scan.hit_points()
            .map(|p| {
                (
                    self.robot_col as f64 + p.y / self.resolution,
                    self.robot_row as f64 + p.x / self.resolution,
                )
            })
            .collect()
    }

    /// Disc radius, inner and outer track radii, in pixels.
    pub fn radii_px(&self) -> (f64, f64, f64) {
        let half = self.track_width_m / 2.0;
        (
            self.disc_radius_m / self.resolution,
            (self.target_distance_m - half) / self.resolution,
            (self.target_distance_m + half) / self.resolution,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelClass {
    Water,
    Obstacle,
    Track,
}

impl PixelClass {
    pub fn rgb(self) -> [u8; 3] {
        match self {
            PixelClass::Water => WATER_RGB,
            PixelClass::Obstacle => OBSTACLE_RGB,
            PixelClass::Track => TRACK_RGB,
        }
    }
}

/// Full-resolution class map, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<PixelClass>,
}

impl Canvas {
    pub fn get(&self, col: usize, row: usize) -> PixelClass {
        self.classes[row * self.width + col]
    }

    pub fn to_rgb(&self) -> Vec<u8> {
        self.classes.iter().flat_map(|c| c.rgb()).collect()
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ProjectionImage {
    pub fn pixel(&self, col: usize, row: usize) -> [u8; 3] {
        let i = 3 * (row * self.width + col);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Inclusive column interval of row pixels whose squared distance to
/// `cx` plus `dy2` passes the threshold. Matches the per-pixel predicate
/// exactly; the sqrt only seeds the search.
fn row_span(cx: f64, dy2: f64, r2: f64, strict: bool, width: usize) -> Option<(usize, usize)> {
    let pred = |c: i64| {
        let dx = c as f64 - cx;
        let d2 = dx * dx + dy2;
        if strict {
            d2 < r2
        } else {
            d2 <= r2
        }
    };
    let center = cx.round() as i64;
    if !pred(center) {
        return None;
    }
    let half = (r2 - dy2).max(0.0).sqrt();
    let mut lo = ((cx - half).ceil() as i64).min(center);
    while pred(lo - 1) {
        lo -= 1;
    }
    while !pred(lo) {
        lo += 1;
    }
    let mut hi = ((cx + half).floor() as i64).max(center);
    while pred(hi + 1) {
        hi += 1;
    }
    while !pred(hi) {
        hi -= 1;
    }
    let lo = lo.max(0);
    let hi = hi.min(width as i64 - 1);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Per-row coverage counts for discs around every return.
struct Coverage {
    width: usize,
    diff: Vec<i32>,
}

impl Coverage {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            diff: vec![0; (width + 1) * height],
        }
    }

    fn add_disc(&mut self, (cx, cy): (f64, f64), radius: f64, strict: bool) {
        let height = self.diff.len() / (self.width + 1);
        let r2 = radius * radius;
        let first = ((cy - radius).floor() - 1.0).max(0.0) as usize;
        let last = ((cy + radius).ceil() + 1.0).min(height as f64 - 1.0);
        if last < 0.0 {
            return;
        }
        for row in first..=(last as usize) {
            let dy = row as f64 - cy;
            if let Some((lo, hi)) = row_span(cx, dy * dy, r2, strict, self.width) {
                let base = row * (self.width + 1);
                self.diff[base + lo] += 1;
                self.diff[base + hi + 1] -= 1;
            }
        }
    }

    /// Coverage flags, row-major.
    fn resolve(&self) -> Vec<bool> {
        let height = self.diff.len() / (self.width + 1);
        let mut out = Vec::with_capacity(self.width * height);
        for row in 0..height {
            let mut acc = 0;
            for col in 0..self.width {
                acc += self.diff[row * (self.width + 1) + col];
                out.push(acc > 0);
            }
        }
        out
    }
}

/// Rasterizes the full-resolution class map. The track band is painted
/// after the discs, so it wins where they overlap.
pub fn render_canvas(scan: &LaserScan, cfg: &ProjectionConfig) -> Canvas {
    let (width, height) = (cfg.canvas_width(), cfg.canvas_height());
    let returns = cfg.returns_in_pixels(scan);
    let (disc, inner, outer) = cfg.radii_px();
    let mut red = Coverage::new(width, height);
    let mut near = Coverage::new(width, height);
    let mut reach = Coverage::new(width, height);
    for &p in &returns {
        red.add_disc(p, disc, false);
        near.add_disc(p, inner, true);
        reach.add_disc(p, outer, false);
    }
    let (red, near, reach) = (red.resolve(), near.resolve(), reach.resolve());
    let classes = (0..width * height)
        .map(|i| {
            if reach[i] && !near[i] {
                PixelClass::Track
            } else if red[i] {
                PixelClass::Obstacle
            } else {
                PixelClass::Water
            }
        })
        .collect();
    Canvas {
        width,
        height,
        classes,
    }
}

/// Overlap weights of each output cell along one axis.
fn box_weights(input: usize, output: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|j| {
            let (x0, x1) = (j as f64 * scale, (j + 1) as f64 * scale);
            let first = x0.floor() as usize;
            let last = (x1.ceil() as usize).min(input);
            (first..last)
                .filter_map(|c| {
                    let w = (x1.min(c as f64 + 1.0) - x0.max(c as f64)).max(0.0);
                    (w > 0.0).then_some((c, w))
                })
                .collect()
        })
        .collect()
}

/// Area-averaging resize of a row-major RGB buffer.
pub fn resize_area(rgb: &[u8], width: usize, height: usize, out_w: usize, out_h: usize) -> Vec<u8> {
    let wx = box_weights(width, out_w);
    let wy = box_weights(height, out_h);
    let area = (width as f64 / out_w as f64) * (height as f64 / out_h as f64);
    let mut out = Vec::with_capacity(out_w * out_h * 3);
    for ys in &wy {
        for xs in &wx {
            let mut acc = [0.0f64; 3];
            for &(r, w_r) in ys {
                for &(c, w_c) in xs {
                    let i = 3 * (r * width + c);
                    let w = w_r * w_c;
                    for ch in 0..3 {
                        acc[ch] += w * rgb[i + ch] as f64;
                    }
                }
            }
            out.extend(
                acc.iter()
                    .map(|a| (a / area).round().clamp(0.0, 255.0) as u8),
            );
        }
    }
    out
}

/// Full projection pipeline: rasterize, then box-filter to the output size.
pub fn render_projection(scan: &LaserScan, cfg: &ProjectionConfig) -> ProjectionImage {
    let canvas = render_canvas(scan, cfg);
    let pixels = resize_area(
        &canvas.to_rgb(),
        canvas.width,
        canvas.height,
        cfg.output_size,
        cfg.output_size,
    );
    ProjectionImage {
        width: cfg.output_size,
        height: cfg.output_size,
        pixels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMode {
    Projection,
    #[default]
    Continuous,
    Both,
}

impl ObservationMode {
    pub fn wants_continuous(self) -> bool {
        matches!(self, ObservationMode::Continuous | ObservationMode::Both)
    }

    pub fn wants_projection(self) -> bool {
        matches!(self, ObservationMode::Projection | ObservationMode::Both)
    }
}

/// Encoded observation; which fields are present depends on the mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub continuous: Option<ContinuousScan>,
    pub projection: Option<ProjectionImage>,
}

pub fn encode_observation(
    scan: &LaserScan,
    mode: ObservationMode,
    cfg: &ProjectionConfig,
) -> Result<Observation> {
    Ok(Observation {
        continuous: mode
            .wants_continuous()
            .then(|| continuous_transform(scan))
            .transpose()?,
        projection: mode
            .wants_projection()
            .then(|| render_projection(scan, cfg)),
    })
}
