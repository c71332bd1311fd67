//! Shoreline geometry: closed polylines for the lake boundary and islands,
//! procedural lake/channel generators, test fixtures, shore distance and
//! containment queries, and spawn sampling.
//!
//! Every shoreline is stored with the water on its left: the boundary runs
//! counter-clockwise, islands run clockwise.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{wrap_angle, Segment, SegmentGrid, Vec2};

/// Largest allowed gap between consecutive shoreline vertices, m.
pub const MAX_VERTEX_SPACING: f64 = 2.0;
/// Minimum shore clearance for a valid spawn, m.
pub const HULL_CLEARANCE: f64 = 0.7;
const MIN_VERTICES: usize = 8;
const GRID_CELL: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShoreKind {
    Boundary,
    Island,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shoreline {
    pub kind: ShoreKind,
    pub vertices: Vec<Vec2>,
}

impl Shoreline {
    /// Builds a closed shoreline: densifies to [`MAX_VERTEX_SPACING`],
    /// orients it water-on-left and checks it is simple.
    pub fn new(kind: ShoreKind, vertices: Vec<Vec2>) -> Result<Self> {
        let invalid =
            |reason: &str| SimError::InvalidConfig(format!("{kind:?} shoreline: {reason}"));
        if vertices.len() < MIN_VERTICES {
            return Err(invalid("needs at least 8 vertices"));
        }
        if !vertices.iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite vertex"));
        }
        let mut vertices = densify(&vertices, MAX_VERTEX_SPACING);
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(invalid("zero area"));
        }
        let want_ccw = kind == ShoreKind::Boundary;
        if (area > 0.0) != want_ccw {
            vertices.reverse();
        }
        let shore = Self { kind, vertices };
        if !shore.is_simple() {
            return Err(invalid("self-intersecting"));
        }
        Ok(shore)
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|s| s.length()).sum()
    }

    pub fn max_spacing(&self) -> f64 {
        self.segments().map(|s| s.length()).fold(0.0, f64::max)
    }

    /// Brute-force check that no two non-adjacent segments touch.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<Segment> = self.segments().collect();
        let n = segs.len();
        let bbox: Vec<(Vec2, Vec2)> = segs
            .iter()
            .map(|s| {
                (
                    Vec2::new(s.a.x.min(s.b.x), s.a.y.min(s.b.y)),
                    Vec2::new(s.a.x.max(s.b.x), s.a.y.max(s.b.y)),
                )
            })
            .collect();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (bbox[i], bbox[j]);
                if a.1.x < b.0.x || b.1.x < a.0.x || a.1.y < b.0.y || b.1.y < a.0.y {
                    continue;
                }
                if segs[i].intersects(&segs[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for s in self.segments() {
            if (s.a.y > p.y) != (s.b.y > p.y) {
                let x = s.a.x + (p.y - s.a.y) * (s.b.x - s.a.x) / (s.b.y - s.a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Splits every edge of the closed polyline longer than `max_spacing`.
pub fn densify(vertices: &[Vec2], max_spacing: f64) -> Vec<Vec2> {
    let n = vertices.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        out.push(a);
        let len = a.distance(b);
        if len > max_spacing {
            let pieces = (len / max_spacing).ceil() as usize;
            for k in 1..pieces {
                out.push(a + (b - a) * (k as f64 / pieces as f64));
            }
        }
    }
    out
}

/// Nearest-shore query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoreDistance {
    pub distance: f64,
    pub nearest: Vec2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnvironmentDoc {
    name: String,
    boundary: Shoreline,
    #[serde(default)]
    islands: Vec<Shoreline>,
    #[serde(default)]
    perimeter: f64,
}

/// Immutable water region: one boundary plus any islands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentDoc", into = "EnvironmentDoc")]
pub struct Environment {
    name: String,
    boundary: Shoreline,
    islands: Vec<Shoreline>,
    perimeter: f64,
    index: SegmentGrid,
    bbox: (Vec2, Vec2),
}

impl TryFrom<EnvironmentDoc> for Environment {
    type Error = SimError;
    fn try_from(doc: EnvironmentDoc) -> Result<Self> {
        let boundary = Shoreline::new(ShoreKind::Boundary, doc.boundary.vertices)?;
        let islands = doc
            .islands
            .into_iter()
            .map(|s| Shoreline::new(ShoreKind::Island, s.vertices))
            .collect::<Result<Vec<_>>>()?;
        Environment::new(doc.name, boundary, islands)
    }
}

impl From<Environment> for EnvironmentDoc {
    fn from(env: Environment) -> Self {
        EnvironmentDoc {
            name: env.name,
            boundary: env.boundary,
            islands: env.islands,
            perimeter: env.perimeter,
        }
    }
}

impl PartialEq for Environment {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.boundary == other.boundary && self.islands == other.islands
    }
}

impl Environment {
    /// Validates that every island lies strictly inside the boundary and
    /// that no two shorelines touch.
    pub fn new(
        name: impl Into<String>,
        boundary: Shoreline,
        islands: Vec<Shoreline>,
    ) -> Result<Self> {
        if boundary.kind != ShoreKind::Boundary
            || islands.iter().any(|i| i.kind != ShoreKind::Island)
        {
            return Err(SimError::InvalidConfig(
                "shoreline kinds do not match their role".into(),
            ));
        }
        for (k, island) in islands.iter().enumerate() {
            if !island.vertices.iter().all(|&v| boundary.contains(v)) {
                return Err(SimError::InvalidConfig(format!(
                    "island {k} is not inside the boundary"
                )));
            }
            let others = std::iter::once(&boundary).chain(islands.iter().take(k));
            for other in others {
                if shorelines_touch(island, other) {
                    return Err(SimError::InvalidConfig(format!(
                        "island {k} touches another shoreline"
                    )));
                }
                if other.kind == ShoreKind::Island
                    && (other.contains(island.vertices[0]) || island.contains(other.vertices[0]))
                {
                    return Err(SimError::InvalidConfig(format!(
                        "island {k} is nested in another island"
                    )));
                }
            }
        }
        let segments: Vec<Segment> = std::iter::once(&boundary)
            .chain(&islands)
            .flat_map(|s| s.segments())
            .collect();
        let perimeter = segments.iter().map(|s| s.length()).sum();
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &boundary.vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        Ok(Self {
            name: name.into(),
            boundary,
            islands,
            perimeter,
            index: SegmentGrid::new(segments, GRID_CELL),
            bbox: (lo, hi),
        })
    }

    /// Circular lake centered on the origin.
    pub fn circle(radius: f64) -> Result<Self> {
        let n = ((TAU * radius / 1.5).ceil() as usize).max(MIN_VERTICES);
        let verts = (0..n)
            .map(|i| Vec2::from_angle(TAU * i as f64 / n as f64) * radius)
            .collect();
        Environment::new(
            format!("circle-{radius}"),
            Shoreline::new(ShoreKind::Boundary, verts)?,
            vec![],
        )
    }

    /// Axis-aligned rectangular basin centered on the origin.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        let (hx, hy) = (width / 2.0, height / 2.0);
        let corners = [
            Vec2::new(-hx, -hy),
            Vec2::new(hx, -hy),
            Vec2::new(hx, hy),
            Vec2::new(-hx, hy),
        ];
        let verts = densify(&corners, 1.5);
        Environment::new(
            format!("rectangle-{width}x{height}"),
            Shoreline::new(ShoreKind::Boundary, verts)?,
            vec![],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn boundary(&self) -> &Shoreline {
        &self.boundary
    }

    pub fn islands(&self) -> &[Shoreline] {
        &self.islands
    }

    pub fn shorelines(&self) -> impl Iterator<Item = &Shoreline> {
        std::iter::once(&self.boundary).chain(&self.islands)
    }

    /// Total shoreline length over boundary and islands, m.
    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// All shoreline segments, boundary first.
    pub fn segments(&self) -> &[Segment] {
        self.index.segments()
    }

    pub fn index(&self) -> &SegmentGrid {
        &self.index
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        self.bbox
    }

    pub fn contains_water(&self, p: Vec2) -> bool {
        let (lo, hi) = self.bbox;
        if p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y {
            return false;
        }
        self.boundary.contains(p) && !self.islands.iter().any(|i| i.contains(p))
    }

    /// Distance to the nearest shoreline segment with no containment check.
    #[inline]
    pub fn nearest_shore(&self, p: Vec2) -> ShoreDistance {
        let (distance, nearest) = self.index.nearest(p);
        ShoreDistance { distance, nearest }
    }

    /// Distance to the nearest shoreline; errors for points on land.
    pub fn distance_to_shore(&self, p: Vec2) -> Result<ShoreDistance> {
        if !self.contains_water(p) {
            return Err(SimError::OutsideWater(p));
        }
        Ok(self.nearest_shore(p))
    }

    /// Rigid rotation about the origin; used for invariance checks.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let rot = |s: &Shoreline| {
            Shoreline::new(s.kind, s.vertices.iter().map(|v| v.rotate(angle)).collect())
        };
        Environment::new(
            self.name.clone(),
            rot(&self.boundary)?,
            self.islands.iter().map(rot).collect::<Result<Vec<_>>>()?,
        )
    }
}

fn shorelines_touch(a: &Shoreline, b: &Shoreline) -> bool {
    let grid = SegmentGrid::new(b.segments().collect(), GRID_CELL);
    a.segments().any(|s| {
        // A crossing puts one endpoint within half a segment length of b.
        let mid = (s.a + s.b) * 0.5;
        let (d, _) = grid.nearest(mid);
        d <= s.length() && b.segments().any(|t| s.intersects(&t))
    })
}

/// Minimum distance between two closed polylines.
fn polyline_gap(a: &Shoreline, b_grid: &SegmentGrid, b: &Shoreline) -> f64 {
    let a_grid = SegmentGrid::new(a.segments().collect(), GRID_CELL);
    let from_a = a
        .vertices
        .iter()
        .map(|&v| b_grid.nearest(v).0)
        .fold(f64::INFINITY, f64::min);
    let from_b = b
        .vertices
        .iter()
        .map(|&v| a_grid.nearest(v).0)
        .fold(f64::INFINITY, f64::min);
    from_a.min(from_b)
}

/// Parameters for [`generate_lake`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LakeSpec {
    /// m
    pub base_radius: f64,
    /// Peak radial perturbation as a fraction of `base_radius`.
    pub noise_amplitude: f64,
    /// Number of low-frequency harmonics in the radial perturbation.
    pub noise_harmonics: usize,
    pub hairpin: bool,
    /// Radial depth of the land spit that forms the hairpin, m.
    pub hairpin_depth: f64,
    /// Spit width at half depth, m.
    pub hairpin_throat: f64,
    pub island: bool,
    /// Mean island radius, m.
    pub island_radius: f64,
    /// Allowed width of the passage between island and shore, m.
    pub min_passage: f64,
    pub max_passage: f64,
    /// Target vertex spacing before densification, m.
    pub vertex_spacing: f64,
}

impl Default for LakeSpec {
    fn default() -> Self {
        Self {
            base_radius: 180.0,
            noise_amplitude: 0.12,
            noise_harmonics: 6,
            hairpin: true,
            hairpin_depth: 50.0,
            hairpin_throat: 10.0,
            island: true,
            island_radius: 7.0,
            min_passage: 15.0,
            max_passage: 25.0,
            vertex_spacing: 1.5,
        }
    }
}

impl LakeSpec {
    /// Plain circle with no perturbation or fixtures.
    pub fn plain(radius: f64) -> Self {
        Self {
            base_radius: radius,
            noise_amplitude: 0.0,
            hairpin: false,
            island: false,
            ..Default::default()
        }
    }
}

struct Harmonics(Vec<(f64, f64, f64)>);

impl Harmonics {
    /// Random harmonics `k = 2..` with weights normalized to sum to one.
    fn sample(rng: &mut ChaCha8Rng, count: usize, first: usize) -> Self {
        let mut h: Vec<(f64, f64, f64)> = (0..count)
            .map(|i| {
                let k = (first + i) as f64;
                (
                    k,
                    rng.random_range(0.5..1.0) / k,
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        let total: f64 = h.iter().map(|t| t.1).sum();
        if total > 0.0 {
            h.iter_mut().for_each(|t| t.1 /= total);
        }
        Self(h)
    }

    fn eval(&self, phase: f64) -> f64 {
        self.0
            .iter()
            .map(|&(k, w, p)| w * (k * phase + p).sin())
            .sum()
    }
}

/// Raised-cosine notch profile: 1 within `core`, falling to 0 over `edge`.
fn notch(phi: f64, core: f64, edge: f64) -> f64 {
    let a = phi.abs();
    if a <= core {
        1.0
    } else if a < core + edge {
        0.5 * (1.0 + (PI * (a - core) / edge).cos())
    } else {
        0.0
    }
}

/// Generates a lake: a seeded radially perturbed circle, optionally with a
/// narrow land spit (hairpin bend) and an island that leaves a passage of
/// `min_passage..=max_passage` to the shore. Identical inputs give an
/// identical environment. Failed attempts retry with the radial amplitude
/// damped, up to 8 attempts.
pub fn generate_lake(seed: u64, spec: &LakeSpec) -> Result<Environment> {
    if !(spec.base_radius > 0.0 && spec.vertex_spacing > 0.0 && spec.noise_amplitude >= 0.0) {
        return Err(SimError::InvalidConfig(
            "lake radius, spacing and amplitude must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radial = Harmonics::sample(&mut rng, spec.noise_harmonics, 2);
    let island_shape = Harmonics::sample(&mut rng, 3, 2);
    let hairpin_angle = rng.random_range(-PI..PI);
    let island_angle = hairpin_angle + PI + rng.random_range(-PI / 4.0..PI / 4.0);

    const ATTEMPTS: usize = 8;
    let mut amplitude = spec.noise_amplitude;
    let mut last_err = String::new();
    for _ in 0..ATTEMPTS {
        match build_lake(
            seed,
            spec,
            amplitude,
            &radial,
            &island_shape,
            hairpin_angle,
            island_angle,
        ) {
            Ok(env) => return Ok(env),
            Err(e) => {
                last_err = e.to_string();
                amplitude *= 0.6;
            }
        }
    }
    Err(SimError::GenerationFailed {
        attempts: ATTEMPTS,
        reason: last_err,
    })
}

fn build_lake(
    seed: u64,
    spec: &LakeSpec,
    amplitude: f64,
    radial: &Harmonics,
    island_shape: &Harmonics,
    hairpin_angle: f64,
    island_angle: f64,
) -> Result<Environment> {
    let big_r = spec.base_radius;
    let base = |theta: f64| big_r * (1.0 + amplitude * radial.eval(theta));

    // Hairpin spit: width at half depth equals the throat.
    let mid_radius = base(hairpin_angle) - spec.hairpin_depth / 2.0;
    let half_mid = spec.hairpin_throat / 2.0 / mid_radius.max(1.0);
    let (core, edge) = (half_mid / 2.0, half_mid);
    let radius = |theta: f64| {
        let mut r = base(theta);
        if spec.hairpin {
            r -= spec.hairpin_depth * notch(wrap_angle(theta - hairpin_angle), core, edge);
        }
        r
    };

    let coarse = spec.vertex_spacing / (big_r * (1.0 + amplitude));
    let mut thetas = Vec::new();
    let mut t = 0.0;
    while t < TAU {
        let near_spit = spec.hairpin && wrap_angle(t - hairpin_angle).abs() < core + edge + coarse;
        thetas.push(t);
        t += if near_spit { coarse / 16.0 } else { coarse };
    }
    let mut verts = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let r = radius(theta);
        if r < 0.2 * big_r {
            return Err(SimError::InvalidConfig(format!(
                "radius collapses to {r:.2} m"
            )));
        }
        verts.push(Vec2::from_angle(theta) * r);
    }
    let boundary = Shoreline::new(ShoreKind::Boundary, verts)?;

    let mut islands = Vec::new();
    if spec.island {
        islands.push(place_island(spec, &boundary, island_shape, island_angle)?);
    }
    let name = format!("lake-{seed}");
    Environment::new(name, boundary, islands)
}

fn place_island(
    spec: &LakeSpec,
    boundary: &Shoreline,
    shape: &Harmonics,
    angle: f64,
) -> Result<Shoreline> {
    let n = ((TAU * spec.island_radius * 1.3 / spec.vertex_spacing).ceil() as usize).max(16);
    let outline: Vec<Vec2> = (0..n)
        .map(|i| {
            let phi = TAU * i as f64 / n as f64;
            Vec2::from_angle(phi) * (spec.island_radius * (1.0 + 0.25 * shape.eval(phi)))
        })
        .collect();
    let dir = Vec2::from_angle(angle);
    let at = |c: f64| -> Result<Shoreline> {
        Shoreline::new(
            ShoreKind::Island,
            outline.iter().map(|&v| v + dir * c).collect(),
        )
    };
    let boundary_grid = SegmentGrid::new(boundary.segments().collect(), GRID_CELL);
    let gap = |c: f64| -> Result<f64> {
        let island = at(c)?;
        if !island.vertices.iter().all(|&v| boundary.contains(v)) {
            return Ok(0.0);
        }
        Ok(polyline_gap(&island, &boundary_grid, boundary))
    };

    let target = 0.5 * (spec.min_passage + spec.max_passage);
    let mut lo = 0.0;
    let mut hi = boundary_grid
        .raycast(Vec2::ZERO, dir, f64::INFINITY)
        .unwrap_or(spec.base_radius);
    let c = if gap(lo)? <= target {
        lo
    } else {
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if gap(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let achieved = gap(c)?;
    if achieved < spec.min_passage || achieved > spec.max_passage {
        return Err(SimError::InvalidConfig(format!(
            "island passage {achieved:.2} m outside [{}, {}]",
            spec.min_passage, spec.max_passage
        )));
    }
    at(c)
}

/// Parameters for [`generate_channel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSpec {
    /// m
    pub length: f64,
    /// Mean bank-to-bank width, m.
    pub width: f64,
    /// Peak bank perturbation, m.
    pub amplitude: f64,
    pub harmonics: usize,
    pub vertex_spacing: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            length: 300.0,
            width: 50.0,
            amplitude: 6.0,
            harmonics: 4,
            vertex_spacing: 1.5,
        }
    }
}

/// River-like channel: two perturbed, roughly parallel banks joined by
/// straight end caps into one closed boundary.
pub fn generate_channel(seed: u64, spec: &ChannelSpec) -> Result<Environment> {
    if spec.amplitude * 2.0 >= spec.width / 2.0 {
        return Err(SimError::InvalidConfig(
            "channel amplitude too large for its width".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = Harmonics::sample(&mut rng, spec.harmonics, 1);
    let lower = Harmonics::sample(&mut rng, spec.harmonics, 1);
    let n = (spec.length / spec.vertex_spacing).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| spec.length * i as f64 / n as f64).collect();
    let phase = |x: f64| TAU * x / spec.length;
    let mut verts: Vec<Vec2> = xs
        .iter()
        .map(|&x| Vec2::new(x, -spec.width / 2.0 + spec.amplitude * lower.eval(phase(x))))
        .collect();
    verts.extend(
        xs.iter()
            .rev()
            .map(|&x| Vec2::new(x, spec.width / 2.0 + spec.amplitude * upper.eval(phase(x)))),
    );
    Environment::new(
        format!("channel-{seed}"),
        Shoreline::new(ShoreKind::Boundary, verts)?,
        vec![],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HeadingPolicy {
    /// Within `max_deviation` radians of the local shore tangent, shore on port.
    AlongShore {
        max_deviation: f64,
    },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnPolicy {
    pub min_distance: f64,
    pub max_distance: f64,
    pub heading: HeadingPolicy,
}

impl SpawnPolicy {
    pub fn moderate() -> Self {
        Self {
            min_distance: 6.0,
            max_distance: 16.0,
            heading: HeadingPolicy::AlongShore {
                max_deviation: 30f64.to_radians(),
            },
        }
    }

    pub fn aggressive() -> Self {
        Self {
            min_distance: 2.0,
            max_distance: 30.0,
            heading: HeadingPolicy::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub shore_distance_at_spawn: f64,
}

/// Rejection-samples a spawn pose. A target distance is drawn uniformly from
/// the policy range, a shore point is drawn uniformly along the shoreline,
/// and the candidate sits that far along the inward normal; it is accepted
/// when that shore point is really the nearest one.
/// Point along the inward normal from `foot` whose shore distance equals
/// `target`. Shore distance is 1-Lipschitz and zero at the foot, so the
/// crossing lies at or beyond `target` along the ray.
fn point_at_distance(env: &Environment, foot: Vec2, normal: Vec2, target: f64) -> Option<Vec2> {
    let dist = |s: f64| {
        let p = foot + normal * s;
        env.contains_water(p).then(|| env.nearest_shore(p).distance)
    };
    let mut lo = target;
    let mut hi = target;
    let mut d_hi = dist(hi)?;
    while d_hi < target {
        lo = hi;
        hi *= 1.1;
        if hi > 2.0 * target {
            return None;
        }
        d_hi = dist(hi)?;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match dist(mid) {
            Some(d) if d < target => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Some(foot + normal * hi)
}

pub fn sample_spawn<R: Rng + ?Sized>(
    env: &Environment,
    rng: &mut R,
    policy: &SpawnPolicy,
) -> Result<SpawnPose> {
    const TRIES: usize = 1000;
    if !(policy.min_distance <= policy.max_distance && policy.max_distance > HULL_CLEARANCE) {
        return Err(SimError::InvalidConfig(
            "spawn distance range is empty".into(),
        ));
    }
    let segments = env.segments();
    let cumulative: Vec<f64> = segments
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s.length();
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap_or(&0.0);
    for _ in 0..TRIES {
        let target = rng.random_range(policy.min_distance..=policy.max_distance);
        let along = rng.random_range(0.0..total);
        let heading_draw: f64 = rng.random_range(-1.0..1.0);
        let k = cumulative
            .partition_point(|&c| c <= along)
            .min(segments.len() - 1);
        let seg = segments[k];
        let start = if k == 0 { 0.0 } else { cumulative[k - 1] };
        let e = seg.b - seg.a;
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        let foot = seg.a + e * ((along - start) / len).clamp(0.0, 1.0);
        let Some(p) = point_at_distance(env, foot, e.perp() / len, target) else {
            continue;
        };
        let near = env.nearest_shore(p);
        let d = near.distance;
        if d < policy.min_distance || d > policy.max_distance || d <= HULL_CLEARANCE {
            continue;
        }
        let heading = match policy.heading {
            HeadingPolicy::AlongShore { max_deviation } => {
                let to_shore = near.nearest - p;
                wrap_angle(to_shore.angle() - PI / 2.0 + heading_draw * max_deviation)
            }
            HeadingPolicy::Uniform => wrap_angle(heading_draw * PI),
        };
        return Ok(SpawnPose {
            x: p.x,
            y: p.y,
            heading,
            shore_distance_at_spawn: d,
        });
    }
    Err(SimError::SpawnFailed { tries: TRIES })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::nearest_brute;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_vertex_distance(env: &Environment, p: Vec2) -> f64 {
        env.shorelines()
            .flat_map(|s| s.vertices.iter())
            .map(|v| v.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn plain_lake_is_a_circle() {
        let env = generate_lake(1, &LakeSpec::plain(80.0)).unwrap();
        let expected = TAU * 80.0;
        assert!(((env.perimeter() - expected) / expected).abs() < 1e-3);
        assert!(env
            .boundary()
            .vertices
            .iter()
            .all(|v| (v.norm() - 80.0).abs() < 1e-9));
        let d = env.distance_to_shore(Vec2::ZERO).unwrap().distance;
        assert!((d - 80.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = LakeSpec::default();
        let a = generate_lake(7, &spec).unwrap();
        let b = generate_lake(7, &spec).unwrap();
        assert_eq!(a.boundary().vertices, b.boundary().vertices);
        assert_eq!(a.islands(), b.islands());
        let c = generate_lake(8, &spec).unwrap();
        assert_ne!(a.boundary().vertices, c.boundary().vertices);
    }

    #[test]
    fn default_lake_has_realistic_shoreline_length() {
        for seed in 0..5 {
            let env = generate_lake(seed, &LakeSpec::default()).unwrap();
            let p = env.perimeter();
            assert!((1000.0..=1800.0).contains(&p), "seed {seed}: {p}");
            assert_eq!(env.islands().len(), 1);
        }
    }

    #[test]
    fn generated_shorelines_satisfy_invariants() {
        for seed in 0..6 {
            let env = generate_lake(seed, &LakeSpec::default()).unwrap();
            for s in env.shorelines() {
                assert!(s.vertices.len() >= 8);
                assert!(s.max_spacing() <= MAX_VERTEX_SPACING + 1e-9);
                assert!(s.is_simple());
            }
            let island = &env.islands()[0];
            let grid = SegmentGrid::new(env.boundary().segments().collect(), GRID_CELL);
            let gap = polyline_gap(island, &grid, env.boundary());
            assert!((15.0..=25.0).contains(&gap), "seed {seed}: passage {gap}");
        }
    }

    #[test]
    fn hairpin_spit_is_narrow_land() {
        let spec = LakeSpec {
            island: false,
            noise_amplitude: 0.0,
            ..Default::default()
        };
        let env = generate_lake(3, &spec).unwrap();
        // Walk inward along the spit axis: land from the tip outwards.
        let min_r = env
            .boundary()
            .vertices
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min);
        assert!(
            (min_r - (spec.base_radius - spec.hairpin_depth)).abs() < 0.5,
            "{min_r}"
        );
        let tip = env
            .boundary()
            .vertices
            .iter()
            .min_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        let dir = *tip * (1.0 / tip.norm());
        let mid = dir * (spec.base_radius - spec.hairpin_depth / 2.0);
        assert!(!env.contains_water(mid));
        let (width, _) = nearest_brute(env.segments(), mid);
        assert!((2.0..=5.5).contains(&width), "half width {width}");
    }

    #[test]
    fn excessive_amplitude_is_damped_or_rejected() {
        let spec = LakeSpec {
            noise_amplitude: 1.6,
            hairpin: false,
            island: false,
            ..Default::default()
        };
        assert!(generate_lake(2, &spec).is_ok());
        let hopeless = LakeSpec {
            hairpin_depth: 500.0,
            island: false,
            ..Default::default()
        };
        assert!(matches!(
            generate_lake(2, &hopeless),
            Err(SimError::GenerationFailed { attempts: 8, .. })
        ));
    }

    #[test]
    fn channel_is_valid() {
        let env = generate_channel(4, &ChannelSpec::default()).unwrap();
        assert!(env.boundary().is_simple());
        assert!(env.contains_water(Vec2::new(150.0, 0.0)));
        assert!(!env.contains_water(Vec2::new(150.0, 60.0)));
    }

    #[test]
    fn distance_examples() {
        let env = Environment::rectangle(100.0, 40.0).unwrap();
        let d = env.distance_to_shore(Vec2::new(0.0, -15.0)).unwrap();
        assert!((d.distance - 5.0).abs() < 1e-12);
        assert!((d.nearest.y + 20.0).abs() < 1e-12);
        assert!(matches!(
            env.distance_to_shore(Vec2::new(0.0, 30.0)),
            Err(SimError::OutsideWater(_))
        ));
    }

    #[test]
    fn containment_examples() {
        let env = generate_lake(11, &LakeSpec::default()).unwrap();
        assert!(env.contains_water(Vec2::ZERO) || env.islands()[0].contains(Vec2::ZERO));
        assert!(!env.contains_water(Vec2::new(1e4, 0.0)));
        // Island built at known coordinates.
        let ring = |r: f64, c: Vec2, n: usize| {
            (0..n)
                .map(|i| c + Vec2::from_angle(TAU * i as f64 / n as f64) * r)
                .collect::<Vec<_>>()
        };
        let boundary = Shoreline::new(ShoreKind::Boundary, ring(50.0, Vec2::ZERO, 200)).unwrap();
        let island =
            Shoreline::new(ShoreKind::Island, ring(5.0, Vec2::new(20.0, 0.0), 30)).unwrap();
        let env = Environment::new("test", boundary, vec![island]).unwrap();
        assert!(!env.contains_water(Vec2::new(20.0, 0.0)));
        assert!(env.contains_water(Vec2::new(-20.0, 0.0)));
        assert!(env.distance_to_shore(Vec2::new(21.0, 1.0)).is_err());
    }

    #[test]
    fn rejects_island_outside_boundary() {
        let square = |c: Vec2, h: f64| {
            densify(
                &[
                    c + Vec2::new(-h, -h),
                    c + Vec2::new(h, -h),
                    c + Vec2::new(h, h),
                    c + Vec2::new(-h, h),
                ],
                1.0,
            )
        };
        let boundary = Shoreline::new(ShoreKind::Boundary, square(Vec2::ZERO, 10.0)).unwrap();
        let island = Shoreline::new(ShoreKind::Island, square(Vec2::new(30.0, 0.0), 2.0)).unwrap();
        assert!(Environment::new("bad", boundary, vec![island]).is_err());
    }

    #[test]
    fn json_round_trip_preserves_geometry() {
        let env = generate_lake(5, &LakeSpec::default()).unwrap();
        let json = serde_json::to_string(&env).unwrap();
        let back: Environment = serde_json::from_str(&json).unwrap();
        assert_eq!(env, back);
        assert_eq!(env.perimeter(), back.perimeter());
    }

    #[test]
    fn distance_agrees_with_vertex_scan() {
        let env = generate_lake(9, &LakeSpec::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lo, hi) = env.bounding_box();
        let mut checked = 0;
        while checked < 500 {
            let p = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            let Ok(d) = env.distance_to_shore(p) else {
                continue;
            };
            let by_vertex = brute_vertex_distance(&env, p);
            // Segment distance never exceeds vertex distance, and is at most
            // half a vertex spacing below it.
            assert!(d.distance <= by_vertex + 1e-12);
            assert!(by_vertex - d.distance <= MAX_VERTEX_SPACING / 2.0 + 1e-9);
            let (exact, _) = nearest_brute(env.segments(), p);
            assert!((exact - d.distance).abs() < 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn moderate_spawns_respect_range() {
        let env = generate_lake(2, &LakeSpec::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let policy = SpawnPolicy::moderate();
        for _ in 0..1000 {
            let s = sample_spawn(&env, &mut rng, &policy).unwrap();
            assert!((6.0..=16.0).contains(&s.shore_distance_at_spawn));
            let p = Vec2::new(s.x, s.y);
            assert!(env.contains_water(p));
            // Shore on the port side.
            let near = env.nearest_shore(p);
            let left = Vec2::from_angle(s.heading + PI / 2.0);
            assert!((near.nearest - p).dot(left) > 0.0);
        }
    }

    #[test]
    fn spawn_is_deterministic() {
        let env = Environment::circle(80.0).unwrap();
        let policy = SpawnPolicy::aggressive();
        let a = sample_spawn(&env, &mut ChaCha8Rng::seed_from_u64(4), &policy).unwrap();
        let b = sample_spawn(&env, &mut ChaCha8Rng::seed_from_u64(4), &policy).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggressive_spawn_distance_is_uniform() {
        // Kolmogorov-Smirnov against U[2, 30]; critical value at alpha=0.01
        // for n=2000 is 1.628 / sqrt(n).
        let env = Environment::circle(80.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let policy = SpawnPolicy::aggressive();
        let n = 2000;
        let mut d: Vec<f64> = (0..n)
            .map(|_| {
                sample_spawn(&env, &mut rng, &policy)
                    .unwrap()
                    .shore_distance_at_spawn
            })
            .collect();
        d.sort_by(f64::total_cmp);
        let ks = d
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = (x - 2.0) / 28.0;
                (cdf - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / (n as f64).sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn degenerate_spawn_fails() {
        let env = Environment::circle(5.0).unwrap();
        let policy = SpawnPolicy {
            min_distance: 20.0,
            max_distance: 30.0,
            heading: HeadingPolicy::Uniform,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_spawn(&env, &mut rng, &policy),
            Err(SimError::SpawnFailed { tries: 1000 })
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn shore_distance_is_lipschitz(
            ax in -150.0..150.0f64, ay in -150.0..150.0f64,
            dx in -20.0..20.0f64, dy in -20.0..20.0f64,
        ) {
            let env = default_env();
            let p = Vec2::new(ax, ay);
            let q = p + Vec2::new(dx, dy);
            let dp = env.nearest_shore(p).distance;
            let dq = env.nearest_shore(q).distance;
            prop_assert!((dp - dq).abs() <= p.distance(q) + 1e-9);
        }
    }

    fn default_env() -> &'static Environment {
        static ENV: std::sync::OnceLock<Environment> = std::sync::OnceLock::new();
        ENV.get_or_init(|| generate_lake(1, &LakeSpec::default()).unwrap())
    }
}
