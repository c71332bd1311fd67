//! Simulated 2D laser scanner: 540 beams over 270 degrees, 20 m range.
//! Beams that hit nothing report 0.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::VesselState;
use crate::geometry::{raycast_brute, Vec2};
use crate::world::Environment;

pub const BEAM_COUNT: usize = 540;
pub const ANGLE_MIN_DEG: f64 = -135.0;
pub const ANGLE_INCREMENT_DEG: f64 = 0.5;
pub const RANGE_MAX: f64 = 20.0;
/// Smallest range a noisy return may report, m.
pub const RANGE_MIN: f64 = 0.01;

/// Beam bearing relative to the heading, radians (positive to port).
#[inline]
pub fn beam_angle(i: usize) -> f64 {
    (ANGLE_MIN_DEG + ANGLE_INCREMENT_DEG * i as f64).to_radians()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub ranges: Vec<f64>,
}

impl LaserScan {
    pub fn new(ranges: Vec<f64>) -> Self {
        Self { ranges }
    }

    pub fn empty() -> Self {
        Self::new(vec![0.0; BEAM_COUNT])
    }

    pub fn angle_min(&self) -> f64 {
        ANGLE_MIN_DEG.to_radians()
    }

    pub fn angle_increment(&self) -> f64 {
        ANGLE_INCREMENT_DEG.to_radians()
    }

    pub fn range_max(&self) -> f64 {
        RANGE_MAX
    }

    /// Hit points in the sensor frame (x forward, y to port).
    pub fn hit_points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(i, &r)| Vec2::from_angle(beam_angle(i)) * r)
    }
}

/// Casts every beam from the vessel origin against all shorelines.
pub fn raycast_scan(env: &Environment, pose: &VesselState) -> LaserScan {
    let origin = pose.position();
    let grid = env.index();
    let ranges = (0..BEAM_COUNT)
        .map(|i| {
            let dir = Vec2::from_angle(pose.heading + beam_angle(i));
            grid.raycast(origin, dir, RANGE_MAX).unwrap_or(0.0)
        })
        .collect();
    LaserScan { ranges }
}

/// Same scan by testing every beam against every segment.
pub fn raycast_scan_brute(env: &Environment, pose: &VesselState) -> LaserScan {
    let origin = pose.position();
    let ranges = (0..BEAM_COUNT)
        .map(|i| {
            let dir = Vec2::from_angle(pose.heading + beam_angle(i));
            raycast_brute(env.segments(), origin, dir, RANGE_MAX).unwrap_or(0.0)
        })
        .collect();
    LaserScan { ranges }
}

/// Per-beam corruption standing in for vegetation and sensor artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarNoiseModel {
    pub dropout_prob: f64,
    /// m
    pub range_jitter_sigma: f64,
    /// Chance a beam passes through semi-transparent vegetation and is lost.
    pub passthrough_prob: f64,
}

impl LidarNoiseModel {
    pub fn is_identity(&self) -> bool {
        self.dropout_prob == 0.0 && self.range_jitter_sigma == 0.0 && self.passthrough_prob == 0.0
    }

    pub fn validate(&self) -> Result<(), String> {
        let p = |v: f64| (0.0..=1.0).contains(&v);
        if !p(self.dropout_prob) || !p(self.passthrough_prob) {
            return Err("noise probabilities must be in [0, 1]".into());
        }
        if !(self.range_jitter_sigma >= 0.0 && self.range_jitter_sigma.is_finite()) {
            return Err("range jitter sigma must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Each returned beam is dropped with `dropout_prob`, otherwise lost with
/// `passthrough_prob`, otherwise jittered and clamped to
/// `[RANGE_MIN, RANGE_MAX]`. Every beam consumes exactly three draws.
pub fn apply_noise<R: Rng + ?Sized>(
    scan: &LaserScan,
    model: &LidarNoiseModel,
    rng: &mut R,
) -> LaserScan {
    if model.is_identity() {
        return scan.clone();
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let ranges = scan
        .ranges
        .iter()
        .map(|&r| {
            let drop = rng.random::<f64>() < model.dropout_prob;
            let pass = rng.random::<f64>() < model.passthrough_prob;
            let z: f64 = normal.sample(rng);
            if drop || pass {
                0.0
            } else if r > 0.0 {
                (r + model.range_jitter_sigma * z).clamp(RANGE_MIN, RANGE_MAX)
            } else {
                0.0
            }
        })
        .collect();
    LaserScan { ranges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_lake, LakeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beam_layout() {
        assert_eq!(beam_angle(0), (-135.0f64).to_radians());
        assert!((beam_angle(BEAM_COUNT - 1) - 134.5f64.to_radians()).abs() < 1e-15);
        assert!((beam_angle(270)).abs() < 1e-15);
    }

    #[test]
    fn center_of_small_circle_sees_its_radius() {
        let env = Environment::circle(10.0).unwrap();
        let scan = raycast_scan(&env, &VesselState::at_rest(0.0, 0.0, 0.3));
        assert_eq!(scan.ranges.len(), BEAM_COUNT);
        // Chords of the polygonal circle sit at most R(1 - cos(pi/N)) inside.
        assert!(
            scan.ranges.iter().all(|&r| r <= 10.0 + 1e-12 && r > 9.96),
            "{:?}",
            &scan.ranges[..4]
        );
    }

    #[test]
    fn large_circle_is_out_of_range() {
        let env = Environment::circle(30.0).unwrap();
        let scan = raycast_scan(&env, &VesselState::at_rest(0.0, 0.0, 0.0));
        assert!(scan.ranges.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn grid_scan_matches_brute_force() {
        let env = generate_lake(3, &LakeSpec::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (lo, hi) = env.bounding_box();
        let mut n = 0;
        while n < 20 {
            let p = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            if !env.contains_water(p) {
                continue;
            }
            let pose = VesselState::at_rest(p.x, p.y, rng.random_range(-3.0..3.0));
            let fast = raycast_scan(&env, &pose);
            let slow = raycast_scan_brute(&env, &pose);
            for (a, b) in fast.ranges.iter().zip(&slow.ranges) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
            n += 1;
        }
    }

    #[test]
    fn scan_is_rotation_invariant() {
        let env = generate_lake(4, &LakeSpec::default()).unwrap();
        let angle = 0.83;
        let rotated = env.rotated(angle).unwrap();
        let p = Vec2::new(40.0, -25.0);
        assert!(env.contains_water(p));
        let a = raycast_scan(&env, &VesselState::at_rest(p.x, p.y, 0.4));
        let q = p.rotate(angle);
        let b = raycast_scan(&rotated, &VesselState::at_rest(q.x, q.y, 0.4 + angle));
        for (x, y) in a.ranges.iter().zip(&b.ranges) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn identity_noise_is_a_no_op() {
        let env = Environment::circle(15.0).unwrap();
        let scan = raycast_scan(&env, &VesselState::at_rest(3.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            apply_noise(&scan, &LidarNoiseModel::default(), &mut rng),
            scan
        );
    }

    #[test]
    fn full_dropout_zeroes_everything() {
        let scan = LaserScan::new(vec![5.0; BEAM_COUNT]);
        let model = LidarNoiseModel {
            dropout_prob: 1.0,
            ..Default::default()
        };
        let out = apply_noise(&scan, &model, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(out.ranges.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn dropout_rate_is_statistically_right() {
        let scan = LaserScan::new(vec![5.0; 10_000]);
        let model = LidarNoiseModel {
            dropout_prob: 0.1,
            ..Default::default()
        };
        let out = apply_noise(&scan, &model, &mut ChaCha8Rng::seed_from_u64(2));
        let rate = out.ranges.iter().filter(|&&r| r == 0.0).count() as f64 / 1e4;
        assert!((rate - 0.1).abs() <= 0.01, "{rate}");
    }

    #[test]
    fn jitter_stays_in_range_and_is_seeded() {
        let scan = LaserScan::new(
            (0..BEAM_COUNT)
                .map(|i| if i % 3 == 0 { 0.0 } else { 19.9 })
                .collect(),
        );
        let model = LidarNoiseModel {
            range_jitter_sigma: 0.5,
            ..Default::default()
        };
        let a = apply_noise(&scan, &model, &mut ChaCha8Rng::seed_from_u64(3));
        let b = apply_noise(&scan, &model, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        for (i, &r) in a.ranges.iter().enumerate() {
            if i % 3 == 0 {
                assert_eq!(r, 0.0);
            } else {
                assert!(r > 0.0 && r <= RANGE_MAX);
            }
        }
    }
}
