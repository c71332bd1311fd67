//! 3-DOF planar model of a differential-thrust surface vessel.
//!
//! State is world pose plus body-frame velocities (surge `u`, sway `v`,
//! yaw rate `r`). Two fixed thrusters sit `hull_half_beam` either side of
//! the centerline. Drag acts on the velocity relative to the water and is
//! scaled by `(water_density / 1000) * extra_drag_factor`.
//!
//! Integration is semi-implicit Euler: yaw rate first, then the body-frame
//! velocity is rotated by the heading change (exact Coriolis transport),
//! surge/sway are updated with drag treated linearly-implicitly, and finally
//! the pose advances with the updated velocities. The implicit drag keeps
//! the update unconditionally stable and makes kinetic energy non-increasing
//! whenever thrust and current are zero.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Vec2};
use crate::randomization::EpisodeSetup;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VesselState {
    pub x: f64,
    pub y: f64,
    /// Radians in `[-pi, pi)`.
    pub heading: f64,
    /// Surge, m/s, forward positive.
    pub u: f64,
    /// Sway, m/s, port positive.
    pub v: f64,
    /// Yaw rate, rad/s, counter-clockwise positive.
    pub r: f64,
}

impl VesselState {
    pub fn at_rest(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
            ..Default::default()
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// World-frame velocity over ground.
    pub fn world_velocity(&self) -> Vec2 {
        Vec2::new(self.u, self.v).rotate(self.heading)
    }

    pub fn kinetic_energy(&self, p: &DynamicsParams) -> f64 {
        0.5 * p.mass * (self.u * self.u + self.v * self.v) + 0.5 * p.yaw_inertia * self.r * self.r
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.heading, self.u, self.v, self.r]
            .iter()
            .all(|f| f.is_finite())
    }
}

/// Normalized left/right thruster command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct ThrustCommand {
    pub left: f64,
    pub right: f64,
}

impl ThrustCommand {
    /// Clamps both channels into `[-1, 1]`. NaN maps to 0.
    pub fn new(left: f64, right: f64) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        Self {
            left: c(left),
            right: c(right),
        }
    }

    pub fn mirrored(self) -> Self {
        Self {
            left: self.right,
            right: self.left,
        }
    }
}

impl From<[f64; 2]> for ThrustCommand {
    fn from(v: [f64; 2]) -> Self {
        ThrustCommand::new(v[0], v[1])
    }
}

impl From<ThrustCommand> for [f64; 2] {
    fn from(c: ThrustCommand) -> Self {
        [c.left, c.right]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsParams {
    /// kg
    pub mass: f64,
    /// kg m^2
    pub yaw_inertia: f64,
    /// Lateral thruster offset, m.
    pub hull_half_beam: f64,
    /// Per-thruster saturation thrust, N.
    pub max_thrust_fwd: f64,
    pub max_thrust_rev: f64,
    pub thrust_deadband: f64,
    /// (surge, sway, yaw)
    pub linear_drag: [f64; 3],
    pub quadratic_drag: [f64; 3],
    /// kg/m^3
    pub water_density: f64,
    /// World-frame water velocity, m/s.
    pub current: [f64; 2],
    pub extra_drag_factor: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            mass: 35.0,
            yaw_inertia: 8.0,
            hull_half_beam: 0.35,
            max_thrust_fwd: 45.0,
            max_thrust_rev: 25.0,
            thrust_deadband: 0.1,
            linear_drag: [6.0, 12.0, 4.0],
            // Surge term calibrated for a 1.7 m/s terminal speed at full thrust.
            quadratic_drag: [27.6, 20.0, 6.0],
            water_density: 1000.0,
            current: [0.0, 0.0],
            extra_drag_factor: 1.0,
        }
    }
}

impl DynamicsParams {
    pub fn drag_scale(&self) -> f64 {
        self.water_density / 1000.0 * self.extra_drag_factor
    }

    /// Effective (surge, sway, yaw) drag coefficients for a relative
    /// velocity; drag force on each axis is `-coeff * rel`.
    #[inline]
    pub fn drag_coefficients(&self, rel: [f64; 3]) -> [f64; 3] {
        let s = self.drag_scale();
        [
            s * (self.linear_drag[0] + self.quadratic_drag[0] * rel[0].abs()),
            s * (self.linear_drag[1] + self.quadratic_drag[1] * rel[1].abs()),
            s * (self.linear_drag[2] + self.quadratic_drag[2] * rel[2].abs()),
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.mass,
            self.yaw_inertia,
            self.hull_half_beam,
            self.max_thrust_fwd,
            self.max_thrust_rev,
            self.thrust_deadband,
            self.water_density,
            self.extra_drag_factor,
        ]
        .iter()
        .chain(&self.linear_drag)
        .chain(&self.quadratic_drag)
        .chain(&self.current)
        .all(|v| v.is_finite());
        if !finite {
            return Err("dynamics parameters must be finite".into());
        }
        if self.mass <= 0.0 || self.yaw_inertia <= 0.0 {
            return Err("mass and yaw inertia must be positive".into());
        }
        if self
            .linear_drag
            .iter()
            .chain(&self.quadratic_drag)
            .any(|&c| c < 0.0)
        {
            return Err("drag coefficients must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.thrust_deadband) {
            return Err("thrust deadband must be in [0, 1)".into());
        }
        if self.max_thrust_fwd < 0.0 || self.max_thrust_rev < 0.0 {
            return Err("thrust limits must be non-negative".into());
        }
        if self.water_density <= 0.0 || self.extra_drag_factor < 1.0 {
            return Err("water density must be positive and extra drag factor >= 1".into());
        }
        Ok(())
    }
}

/// Thruster force for a normalized command: zero inside the deadband,
/// quadratic ramp to the (asymmetric) saturation limit outside it.
#[inline]
pub fn thrust_force(cmd: f64, params: &DynamicsParams) -> f64 {
    let cmd = if cmd.is_nan() {
        0.0
    } else {
        cmd.clamp(-1.0, 1.0)
    };
    let mag = cmd.abs();
    if mag < params.thrust_deadband || mag == 0.0 {
        return 0.0;
    }
    let ramp = (mag - params.thrust_deadband) / (1.0 - params.thrust_deadband);
    if cmd > 0.0 {
        params.max_thrust_fwd * ramp * ramp
    } else {
        -params.max_thrust_rev * ramp * ramp
    }
}

/// Advances the vessel by one integration step of `dt` seconds.
pub fn step_dynamics(
    state: &VesselState,
    cmd: ThrustCommand,
    params: &DynamicsParams,
    dt: f64,
) -> VesselState {
    let f_left = thrust_force(cmd.left, params);
    let f_right = thrust_force(cmd.right, params);

    // Yaw. Uniform current carries no rotation, so relative yaw rate is r.
    let moment = (f_right - f_left) * params.hull_half_beam;
    let k_r = params.drag_coefficients([0.0, 0.0, state.r])[2];
    let r = (state.r + dt * moment / params.yaw_inertia) / (1.0 + dt * k_r / params.yaw_inertia);

    // Transport body velocity into the rotated frame.
    let dpsi = r * dt;
    let (s, c) = dpsi.sin_cos();
    let u0 = c * state.u + s * state.v;
    let v0 = -s * state.u + c * state.v;
    let heading = state.heading + dpsi;

    let (sh, ch) = heading.sin_cos();
    let cur_u = ch * params.current[0] + sh * params.current[1];
    let cur_v = -sh * params.current[0] + ch * params.current[1];
    let k = params.drag_coefficients([u0 - cur_u, v0 - cur_v, 0.0]);
    let m = params.mass;
    let u = (u0 + dt * (f_left + f_right + k[0] * cur_u) / m) / (1.0 + dt * k[0] / m);
    let v = (v0 + dt * (k[1] * cur_v) / m) / (1.0 + dt * k[1] / m);

    VesselState {
        x: state.x + dt * (ch * u - sh * v),
        y: state.y + dt * (sh * u + ch * v),
        heading: wrap_angle(heading),
        u,
        v,
        r,
    }
}

/// Holds `cmd` for `substeps` integration steps spanning `control_dt`.
pub fn advance(
    state: &VesselState,
    cmd: ThrustCommand,
    params: &DynamicsParams,
    control_dt: f64,
    substeps: usize,
) -> VesselState {
    let dt = control_dt / substeps as f64;
    let mut s = *state;
    for _ in 0..substeps {
        s = step_dynamics(&s, cmd, params, dt);
    }
    s
}

/// Copies the per-episode water density and current into `params`.
pub fn set_episode_physics(params: &DynamicsParams, setup: &EpisodeSetup) -> DynamicsParams {
    DynamicsParams {
        water_density: setup.water_density,
        current: setup.current,
        ..*params
    }
}
