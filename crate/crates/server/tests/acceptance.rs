//! Acceptance gate: one PASS/FAIL line per criterion. Exits non-zero on any
//! failure.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shoresim::agents::{PdConfig, ScriptedPd};
use shoresim::config::{EnvironmentSpec, RunConfig};
use shoresim::dynamics::{step_dynamics, DynamicsParams, ThrustCommand, VesselState};
use shoresim::engine::{aggregate_metrics_after, run_episode};
use shoresim::geometry::Vec2;
use shoresim::lidar::{raycast_scan, LaserScan};
use shoresim::mppi::{importance_weights, MppiAgent, MppiConfig};
use shoresim::observations::{continuous_transform, render_canvas, ProjectionConfig};
use shoresim::randomization::{sample_episode_setup, DrConfig};
use shoresim::reward::{compute_reward, RewardConfig};
use shoresim::world::{generate_channel, generate_lake, ChannelSpec, Environment, LakeSpec};
use shoresim_server::client::{run_remote_episode, RemoteEnv};
use shoresim_server::server;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn reward_suite() -> Outcome {
    let cfg = RewardConfig::default();
    let on = compute_reward(10.0, 1.0, &cfg);
    let floor = compute_reward(20.0, 1.0, &cfg);
    let back = compute_reward(10.0, -0.2, &cfg);
    let pass =
        on.total == 3.75 && floor.r_p == -20.0 && back.r_v == -0.625 && back.total == 1.71875;
    outcome(
        pass,
        format!(
            "R(1,10)={} R_p(dp=10)={} R_v(u<0)={}",
            on.total, floor.r_p, back.r_v
        ),
    )
}

fn observation_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cont_mismatch = 0;
    let mut bad_len = 0;
    for _ in 0..1000 {
        let ranges = oracles::random_scan(&mut rng);
        let got = continuous_transform(&LaserScan::new(ranges.clone())).expect("540 beams");
        bad_len += (got.values.len() != 256) as usize;
        cont_mismatch += (got.values != oracles::continuous_oracle(&ranges)) as usize;
    }
    let cfg = ProjectionConfig::default();
    let mut pixel_mismatch = 0;
    for _ in 0..20 {
        let ranges = oracles::random_scan(&mut rng);
        let canvas = render_canvas(&LaserScan::new(ranges.clone()), &cfg);
        let oracle = oracles::canvas_oracle(&ranges, &cfg);
        pixel_mismatch += canvas
            .classes
            .iter()
            .zip(&oracle)
            .filter(|(a, b)| a != b)
            .count();
    }
    outcome(
        bad_len == 0 && cont_mismatch == 0 && pixel_mismatch == 0,
        format!("continuous: {cont_mismatch}/1000 scans differ, {bad_len} wrong lengths; canvas: {pixel_mismatch} pixels differ over 20 scans"),
    )
}

fn raycast_oracle() -> Outcome {
    let envs = [
        generate_lake(0, &LakeSpec::default()).unwrap(),
        generate_lake(1, &LakeSpec::default()).unwrap(),
        generate_lake(2, &LakeSpec::default()).unwrap(),
        generate_channel(3, &ChannelSpec::default()).unwrap(),
        Environment::rectangle(40.0, 25.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut poses = 0;
    for env in &envs {
        let (lo, hi) = env.bounding_box();
        let mut n = 0;
        while n < 20 {
            let p = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            if !env.contains_water(p) {
                continue;
            }
            let pose = VesselState::at_rest(p.x, p.y, rng.random_range(-3.0..3.0));
            let scan = raycast_scan(env, &pose);
            let oracle = oracles::scan_oracle(env.segments(), p.x, p.y, pose.heading);
            for (a, b) in scan.ranges.iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
            n += 1;
            poses += 1;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{poses} poses over 5 environments, max range error {worst:.3e} m"),
    )
}

fn terminal_speed(params: &DynamicsParams) -> f64 {
    let mut s = VesselState::default();
    for _ in 0..120 * 60 {
        s = step_dynamics(&s, ThrustCommand::new(1.0, 1.0), params, 1.0 / 60.0);
    }
    s.u
}

fn dynamics_properties() -> Outcome {
    let params = DynamicsParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut energy_violations = 0;
    for _ in 0..10_000 {
        let mut s = VesselState {
            x: rng.random_range(-50.0..50.0),
            y: rng.random_range(-50.0..50.0),
            heading: rng.random_range(-3.0..3.0),
            u: rng.random_range(-3.0..3.0),
            v: rng.random_range(-1.5..1.5),
            r: rng.random_range(-2.0..2.0),
        };
        let mut e = s.kinetic_energy(&params);
        for _ in 0..12 {
            s = step_dynamics(&s, ThrustCommand::default(), &params, 1.0 / 60.0);
            let next = s.kinetic_energy(&params);
            energy_violations += (next > e) as usize;
            e = next;
        }
    }
    let mut s = VesselState::at_rest(0.0, 3.0, 0.0);
    let mut straight = true;
    for _ in 0..600 {
        s = step_dynamics(&s, ThrustCommand::new(0.8, 0.8), &params, 1.0 / 60.0);
        straight &= s.r == 0.0 && s.y == 3.0 && s.heading == 0.0;
    }
    let drag: Vec<f64> = [1.0, 1.5, 2.0]
        .iter()
        .map(|&f| {
            terminal_speed(&DynamicsParams {
                extra_drag_factor: f,
                ..params
            })
        })
        .collect();
    let rho: Vec<f64> = [1000.0, 1750.0, 2500.0]
        .iter()
        .map(|&r| {
            terminal_speed(&DynamicsParams {
                water_density: r,
                ..params
            })
        })
        .collect();
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    outcome(
        energy_violations == 0 && straight && decreasing(&drag) && decreasing(&rho),
        format!(
            "energy increases: {energy_violations}; straight: {straight}; u_inf vs drag factor {drag:.4?}; vs density {rho:.4?}"
        ),
    )
}

fn mppi_closed_loop() -> Outcome {
    let cfg = RunConfig {
        environment: EnvironmentSpec::Circle { radius: 80.0 },
        domain_randomization: DrConfig::disabled(),
        mppi: MppiConfig {
            samples: 512,
            horizon: 24,
            ..Default::default()
        },
        ..Default::default()
    };
    let env = Arc::new(cfg.environment.build().unwrap());
    let mut sim = cfg.make_sim(env).unwrap();
    let mut agent = MppiAgent::new(cfg.mppi).unwrap();
    let start = Instant::now();
    let logs: Vec<_> = (0..10)
        .map(|e| run_episode(&mut sim, &mut agent, 0, e).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let settle = (10.0 * cfg.episode.control_hz) as usize;
    let m = aggregate_metrics_after(&logs, settle).unwrap();
    let pass = m.collisions == 0
        && (8.0..=12.0).contains(&m.dist_mean)
        && m.vel_mean >= 0.5
        && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "10 episodes, {} steps: collisions {}, interventions {}, distance {:.3} +/- {:.3} m, surge {:.3} +/- {:.3} m/s after 10 s, {:.1} s wall",
            m.steps,
            m.collisions,
            m.interventions,
            m.dist_mean,
            m.dist_std,
            m.vel_mean,
            m.vel_std,
            elapsed.as_secs_f64()
        ),
    )
}

fn mppi_weights() -> Outcome {
    let w = importance_weights(&[0.0, 1.0], 1.0).unwrap();
    let close = (w[0] - 0.731).abs() <= 1e-3 && (w[1] - 0.269).abs() <= 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let costs: Vec<f64> = (0..64).map(|_| rng.random_range(-200.0..200.0)).collect();
        let shift = rng.random_range(-1e3..1e3);
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let lambda = rng.random_range(0.1..5.0);
        let a = importance_weights(&costs, lambda).unwrap();
        let b = importance_weights(&shifted, lambda).unwrap();
        worst = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(worst, f64::max);
    }
    outcome(
        close && worst <= 1e-12,
        format!(
            "w = ({:.6}, {:.6}); max shift deviation {worst:.2e}",
            w[0], w[1]
        ),
    )
}

fn determinism_and_loopback() -> Outcome {
    let cfg = Arc::new(RunConfig::default());
    let env = Arc::new(cfg.environment.build().unwrap());
    let run_local = |seed: u64| {
        let mut sim = cfg.make_sim(env.clone()).unwrap();
        run_episode(&mut sim, &mut ScriptedPd::new(PdConfig::default()), seed, 0).unwrap()
    };
    let mut identical_bytes = true;
    let mppi = MppiConfig {
        samples: 128,
        horizon: 12,
        ..Default::default()
    };
    for seed in 0..2u64 {
        identical_bytes &= run_local(seed).to_jsonl() == run_local(seed).to_jsonl();
        let mppi_run = || {
            let mut sim = cfg.make_sim(env.clone()).unwrap();
            run_episode(&mut sim, &mut MppiAgent::new(mppi).unwrap(), seed, 1)
                .unwrap()
                .to_jsonl()
        };
        identical_bytes &= mppi_run() == mppi_run();
    }
    let handle = server::spawn("127.0.0.1:0", env.clone(), cfg.clone()).unwrap();
    let mut remote = RemoteEnv::connect(handle.addr).unwrap();
    let mut loopback_equal = 0;
    for seed in 0..5u64 {
        let local = run_local(seed);
        let mut pd = ScriptedPd::new(PdConfig::default());
        let (setup, steps) = run_remote_episode(&mut remote, seed, 0, |scan| {
            Ok(pd.command(scan, 1.0 / 12.0)?)
        })
        .unwrap();
        loopback_equal += (setup == local.header.setup && steps == local.steps) as usize;
    }
    outcome(
        identical_bytes && loopback_equal == 5,
        format!("repeat runs byte-identical: {identical_bytes}; wire == in-process for {loopback_equal}/5 seeds"),
    )
}

fn dr_statistics() -> Outcome {
    let env = Environment::circle(80.0).unwrap();
    let cfg = DrConfig::default();
    let n = 10_000;
    let mut rho_sum = 0.0;
    let mut speed_sum = 0.0;
    let mut out_of_range = 0;
    for i in 0..n {
        let s = sample_episode_setup(2024, i, &cfg, &env).unwrap();
        let speed = s.current[0].hypot(s.current[1]);
        rho_sum += s.water_density;
        speed_sum += speed;
        out_of_range +=
            (!(1000.0..=2500.0).contains(&s.water_density) || speed > 0.4 + 1e-12) as usize;
    }
    let (rho, speed) = (rho_sum / n as f64, speed_sum / n as f64);
    outcome(
        (rho - 1750.0).abs() <= 15.0 && (speed - 0.2).abs() <= 0.005 && out_of_range == 0,
        format!("mean density {rho:.2} kg/m^3, mean current {speed:.5} m/s, {out_of_range} out of range"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("reward unit suite", reward_suite, Duration::from_secs(1)),
        (
            "observation pipeline conformance",
            observation_pipeline,
            Duration::from_secs(60),
        ),
        (
            "geometry/raycast oracle",
            raycast_oracle,
            Duration::from_secs(60),
        ),
        (
            "dynamics properties",
            dynamics_properties,
            Duration::from_secs(60),
        ),
        (
            "MPPI closed loop on circle r=80",
            mppi_closed_loop,
            Duration::from_secs(300),
        ),
        ("MPPI weight math", mppi_weights, Duration::from_secs(1)),
        (
            "determinism and loopback",
            determinism_and_loopback,
            Duration::from_secs(60),
        ),
        (
            "domain randomization statistics",
            dr_statistics,
            Duration::from_secs(10),
        ),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= budget;
        failed += !pass as usize;
        println!(
            "{} {name}: {} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
