//! Replays a trajectory log into projection frames and a track table.

use std::fs;
use std::path::Path;

use anyhow::Context;
use image::{ImageBuffer, Rgb};
use shoresim::lidar::LaserScan;
use shoresim::observations::{render_projection, ProjectionConfig};
use shoresim::EpisodeLog;

/// Writes `frame_NNNN.png` per step and `track.csv`; returns the frame count.
pub fn render_log(log: &EpisodeLog, cfg: &ProjectionConfig, out: &Path) -> anyhow::Result<usize> {
    fs::create_dir_all(out)?;
    let frames: Vec<anyhow::Result<()>> = {
        use rayon::prelude::*;
        log.steps
            .par_iter()
            .map(|s| {
                let img = render_projection(&LaserScan::new(s.scan.clone()), cfg);
                let buf: ImageBuffer<Rgb<u8>, _> =
                    ImageBuffer::from_raw(img.width as u32, img.height as u32, img.pixels)
                        .context("image buffer size")?;
                buf.save(out.join(format!("frame_{:04}.png", s.t)))?;
                Ok(())
            })
            .collect()
    };
    frames.into_iter().collect::<anyhow::Result<Vec<()>>>()?;

    let mut w = csv::Writer::from_path(out.join("track.csv"))?;
    w.write_record(["t", "time", "x", "y", "heading", "u", "distance", "reward"])?;
    let p0 = log.header.initial_pose;
    w.write_record([
        "0",
        "0",
        &p0.x.to_string(),
        &p0.y.to_string(),
        &p0.heading.to_string(),
        "0",
        "",
        "",
    ])?;
    for s in &log.steps {
        w.write_record([
            s.t.to_string(),
            s.time.to_string(),
            s.pose.x.to_string(),
            s.pose.y.to_string(),
            s.pose.heading.to_string(),
            s.pose.u.to_string(),
            s.distance.to_string(),
            s.reward.total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(log.steps.len())
}
