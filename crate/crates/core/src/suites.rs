//! Scripted synthetic sequence sets used by the experiments and the acceptance tests.

use crate::grid::BoundingBox;
use crate::sequences::{OccluderTexture, SynthEvent, SynthSpec, Waypoint};

fn bbox(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
    BoundingBox::new(cx, cy, w, h).expect("suite boxes are valid")
}

/// Zero-noise, constant-velocity target with no events.
pub fn easy_spec(frames: usize, texture_seed: u64, velocity: (f64, f64)) -> SynthSpec {
    let start = (40.0, 50.0);
    let end = (
        start.0 + velocity.0 * (frames - 1) as f64,
        start.1 + velocity.1 * (frames - 1) as f64,
    );
    SynthSpec {
        name: format!("easy{texture_seed:02}"),
        frames,
        width: (end.0.max(start.0) + 40.0).ceil() as usize,
        height: (end.1.max(start.1) + 40.0).ceil() as usize,
        texture_seed,
        waypoints: vec![
            Waypoint {
                frame: 0,
                x: start.0,
                y: start.1,
            },
            Waypoint {
                frame: frames - 1,
                x: end.0,
                y: end.1,
            },
        ],
        ..SynthSpec::default()
    }
}

/// Easy suite: `count` zero-noise constant-velocity sequences with varied textures and
/// directions.
pub fn easy_suite(count: usize, frames: usize) -> Vec<SynthSpec> {
    let velocities = [(1.0, 0.0), (0.5, 0.5), (1.0, 0.3), (0.0, 1.0), (0.7, -0.2)];
    (0..count)
        .map(|i| {
            let v = velocities[i % velocities.len()];
            let mut s = easy_spec(frames, 100 + i as u64, v);
            if v.1 < 0.0 {
                let dy = -v.1 * (frames - 1) as f64;
                s.waypoints[0].y += dy;
                s.waypoints[1].y += dy;
                s.height += dy.ceil() as usize;
            }
            s
        })
        .collect()
}

/// Target sweeping back and forth behind flat vertical poles. Every crossing of a
/// pole is an occlusion event.
pub fn occlusion_spec(index: usize, frames: usize) -> SynthSpec {
    let width = 240usize;
    let height = 120usize;
    let size = 24.0;
    let speed = 1.5 + 0.25 * (index % 3) as f64;
    let y = 60.0 + 4.0 * ((index % 5) as f64 - 2.0);
    let left = 30.0;
    let right = width as f64 - 30.0;
    let leg = ((right - left) / speed).round() as usize;
    let mut waypoints = vec![Waypoint {
        frame: 0,
        x: left,
        y,
    }];
    let mut t = 0;
    let mut at_right = false;
    while t + leg < frames {
        t += leg;
        at_right = !at_right;
        waypoints.push(Waypoint {
            frame: t,
            x: if at_right { right } else { left },
            y,
        });
    }
    if t < frames - 1 {
        let remaining = (frames - 1 - t) as f64 * speed;
        let x = if at_right {
            right - remaining
        } else {
            left + remaining
        };
        waypoints.push(Waypoint {
            frame: frames - 1,
            x,
            y,
        });
    }
    let pole_x = 90.0 + 12.0 * (index % 4) as f64;
    let pole_w = 0.5 * size + 2.0 * (index % 2) as f64;
    let mut spec = SynthSpec {
        name: format!("occl{index:02}"),
        frames,
        width,
        height,
        target_w: size,
        target_h: size,
        texture_seed: 200 + index as u64,
        waypoints,
        events: Vec::new(),
        ..SynthSpec::default()
    };
    spec.events = pole_crossings(&spec, pole_x, pole_w, height as f64);
    spec
}

/// One occlusion event per contiguous run of frames in which the target overlaps a
/// static flat pole.
fn pole_crossings(spec: &SynthSpec, pole_x: f64, pole_w: f64, pole_h: f64) -> Vec<SynthEvent> {
    let mut events = Vec::new();
    let mut run: Option<usize> = None;
    for t in 0..=spec.frames {
        let overlapping = t < spec.frames && {
            let (cx, _) = spec.waypoint_center(t);
            (cx - pole_x).abs() < (spec.target_w + pole_w) / 2.0
        };
        match (overlapping, run) {
            (true, None) => run = Some(t),
            (false, Some(start)) => {
                events.push(SynthEvent::Occlusion {
                    start,
                    end: t - 1,
                    occluder: bbox(pole_x, pole_h / 2.0, pole_w, pole_h),
                    velocity: (0.0, 0.0),
                    texture: OccluderTexture::Flat,
                });
                run = None;
            }
            _ => {}
        }
    }
    events
}

pub fn occlusion_suite(count: usize, frames: usize) -> Vec<SynthSpec> {
    (0..count).map(|i| occlusion_spec(i, frames)).collect()
}

/// Target moving right while a look-alike occluder crosses over it vertically. While
/// both are inside the search window the response has one cluster on each.
pub fn two_peak_spec(frames: usize) -> SynthSpec {
    let size = 24.0;
    let speed = 1.0;
    let start = 40.0;
    let y = 70.0;
    let cross = frames / 2;
    let x_cross = start + speed * cross as f64;
    let reach = TWO_PEAK_REACH;
    SynthSpec {
        name: "twopeak".into(),
        frames,
        width: (start + speed * frames as f64 + 40.0).ceil() as usize,
        height: 140,
        target_w: size,
        target_h: size,
        texture_seed: 7,
        waypoints: vec![
            Waypoint {
                frame: 0,
                x: start,
                y,
            },
            Waypoint {
                frame: frames - 1,
                x: start + speed * (frames - 1) as f64,
                y,
            },
        ],
        events: vec![SynthEvent::Occlusion {
            start: cross - reach,
            end: cross + reach,
            occluder: bbox(
                x_cross + TWO_PEAK_OFFSET,
                y - TWO_PEAK_SPEED * reach as f64,
                size,
                size,
            ),
            velocity: (0.0, TWO_PEAK_SPEED),
            texture: OccluderTexture::Target,
        }],
        ..SynthSpec::default()
    }
}

/// Horizontal offset of the look-alike's path from the crossing point; it never covers
/// the whole target.
pub const TWO_PEAK_OFFSET: f64 = 12.0;
/// Vertical speed of the look-alike, pixels per frame.
pub const TWO_PEAK_SPEED: f64 = 2.0;
/// Frames between the look-alike's appearance and the crossing, and between the crossing
/// and its disappearance.
pub const TWO_PEAK_REACH: usize = 8;

/// Constant-velocity target with a motion-blur burst in the middle third.
pub fn blur_spec(frames: usize, length: usize) -> SynthSpec {
    let mut spec = easy_spec(frames, 300, (1.5, 0.0));
    spec.name = "blur".into();
    spec.events.push(SynthEvent::Blur {
        start: frames / 3,
        end: 2 * frames / 3,
        length,
    });
    spec
}
