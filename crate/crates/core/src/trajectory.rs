use serde::{Deserialize, Serialize};

use crate::kinematics::{normalize_angle, Point, Pose};

/// A timestamped pose; one line of the trajectory JSONL format.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub heading: f64,
}

impl TrajectoryPoint {
    pub fn new(t: f64, pose: Pose) -> Self {
        Self {
            t,
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.heading)
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Continuous heading sequence from wrapped headings.
pub fn unwrap_headings(headings: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for h in headings {
        match out.last() {
            None => out.push(h),
            Some(&prev) => out.push(prev + normalize_angle(h - prev)),
        }
    }
    out
}

/// Linear interpolation of a time-ordered trajectory at `t`, with headings
/// interpolated along the shorter arc. Outside the covered range the nearest
/// end point is returned.
pub fn interpolate(track: &[TrajectoryPoint], t: f64) -> Option<TrajectoryPoint> {
    let first = track.first()?;
    let last = track.last()?;
    if t <= first.t {
        return Some(TrajectoryPoint { t, ..*first });
    }
    if t >= last.t {
        return Some(TrajectoryPoint { t, ..*last });
    }
    let i = track.partition_point(|p| p.t <= t);
    let (a, b) = (&track[i - 1], &track[i]);
    let w = if b.t > a.t {
        (t - a.t) / (b.t - a.t)
    } else {
        0.0
    };
    Some(TrajectoryPoint {
        t,
        x: a.x + w * (b.x - a.x),
        y: a.y + w * (b.y - a.y),
        heading: normalize_angle(a.heading + w * normalize_angle(b.heading - a.heading)),
    })
}
