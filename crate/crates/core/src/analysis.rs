//! Turn angles, center of rotation and footprint extracted from runs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Point, VehicleGeometry};
use crate::sim::TelemetrySample;
use crate::trajectory::{unwrap_headings, TrajectoryPoint};

/// Heading change between consecutive boundaries, degrees.
pub fn per_cycle_turns(trajectory: &[TrajectoryPoint], boundaries: &[usize]) -> Result<Vec<f64>> {
    if boundaries.len() < 2 {
        return Err(Error::BadBoundaries("need at least two boundaries".into()));
    }
    if let Some(&b) = boundaries.iter().find(|&&b| b >= trajectory.len()) {
        return Err(Error::BadBoundaries(format!(
            "boundary {b} outside trajectory of {} samples",
            trajectory.len()
        )));
    }
    if boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadBoundaries(
            "boundaries must be strictly increasing".into(),
        ));
    }
    let unwrapped = unwrap_headings(trajectory.iter().map(|p| p.heading));
    Ok(boundaries
        .windows(2)
        .map(|w| (unwrapped[w[1]] - unwrapped[w[0]]).to_degrees())
        .collect())
}

/// A traction cycle located from telemetry phase labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSpan {
    pub start: usize,
    pub end: usize,
    /// Only one spike anchored during the pull.
    pub turning: bool,
}

/// Split telemetry into traction cycles. Each cycle begins at the sample
/// before a `traction_pull` phase starts; the last one ends at the last
/// traction sample.
pub fn cycle_spans(telemetry: &[TelemetrySample]) -> Vec<CycleSpan> {
    let is_traction = |s: &TelemetrySample| s.phase.starts_with("traction_");
    let mut starts = Vec::new();
    for i in 1..telemetry.len() {
        if telemetry[i].phase == "traction_pull" && telemetry[i - 1].phase != "traction_pull" {
            let anchored = [telemetry[i].left.mode, telemetry[i].right.mode]
                .iter()
                .filter(|m| m.is_anchored())
                .count();
            starts.push((i - 1, anchored == 1));
        }
    }
    let Some(last) = telemetry.iter().rposition(is_traction) else {
        return Vec::new();
    };
    starts
        .iter()
        .enumerate()
        .map(|(k, &(start, turning))| CycleSpan {
            start,
            end: starts.get(k + 1).map_or(last, |n| n.0),
            turning,
        })
        .collect()
}

/// Algebraic least-squares circle fit. Returns the center and the mean
/// distance of the points from it.
pub fn fit_center_of_rotation(points: &[Point]) -> Result<(Point, f64)> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Point::ORIGIN, |acc, &p| acc + p) * (1.0 / n);
    let scale = points
        .iter()
        .map(|&p| (p - mean).norm())
        .fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateFit("all points coincide".into()));
    }
    // x^2 + y^2 + D x + E y + F = 0 on centered, scaled coordinates
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &p in points {
        let q = (p - mean) * (1.0 / scale);
        let row = [q.x, q.y, 1.0];
        let rhs = -(q.x * q.x + q.y * q.y);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let [d, e, _f] =
        solve3(ata, atb).ok_or_else(|| Error::DegenerateFit("points are collinear".into()))?;
    let center = mean + Point::new(-d / 2.0, -e / 2.0) * scale;
    let radius = points.iter().map(|&p| p.distance(center)).sum::<f64>() / n;
    if !(center.x.is_finite() && center.y.is_finite()) {
        return Err(Error::DegenerateFit("points are collinear".into()));
    }
    Ok((center, radius))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let norm = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * norm {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub extent_x: f64,
    pub extent_y: f64,
    /// Largest planar extent plus the slide stroke.
    pub turning_space: f64,
}

pub fn footprint(trajectory: &[TrajectoryPoint], geometry: &VehicleGeometry) -> Footprint {
    let (mut lo, mut hi) = (
        Point::new(f64::INFINITY, f64::INFINITY),
        Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in trajectory {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let (extent_x, extent_y) = if trajectory.is_empty() {
        (0.0, 0.0)
    } else {
        (hi.x - lo.x, hi.y - lo.y)
    };
    Footprint {
        extent_x,
        extent_y,
        turning_space: extent_x.max(extent_y) + geometry.stroke,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnReport {
    pub per_cycle_angles: Vec<f64>,
    pub total_turn: f64,
    pub fitted_center: Option<Point>,
    pub fitted_radius: Option<f64>,
    pub footprint: Footprint,
    pub turning_space: f64,
}

impl TurnReport {
    /// Build the report from simulator telemetry. The center of rotation is
    /// fitted to the reference-point positions at turn-cycle boundaries,
    /// where successive cycles repeat the same rigid motion.
    pub fn from_telemetry(
        telemetry: &[TelemetrySample],
        geometry: &VehicleGeometry,
    ) -> Result<Self> {
        if telemetry.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let trajectory: Vec<TrajectoryPoint> = telemetry
            .iter()
            .map(TelemetrySample::trajectory_point)
            .collect();
        let spans = cycle_spans(telemetry);
        let mut boundaries: Vec<usize> = spans.iter().map(|s| s.start).collect();
        if let Some(last) = spans.last() {
            boundaries.push(last.end);
        }
        boundaries.dedup();
        let per_cycle_angles = if boundaries.len() >= 2 {
            per_cycle_turns(&trajectory, &boundaries)?
        } else {
            Vec::new()
        };
        let total_turn = per_cycle_angles.iter().sum();

        let mut orbit: Vec<Point> = Vec::new();
        for span in spans.iter().filter(|s| s.turning) {
            for idx in [span.start, span.end] {
                let p = trajectory[idx].position();
                if orbit.last() != Some(&p) {
                    orbit.push(p);
                }
            }
        }
        let fit = fit_center_of_rotation(&orbit).ok();
        let fp = footprint(&trajectory, geometry);
        Ok(Self {
            per_cycle_angles,
            total_turn,
            fitted_center: fit.map(|f| f.0),
            fitted_radius: fit.map(|f| f.1),
            footprint: fp,
            turning_space: fp.turning_space,
        })
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24}{:>12}", "quantity", "value");
        for (i, a) in self.per_cycle_angles.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<24}{:>12.3}",
                format!("cycle {} turn [deg]", i + 1),
                a
            );
        }
        let _ = writeln!(out, "{:<24}{:>12.3}", "total turn [deg]", self.total_turn);
        if let (Some(c), Some(r)) = (self.fitted_center, self.fitted_radius) {
            let _ = writeln!(out, "{:<24}{:>12.4}", "center x [m]", c.x);
            let _ = writeln!(out, "{:<24}{:>12.4}", "center y [m]", c.y);
            let _ = writeln!(out, "{:<24}{:>12.4}", "radius [m]", r);
        }
        let _ = writeln!(
            out,
            "{:<24}{:>12.4}",
            "extent x [m]", self.footprint.extent_x
        );
        let _ = writeln!(
            out,
            "{:<24}{:>12.4}",
            "extent y [m]", self.footprint.extent_y
        );
        let _ = writeln!(
            out,
            "{:<24}{:>12.4}",
            "turning space [m]", self.turning_space
        );
        out
    }
}
