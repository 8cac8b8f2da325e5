//! Frame–slide kinematics of the interlock drive.
//!
//! The frame carries a center of motion resistance `A`. The slide moves only
//! along the frame axis and carries one spike at each end, `spike_half_spacing`
//! to either side of the line through `A`. Frame coordinates put `A` (in its
//! unloaded position) at the origin, the axis along `+x` and the left side
//! along `+y`. Yaw is counterclockwise positive.
//!
//! When a single spike is anchored, the frame's center of resistance is pulled
//! toward it (contraction) or pushed away from it (expansion) along the line
//! joining the two. `A` therefore stays on a fixed world ray through the spike
//! and the heading follows from the spike's bearing in frame coordinates, which
//! gives the closed-form turning angles in [`alpha`] and [`beta`].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in the plane, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn bearing(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point) -> Point {
        (self + other) * 0.5
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar pose in the world frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Yaw in radians, counterclockwise positive, kept in `(-pi, pi]`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Map a point given in this pose's body frame into the world.
    pub fn to_world(&self, local: Point) -> Point {
        self.position() + local.rotated(self.heading)
    }

    /// Map a world point into this pose's body frame.
    pub fn to_local(&self, world: Point) -> Point {
        (world - self.position()).rotated(-self.heading)
    }

    /// The pose of a body-frame point rigidly attached to this pose.
    pub fn offset_by(&self, local: Point) -> Pose {
        let p = self.to_world(local);
        Pose::new(p.x, p.y, self.heading)
    }
}

/// Which spike of the slide is anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSide {
    Left,
    Right,
}

impl AnchorSide {
    /// Lateral sign of the spike in frame coordinates (`+1` is left).
    pub fn lateral_sign(self) -> f64 {
        match self {
            AnchorSide::Left => 1.0,
            AnchorSide::Right => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            AnchorSide::Left => AnchorSide::Right,
            AnchorSide::Right => AnchorSide::Left,
        }
    }
}

/// Commanded turning direction of a turn primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    /// Counterclockwise.
    Left,
    /// Clockwise.
    Right,
}

impl TurnDirection {
    pub fn sign(self) -> f64 {
        match self {
            TurnDirection::Left => 1.0,
            TurnDirection::Right => -1.0,
        }
    }

    /// Spike anchored during the contraction half of a turn cycle. A left
    /// spike pulled toward the frame rotates it clockwise, so a left turn
    /// contracts on the right spike and expands on the left one.
    pub fn contraction_side(self) -> AnchorSide {
        match self {
            TurnDirection::Left => AnchorSide::Right,
            TurnDirection::Right => AnchorSide::Left,
        }
    }

    pub fn expansion_side(self) -> AnchorSide {
        self.contraction_side().opposite()
    }
}

const LENGTH_TOLERANCE: f64 = 1e-9;

/// Frame and slide dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleGeometry {
    pub frame_length: f64,
    pub frame_width: f64,
    /// Slide travel per half-cycle.
    pub stroke: f64,
    /// Lateral offset of each spike from the axis line through `A`.
    pub spike_half_spacing: f64,
    /// Axial distance from `A` to the spikes with the slide at the front.
    pub x_extended: f64,
    /// Axial distance from `A` to the spikes with the slide at the rear.
    pub x_contracted: f64,
    pub mass: f64,
    /// Frame point reported as the vehicle pose, relative to `A`.
    pub reference_point: Point,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self {
            frame_length: 2.0,
            frame_width: 0.55,
            stroke: 1.12,
            spike_half_spacing: 0.275,
            x_extended: 1.58,
            x_contracted: 0.46,
            mass: 90.0,
            reference_point: Point::new(1.6, 0.0),
        }
    }
}

impl VehicleGeometry {
    /// Geometry with the given spike spacing and axial positions, other
    /// fields at their defaults. The stroke follows from the two positions.
    pub fn with_spikes(
        spike_half_spacing: f64,
        x_extended: f64,
        x_contracted: f64,
    ) -> Result<Self> {
        let g = Self {
            spike_half_spacing,
            x_extended,
            x_contracted,
            stroke: x_extended - x_contracted,
            ..Self::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frame_length", self.frame_length),
            ("frame_width", self.frame_width),
            ("x_extended", self.x_extended),
            ("x_contracted", self.x_contracted),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.stroke.is_finite() && self.stroke >= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "stroke must be >= 0, got {}",
                self.stroke
            )));
        }
        if !(self.spike_half_spacing.is_finite() && self.spike_half_spacing >= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spike_half_spacing must be >= 0, got {}",
                self.spike_half_spacing
            )));
        }
        if ((self.x_extended - self.x_contracted) - self.stroke).abs() > LENGTH_TOLERANCE {
            return Err(Error::InvalidGeometry(format!(
                "x_extended - x_contracted ({}) must equal stroke ({})",
                self.x_extended - self.x_contracted,
                self.stroke
            )));
        }
        if !(self.reference_point.x.is_finite() && self.reference_point.y.is_finite()) {
            return Err(Error::InvalidGeometry(
                "reference_point must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Spike position in frame coordinates for a slide offset measured from
    /// the fully contracted position (`0..=stroke`).
    pub fn spike_in_frame(&self, side: AnchorSide, slide_offset: f64) -> Point {
        Point::new(
            self.x_contracted + slide_offset,
            side.lateral_sign() * self.spike_half_spacing,
        )
    }

    /// Midpoint between the two spikes in frame coordinates.
    pub fn spike_midpoint_in_frame(&self, slide_offset: f64) -> Point {
        Point::new(self.x_contracted + slide_offset, 0.0)
    }
}

/// Phase-dependent displacement of the frame's center of resistance.
///
/// During contraction `A` sits at its nominal position. During expansion it
/// is displaced forward by `y` and laterally toward the anchored spike by `z`,
/// interpolated linearly between the contracted and extended slide positions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightTransferModel {
    pub y_extended: f64,
    pub y_contracted: f64,
    pub z_extended: f64,
    pub z_contracted: f64,
}

impl WeightTransferModel {
    pub const ZERO: WeightTransferModel = WeightTransferModel {
        y_extended: 0.0,
        y_contracted: 0.0,
        z_extended: 0.0,
        z_contracted: 0.0,
    };

    /// Same offsets at both ends of the stroke.
    pub fn uniform(y: f64, z: f64) -> Self {
        Self {
            y_extended: y,
            y_contracted: y,
            z_extended: z,
            z_contracted: z,
        }
    }

    /// Derived expansion-phase lengths `(x3, x4, s3, s4)`.
    pub fn derived(&self, geom: &VehicleGeometry) -> (f64, f64, f64, f64) {
        let s = geom.spike_half_spacing;
        (
            geom.x_extended - self.y_extended,
            geom.x_contracted - self.y_contracted,
            s - self.z_extended,
            s - self.z_contracted,
        )
    }

    pub fn validate(&self, geom: &VehicleGeometry) -> Result<()> {
        for v in [
            self.y_extended,
            self.y_contracted,
            self.z_extended,
            self.z_contracted,
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidWeightTransfer(
                    "offsets must be finite".into(),
                ));
            }
        }
        let (x3, x4, s3, s4) = self.derived(geom);
        if x3 <= 0.0 || x4 <= 0.0 {
            return Err(Error::InvalidWeightTransfer(format!(
                "axial distances must stay positive (x3 = {x3}, x4 = {x4})"
            )));
        }
        if s3 < 0.0 || s4 < 0.0 {
            return Err(Error::InvalidWeightTransfer(format!(
                "lateral offsets flip sign (s3 = {s3}, s4 = {s4})"
            )));
        }
        Ok(())
    }

    /// Location of `A` in frame coordinates during expansion on `side`.
    pub fn expansion_center(
        &self,
        geom: &VehicleGeometry,
        side: AnchorSide,
        slide_offset: f64,
    ) -> Point {
        let p = if geom.stroke > 0.0 {
            (slide_offset / geom.stroke).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let y = self.y_contracted + p * (self.y_extended - self.y_contracted);
        let z = self.z_contracted + p * (self.z_extended - self.z_contracted);
        Point::new(y, side.lateral_sign() * z)
    }
}

fn bearing_difference(s_start: f64, x_start: f64, s_end: f64, x_end: f64) -> f64 {
    (s_start / x_start).atan() - (s_end / x_end).atan()
}

/// Heading change of the frame during a contraction on `side`.
///
/// Left-anchored contraction turns the frame clockwise (negative), right
/// anchored counterclockwise.
pub fn alpha(geom: &VehicleGeometry, side: AnchorSide) -> f64 {
    let s = geom.spike_half_spacing;
    let raw = bearing_difference(s, geom.x_extended, s, geom.x_contracted);
    match side {
        AnchorSide::Left => raw,
        AnchorSide::Right => -raw,
    }
}

/// Heading change during the expansion half of a turn cycle whose
/// contraction was anchored on `side`.
///
/// The expansion anchors the opposite spike and rotates in the same direction
/// as [`alpha`] for the same `side`, so with zero weight transfer the two are
/// identical.
pub fn beta(geom: &VehicleGeometry, wt: &WeightTransferModel, side: AnchorSide) -> Result<f64> {
    let (x3, x4, s3, s4) = wt.derived(geom);
    if x3 <= 0.0 || x4 <= 0.0 {
        return Err(Error::InvalidWeightTransfer(format!(
            "axial distances must stay positive (x3 = {x3}, x4 = {x4})"
        )));
    }
    let raw = bearing_difference(s3, x3, s4, x4);
    Ok(match side {
        AnchorSide::Left => raw,
        AnchorSide::Right => -raw,
    })
}

/// Net heading change of one turn cycle.
pub fn cycle_turn_angle(
    geom: &VehicleGeometry,
    wt: &WeightTransferModel,
    direction: TurnDirection,
) -> Result<f64> {
    let side = direction.contraction_side();
    let a = alpha(geom, side);
    let b = beta(geom, wt, side)?;
    Ok(direction.sign() * (a.abs() + b.abs()))
}

/// Net advance of one straight cycle.
pub fn straight_cycle_advance(stroke: f64, slip: f64) -> f64 {
    stroke * (1.0 - slip)
}

/// Radial-pull motion model with a lower bound on the spike-to-center
/// distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialPull {
    pub min_radius: f64,
}

impl Default for RadialPull {
    fn default() -> Self {
        Self { min_radius: 1e-6 }
    }
}

impl RadialPull {
    /// One constraint step: the spike stays at `anchor`, the center of
    /// resistance stays on the ray from `anchor` through `center`, and the
    /// spike's position relative to the center becomes `rel_after` (frame
    /// coordinates). Returns the new world position of the center and the
    /// new frame heading.
    pub fn step(&self, anchor: Point, center: Point, rel_after: Point) -> Result<(Point, f64)> {
        let ray = center - anchor;
        let r = ray.norm();
        let r_after = rel_after.norm();
        for radius in [r, r_after] {
            if !(radius >= self.min_radius) {
                return Err(Error::DegenerateGeometry {
                    radius,
                    min_radius: self.min_radius,
                });
            }
        }
        let dir = ray * (1.0 / r);
        let center_after = anchor + dir * r_after;
        let heading = (-dir).bearing() - rel_after.bearing();
        Ok((center_after, normalize_angle(heading)))
    }

    /// Move the center of resistance of a frame at `start` radially with
    /// respect to an anchored spike at `spike_world`. Positive
    /// `axial_travel` is contraction: the spike's axial coordinate relative
    /// to the center decreases by that amount. Returns the final pose of the
    /// center.
    pub fn integrate(
        &self,
        start: Pose,
        spike_world: Point,
        axial_travel: f64,
        steps: usize,
    ) -> Result<Pose> {
        if steps == 0 {
            return Err(Error::InvalidConfig("steps must be >= 1".into()));
        }
        if axial_travel == 0.0 {
            return Ok(start);
        }
        let rel0 = start.to_local(spike_world);
        let mut center = start.position();
        let mut heading = start.heading;
        for k in 1..=steps {
            let travel = axial_travel * k as f64 / steps as f64;
            let rel = Point::new(rel0.x - travel, rel0.y);
            (center, heading) = self.step(spike_world, center, rel)?;
        }
        Ok(Pose::new(center.x, center.y, heading))
    }
}

/// [`RadialPull::integrate`] with the default radius bound.
pub fn integrate_anchored_motion(
    start: Pose,
    spike_world: Point,
    axial_travel: f64,
    steps: usize,
) -> Result<Pose> {
    RadialPull::default().integrate(start, spike_world, axial_travel, steps)
}
