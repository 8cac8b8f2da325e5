//! Time-stepped execution of compiled cycle programs.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cycle::{
    compile_program, CyclePhase, CycleProgram, Maneuver, PhaseKind, ScheduledPhase, TimingModel,
};
use crate::error::{Error, Result};
use crate::kinematics::{
    AnchorSide, Point, Pose, RadialPull, VehicleGeometry, WeightTransferModel,
};
use crate::soil::{effective_slip, passive_penetration_depth, SoilModel, SpikeMode};
use crate::trajectory::{unwrap_headings, TrajectoryPoint};

/// Bus voltage and per-phase mean currents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub bus_voltage: f64,
    /// Drive motor while pulling the implement forward.
    pub traction_current: f64,
    /// Drive motor while returning the slide unloaded.
    pub return_current: f64,
    /// Drive motor during turn contraction and expansion.
    pub turn_current: f64,
    /// Per moving linear actuator.
    pub actuator_current_peak: f64,
    /// Electronics load, always on.
    pub idle_current: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            bus_voltage: 24.0,
            traction_current: 3.0,
            return_current: 1.5,
            turn_current: 2.0,
            actuator_current_peak: 1.0,
            idle_current: 0.9,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.bus_voltage.is_finite() && self.bus_voltage > 0.0) {
            return Err(Error::InvalidPower(format!(
                "bus_voltage must be > 0, got {}",
                self.bus_voltage
            )));
        }
        for (name, v) in [
            ("traction_current", self.traction_current),
            ("return_current", self.return_current),
            ("turn_current", self.turn_current),
            ("actuator_current_peak", self.actuator_current_peak),
            ("idle_current", self.idle_current),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidPower(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn drive_current(&self, phase: &CyclePhase) -> f64 {
        match (phase.kind, phase.maneuver) {
            (PhaseKind::TractionPull, Maneuver::Straight) => self.traction_current,
            (PhaseKind::SlideToFront, _) => self.return_current,
            (PhaseKind::TractionPull | PhaseKind::TractionPushBack, Maneuver::Turn) => {
                self.turn_current
            }
            (PhaseKind::TractionPushBack, Maneuver::Straight) => self.traction_current,
            _ => 0.0,
        }
    }

    pub fn actuator_current(&self, phase: &CyclePhase) -> f64 {
        phase.moving_actuators() as f64 * self.actuator_current_peak
    }

    /// Instantaneous electrical power drawn during `phase`, W.
    pub fn phase_power(&self, phase: &CyclePhase) -> f64 {
        self.bus_voltage
            * (self.drive_current(phase) + self.actuator_current(phase) + self.idle_current)
    }
}

/// Occasional loss of spike grip during a traction phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripLossModel {
    /// Probability per traction phase.
    pub probability: f64,
    /// Fraction of the phase's nominal motion kept when grip is lost.
    pub retained_fraction: f64,
}

impl Default for GripLossModel {
    fn default() -> Self {
        Self {
            probability: 0.0,
            retained_fraction: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub geometry: VehicleGeometry,
    pub weight_transfer: WeightTransferModel,
    pub soil: SoilModel,
    pub timing: TimingModel,
    pub power: PowerModel,
    /// Seconds.
    pub dt: f64,
    pub rng_seed: u64,
    /// Implement draft force while the tool is lowered, N.
    pub draft_force: f64,
    pub grip_loss: GripLossModel,
    /// Fraction of the nominal rotation achieved in the first cycle of each
    /// turn primitive (castor wheels still aligning).
    pub first_cycle_turn_retained: f64,
    pub initial_pose: Pose,
    /// Lower bound on the spike-to-center distance.
    pub min_radius: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: VehicleGeometry::default(),
            weight_transfer: WeightTransferModel::uniform(0.19, 0.035),
            soil: SoilModel::default(),
            timing: TimingModel::default(),
            power: PowerModel::default(),
            dt: 0.1,
            rng_seed: 1,
            draft_force: 300.0,
            grip_loss: GripLossModel::default(),
            first_cycle_turn_retained: 1.0,
            initial_pose: Pose::new(0.0, 0.0, FRAC_PI_2),
            min_radius: 1e-6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.weight_transfer.validate(&self.geometry)?;
        self.soil.validate()?;
        self.timing.validate()?;
        self.power.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.draft_force.is_finite() && self.draft_force >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "draft_force must be >= 0, got {}",
                self.draft_force
            )));
        }
        if !(0.0..=1.0).contains(&self.grip_loss.probability)
            || !(0.0..=1.0).contains(&self.grip_loss.retained_fraction)
        {
            return Err(Error::InvalidConfig(
                "grip_loss values must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.first_cycle_turn_retained) {
            return Err(Error::InvalidConfig(
                "first_cycle_turn_retained must lie in [0, 1]".into(),
            ));
        }
        if !(self.min_radius > 0.0) {
            return Err(Error::InvalidConfig("min_radius must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeState {
    pub mode: SpikeMode,
    pub depth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Pose of the frame reference point.
    pub pose: Pose,
    /// Slide position measured from full contraction, `0..=stroke`.
    pub slide_offset: f64,
    pub left: SpikeState,
    pub right: SpikeState,
    pub tool_lowered: bool,
    pub elapsed: f64,
}

impl SimState {
    /// Initial state: slide at the front, spikes and tool up.
    pub fn initial(config: &SimConfig) -> Self {
        Self {
            pose: config.initial_pose,
            slide_offset: config.geometry.stroke,
            left: SpikeState::default(),
            right: SpikeState::default(),
            tool_lowered: false,
            elapsed: 0.0,
        }
    }

    pub fn spike(&self, side: AnchorSide) -> &SpikeState {
        match side {
            AnchorSide::Left => &self.left,
            AnchorSide::Right => &self.right,
        }
    }

    fn spike_mut(&mut self, side: AnchorSide) -> &mut SpikeState {
        match side {
            AnchorSide::Left => &mut self.left,
            AnchorSide::Right => &mut self.right,
        }
    }

    pub fn anchored(&self) -> Vec<AnchorSide> {
        [AnchorSide::Left, AnchorSide::Right]
            .into_iter()
            .filter(|&s| self.spike(s).mode.is_anchored())
            .collect()
    }

    /// Pose of the frame's nominal center of resistance.
    pub fn center_pose(&self, geom: &VehicleGeometry) -> Pose {
        self.pose.offset_by(-geom.reference_point)
    }

    /// World position of a spike.
    pub fn spike_world(&self, geom: &VehicleGeometry, side: AnchorSide) -> Point {
        self.center_pose(geom)
            .to_world(geom.spike_in_frame(side, self.slide_offset))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub t: f64,
    pub pose: Pose,
    pub slide_offset: f64,
    pub phase: String,
    pub left: SpikeState,
    pub right: SpikeState,
    pub tool_lowered: bool,
    pub drive_current: f64,
    pub actuator_current: f64,
    pub power: f64,
}

impl TelemetrySample {
    fn record(t: f64, state: &SimState, phase: &CyclePhase, power: &PowerModel) -> Self {
        Self {
            t,
            pose: state.pose,
            slide_offset: state.slide_offset,
            phase: phase.label(),
            left: state.left,
            right: state.right,
            tool_lowered: state.tool_lowered,
            drive_current: power.drive_current(phase),
            actuator_current: power.actuator_current(phase),
            power: power.phase_power(phase),
        }
    }

    pub fn trajectory_point(&self) -> TrajectoryPoint {
        TrajectoryPoint::new(self.t, self.pose)
    }
}

/// Target slide offset of a slide phase.
fn slide_target(phase: &CyclePhase, stroke: f64) -> Option<f64> {
    match phase.kind {
        PhaseKind::SlideToFront | PhaseKind::TractionPushBack => Some(stroke),
        PhaseKind::TractionPull => Some(0.0),
        _ => None,
    }
}

fn spike_depth_target(mode: SpikeMode, soil: &SoilModel) -> f64 {
    match mode {
        SpikeMode::Retracted => 0.0,
        SpikeMode::Passive => soil.self_weight_depth,
        SpikeMode::ActiveDown => soil.max_depth,
    }
}

fn toward(value: f64, target: f64, max_change: f64) -> f64 {
    // the relative slack absorbs roundoff from summing equal steps
    if (target - value).abs() <= max_change * (1.0 + 1e-9) {
        target
    } else {
        value + max_change.copysign(target - value)
    }
}

/// Per-spike load while pulling, N.
fn spike_load(state: &SimState, phase: &CyclePhase, config: &SimConfig) -> f64 {
    let n = state.anchored().len().max(1) as f64;
    if state.tool_lowered && phase.maneuver == Maneuver::Straight {
        config.draft_force / n
    } else {
        0.0
    }
}

/// Slip of a traction phase without grip-loss events: passive spikes follow
/// the soil slip law, actively forced spikes hold.
pub fn nominal_slip(state: &SimState, phase: &CyclePhase, config: &SimConfig) -> f64 {
    if !phase.is_traction() {
        return 0.0;
    }
    let passive = state
        .anchored()
        .iter()
        .any(|&s| state.spike(s).mode == SpikeMode::Passive);
    if passive {
        effective_slip(spike_load(state, phase, config), &config.soil)
    } else {
        0.0
    }
}

/// Advance `state` by one time step of `phase` with nominal slip.
pub fn step(state: &SimState, phase: &CyclePhase, dt: f64, config: &SimConfig) -> Result<SimState> {
    let slip = nominal_slip(state, phase, config);
    step_with_slip(state, phase, dt, config, slip)
}

/// Advance `state` by one time step of `phase`, losing fraction `slip` of
/// the slide's travel to spike motion through the soil.
pub fn step_with_slip(
    state: &SimState,
    phase: &CyclePhase,
    dt: f64,
    config: &SimConfig,
    slip: f64,
) -> Result<SimState> {
    let geom = &config.geometry;
    let soil = &config.soil;
    let mut next = *state;
    next.elapsed = state.elapsed + dt;
    let fraction = (dt / phase.duration).min(1.0);

    match phase.kind {
        PhaseKind::LowerTool => next.tool_lowered = true,
        PhaseKind::RaiseTool => next.tool_lowered = false,
        PhaseKind::SpikeDown { spikes, mode } => {
            for side in [AnchorSide::Left, AnchorSide::Right] {
                if spikes.contains(side) {
                    let s = next.spike_mut(side);
                    s.mode = mode;
                    s.depth = toward(
                        s.depth,
                        spike_depth_target(mode, soil),
                        soil.max_depth * fraction,
                    );
                }
            }
        }
        PhaseKind::SpikeUp { spikes } => {
            for side in [AnchorSide::Left, AnchorSide::Right] {
                if spikes.contains(side) {
                    let s = next.spike_mut(side);
                    s.depth = toward(s.depth, 0.0, soil.max_depth * fraction);
                    if s.depth == 0.0 {
                        s.mode = SpikeMode::Retracted;
                    }
                }
            }
        }
        PhaseKind::SlideToFront | PhaseKind::TractionPull | PhaseKind::TractionPushBack => {
            let target = slide_target(phase, geom.stroke).expect("slide phase");
            let new_offset = toward(state.slide_offset, target, geom.stroke * fraction);
            let travel = new_offset - state.slide_offset;
            if phase.is_traction() {
                next = traction_motion(&next, phase, travel, slip, config)?;
            }
            next.slide_offset = new_offset;
        }
    }
    Ok(next)
}

/// Frame motion for a signed slide travel (positive toward the front).
fn traction_motion(
    state: &SimState,
    phase: &CyclePhase,
    travel: f64,
    slip: f64,
    config: &SimConfig,
) -> Result<SimState> {
    let geom = &config.geometry;
    let mut next = *state;
    let anchored = state.anchored();
    let load = spike_load(state, phase, config);
    for &side in &anchored {
        let s = next.spike_mut(side);
        s.depth = match s.mode {
            SpikeMode::Passive => passive_penetration_depth(load, &config.soil)?,
            _ => config.soil.max_depth,
        };
    }
    let anchored_travel = travel * (1.0 - slip);
    match anchored.as_slice() {
        [] => {
            return Err(Error::InvalidPhase(
                "traction with no anchored spike".into(),
            ))
        }
        [_, _] => {
            // symmetric anchoring: pure translation along the axis
            let center = state.center_pose(geom);
            let moved = center.offset_by(Point::new(-anchored_travel, 0.0));
            next.pose = moved.offset_by(geom.reference_point);
        }
        [side] => {
            let side = *side;
            let center_at = |offset: f64| match phase.kind {
                PhaseKind::TractionPushBack => {
                    config.weight_transfer.expansion_center(geom, side, offset)
                }
                _ => Point::ORIGIN,
            };
            let frame = state.center_pose(geom);
            let offset0 = state.slide_offset;
            let offset1 = offset0 + anchored_travel;
            let a0 = center_at(offset0);
            let a1 = center_at(offset1);
            let anchor = frame.to_world(geom.spike_in_frame(side, offset0));
            let center = frame.to_world(a0);
            let rel_after = geom.spike_in_frame(side, offset1) - a1;
            let radial = RadialPull {
                min_radius: config.min_radius,
            };
            let (center_after, heading) = radial.step(anchor, center, rel_after)?;
            let frame_after = Pose::new(center_after.x, center_after.y, heading).offset_by(-a1);
            next.pose = frame_after.offset_by(geom.reference_point);
        }
        _ => unreachable!(),
    }
    Ok(next)
}

/// One executed program cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub primitive: usize,
    pub cycle: u32,
    pub maneuver: Maneuver,
    /// Telemetry index of the state before the cycle's first step.
    pub start_index: usize,
    /// Telemetry index of the state after the cycle's last step.
    pub end_index: usize,
    pub grip_lost: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub trajectory: Vec<Pose>,
    pub telemetry: Vec<TelemetrySample>,
    pub cycles: Vec<CycleRecord>,
    pub final_state: SimState,
}

impl SimRun {
    pub fn trajectory_points(&self) -> Vec<TrajectoryPoint> {
        self.telemetry
            .iter()
            .map(TelemetrySample::trajectory_point)
            .collect()
    }

    /// Straight-line distance between the first and last reference-point
    /// positions.
    pub fn net_advance(&self) -> f64 {
        match (self.trajectory.first(), self.trajectory.last()) {
            (Some(a), Some(b)) => a.position().distance(b.position()),
            _ => 0.0,
        }
    }

    /// Unwrapped heading change over the run, radians.
    pub fn net_turn(&self) -> f64 {
        let u = unwrap_headings(self.trajectory.iter().map(|p| p.heading));
        u.last().copied().unwrap_or(0.0) - u.first().copied().unwrap_or(0.0)
    }

    pub fn duration(&self) -> f64 {
        self.telemetry.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Unwrapped heading change of each cycle, radians.
    pub fn cycle_turns(&self) -> Vec<f64> {
        let u = unwrap_headings(self.trajectory.iter().map(|p| p.heading));
        self.cycles
            .iter()
            .map(|c| u[c.end_index] - u[c.start_index])
            .collect()
    }
}

/// Execute `program` from the configured initial state.
pub fn run_program(program: &CycleProgram, config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    let schedule = compile_program(program, &config.timing, config.geometry.stroke)?;
    let shortest = schedule
        .iter()
        .map(|s| s.phase.duration)
        .fold(f64::INFINITY, f64::min);
    if config.dt > shortest / 10.0 {
        return Err(Error::InvalidConfig(format!(
            "dt {} exceeds a tenth of the shortest phase ({shortest} s)",
            config.dt
        )));
    }
    // passive spikes share the draft; check the load up front
    if program.tool_engaged {
        passive_penetration_depth(config.draft_force / 2.0, &config.soil)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut state = SimState::initial(config);
    let mut telemetry = Vec::new();
    let mut trajectory = Vec::new();
    let mut cycles: Vec<CycleRecord> = Vec::new();
    telemetry.push(TelemetrySample::record(
        0.0,
        &state,
        &schedule[0].phase,
        &config.power,
    ));
    trajectory.push(state.pose);
    let mut steps_taken = 0usize;

    let mut current: Option<(usize, u32)> = None;
    for ScheduledPhase {
        phase,
        primitive,
        cycle,
    } in &schedule
    {
        if let Some(c) = cycle {
            if current != Some((*primitive, *c)) {
                current = Some((*primitive, *c));
                cycles.push(CycleRecord {
                    primitive: *primitive,
                    cycle: *c,
                    maneuver: phase.maneuver,
                    start_index: steps_taken,
                    end_index: steps_taken,
                    grip_lost: false,
                });
            }
        }
        let n = ((phase.duration / config.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut slip = nominal_slip(&state, phase, config);
        if phase.is_traction() {
            let lost = rng.random_bool(config.grip_loss.probability);
            if lost {
                slip = 1.0 - config.grip_loss.retained_fraction * (1.0 - slip);
                if let Some(rec) = cycles.last_mut() {
                    rec.grip_lost = true;
                }
            }
            if phase.maneuver == Maneuver::Turn && *cycle == Some(0) {
                slip = 1.0 - config.first_cycle_turn_retained * (1.0 - slip);
            }
        }
        let phase_dt = phase.duration / n as f64;
        for _ in 0..n {
            state = step_with_slip(&state, phase, phase_dt, config, slip)?;
            steps_taken += 1;
            let t = steps_taken as f64 * config.dt;
            state.elapsed = t;
            telemetry.push(TelemetrySample::record(t, &state, phase, &config.power));
            trajectory.push(state.pose);
        }
        if let (Some(rec), Some(_)) = (cycles.last_mut(), cycle) {
            rec.end_index = steps_taken;
        }
    }
    Ok(SimRun {
        trajectory,
        telemetry,
        cycles,
        final_state: state,
    })
}

/// Time-weighted mean of instantaneous power over samples with
/// `window.0 < t <= window.1` (all samples when `window` is `None`).
pub fn mean_power(telemetry: &[TelemetrySample], window: Option<(f64, f64)>) -> Result<f64> {
    let samples: Vec<&TelemetrySample> = match window {
        None => telemetry.iter().collect(),
        Some((t0, t1)) => telemetry.iter().filter(|s| s.t > t0 && s.t <= t1).collect(),
    };
    match samples.as_slice() {
        [] => Err(Error::EmptyWindow),
        [only] => Ok(only.power),
        _ => {
            let mut energy = 0.0;
            let mut span = 0.0;
            for pair in samples.windows(2) {
                let dt = pair[1].t - pair[0].t;
                energy += pair[1].power * dt;
                span += dt;
            }
            Ok(energy / span)
        }
    }
}

/// Aggregate figures of a run, written alongside the telemetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub net_advance: f64,
    pub net_turn_deg: f64,
    pub duration: f64,
    pub mean_power: f64,
    pub energy_wh: f64,
    pub cycles: usize,
    pub grip_loss_events: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl RunSummary {
    pub fn new(run: &SimRun, config: &SimConfig) -> Result<Self> {
        let mean = mean_power(&run.telemetry, None)?;
        Ok(Self {
            net_advance: run.net_advance(),
            net_turn_deg: run.net_turn().to_degrees(),
            duration: run.duration(),
            mean_power: mean,
            energy_wh: mean * run.duration() / 3600.0,
            cycles: run.cycles.len(),
            grip_loss_events: run.cycles.iter().filter(|c| c.grip_lost).count(),
            seed: config.rng_seed,
            config_hash: config.hash(),
        })
    }
}
