//! Control primitives and their compilation into timed actuator phases.
//!
//! Every cycle starts and ends with the slide at the front of the frame.
//! A straight cycle sets both spikes passively, pulls the slide to the rear
//! (the frame advances), lifts the spikes and returns the slide unloaded. A
//! turn cycle contracts on one spike and expands on the other, both actively
//! forced to full depth.

use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{AnchorSide, TurnDirection};
use crate::soil::SpikeMode;

/// Which spikes an actuator phase moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeSet {
    Both,
    Left,
    Right,
}

impl SpikeSet {
    pub fn contains(self, side: AnchorSide) -> bool {
        match self {
            SpikeSet::Both => true,
            SpikeSet::Left => side == AnchorSide::Left,
            SpikeSet::Right => side == AnchorSide::Right,
        }
    }

    pub fn count(self) -> usize {
        match self {
            SpikeSet::Both => 2,
            _ => 1,
        }
    }

    fn label(self) -> &'static str {
        match self {
            SpikeSet::Both => "both",
            SpikeSet::Left => "left",
            SpikeSet::Right => "right",
        }
    }
}

impl From<AnchorSide> for SpikeSet {
    fn from(side: AnchorSide) -> Self {
        match side {
            AnchorSide::Left => SpikeSet::Left,
            AnchorSide::Right => SpikeSet::Right,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhaseKind {
    LowerTool,
    RaiseTool,
    /// Slide moves forward relative to the frame with no spike anchored.
    SlideToFront,
    SpikeDown {
        spikes: SpikeSet,
        mode: SpikeMode,
    },
    SpikeUp {
        spikes: SpikeSet,
    },
    /// Contraction: slide moves rearward relative to the frame.
    TractionPull,
    /// Expansion: slide moves forward against an anchored spike, pushing
    /// the frame backward.
    TractionPushBack,
}

/// Which primitive a phase belongs to; selects drive current and slip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    Straight,
    Turn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclePhase {
    pub kind: PhaseKind,
    pub maneuver: Maneuver,
    /// Seconds.
    pub duration: f64,
}

impl CyclePhase {
    pub fn is_slide_motion(&self) -> bool {
        matches!(
            self.kind,
            PhaseKind::SlideToFront | PhaseKind::TractionPull | PhaseKind::TractionPushBack
        )
    }

    pub fn is_traction(&self) -> bool {
        matches!(
            self.kind,
            PhaseKind::TractionPull | PhaseKind::TractionPushBack
        )
    }

    /// Number of linear actuators moving during this phase.
    pub fn moving_actuators(&self) -> usize {
        match self.kind {
            PhaseKind::LowerTool | PhaseKind::RaiseTool => 1,
            PhaseKind::SpikeDown { spikes, .. } | PhaseKind::SpikeUp { spikes } => spikes.count(),
            _ => 0,
        }
    }

    /// Telemetry label.
    pub fn label(&self) -> String {
        match self.kind {
            PhaseKind::LowerTool => "lower_tool".into(),
            PhaseKind::RaiseTool => "raise_tool".into(),
            PhaseKind::SlideToFront => "slide_to_front".into(),
            PhaseKind::SpikeDown { spikes, mode } => {
                format!("spike_down_{}_{}", spikes.label(), mode.label())
            }
            PhaseKind::SpikeUp { spikes } => format!("spike_up_{}", spikes.label()),
            PhaseKind::TractionPull => "traction_pull".into(),
            PhaseKind::TractionPushBack => "traction_push_back".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "primitive", rename_all = "snake_case")]
pub enum ControlPrimitive {
    Straight { cycles: NonZeroU32 },
    TurnLeft { cycles: NonZeroU32 },
    TurnRight { cycles: NonZeroU32 },
}

fn nonzero(cycles: u32) -> Result<NonZeroU32> {
    NonZeroU32::new(cycles)
        .ok_or_else(|| Error::InvalidProgram("a primitive needs at least one cycle".into()))
}

impl ControlPrimitive {
    pub fn straight(cycles: u32) -> Result<Self> {
        Ok(ControlPrimitive::Straight {
            cycles: nonzero(cycles)?,
        })
    }

    pub fn turn_left(cycles: u32) -> Result<Self> {
        Ok(ControlPrimitive::TurnLeft {
            cycles: nonzero(cycles)?,
        })
    }

    pub fn turn_right(cycles: u32) -> Result<Self> {
        Ok(ControlPrimitive::TurnRight {
            cycles: nonzero(cycles)?,
        })
    }

    pub fn turn(direction: TurnDirection, cycles: u32) -> Result<Self> {
        match direction {
            TurnDirection::Left => Self::turn_left(cycles),
            TurnDirection::Right => Self::turn_right(cycles),
        }
    }

    pub fn cycles(&self) -> u32 {
        match *self {
            ControlPrimitive::Straight { cycles }
            | ControlPrimitive::TurnLeft { cycles }
            | ControlPrimitive::TurnRight { cycles } => cycles.get(),
        }
    }

    pub fn turn_direction(&self) -> Option<TurnDirection> {
        match self {
            ControlPrimitive::Straight { .. } => None,
            ControlPrimitive::TurnLeft { .. } => Some(TurnDirection::Left),
            ControlPrimitive::TurnRight { .. } => Some(TurnDirection::Right),
        }
    }
}

impl fmt::Display for ControlPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlPrimitive::Straight { cycles } => write!(f, "Straight({cycles})"),
            ControlPrimitive::TurnLeft { cycles } => write!(f, "TurnLeft({cycles})"),
            ControlPrimitive::TurnRight { cycles } => write!(f, "TurnRight({cycles})"),
        }
    }
}

/// Rotation sign of a primitive: `+1` counterclockwise, `-1` clockwise.
pub fn direction_of(primitive: &ControlPrimitive) -> i8 {
    match primitive.turn_direction() {
        Some(d) => d.sign() as i8,
        None => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleProgram {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub program: Vec<ControlPrimitive>,
    #[serde(default)]
    pub tool_engaged: bool,
}

impl CycleProgram {
    pub fn new(program: Vec<ControlPrimitive>, tool_engaged: bool) -> Result<Self> {
        let p = Self {
            name: None,
            program,
            tool_engaged,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn single(primitive: ControlPrimitive, tool_engaged: bool) -> Self {
        Self {
            name: None,
            program: vec![primitive],
            tool_engaged,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.program.is_empty() {
            return Err(Error::InvalidProgram("program is empty".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn total_cycles(&self) -> u32 {
        self.program.iter().map(|p| p.cycles()).sum()
    }
}

/// Slide speeds and actuator timing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingModel {
    /// Slide speed relative to the frame while pulling the implement, m/s.
    pub traction_speed: f64,
    /// Unloaded slide return, m/s.
    pub return_speed: f64,
    /// Slide speed during turn contraction and expansion, m/s.
    pub turn_speed: f64,
    /// Seconds per spike or tool actuator move.
    pub actuator_time: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            traction_speed: 0.032,
            return_speed: 0.045,
            turn_speed: 0.045,
            actuator_time: 5.0,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("traction_speed", self.traction_speed),
            ("return_speed", self.return_speed),
            ("turn_speed", self.turn_speed),
            ("actuator_time", self.actuator_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTiming(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn slide_duration(stroke: f64, speed: f64) -> f64 {
        // a zero stroke still occupies a short, positive phase
        (stroke / speed).max(1e-3)
    }
}

/// A compiled phase tagged with its position in the program.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPhase {
    pub phase: CyclePhase,
    /// Index of the primitive in the program.
    pub primitive: usize,
    /// Cycle index within the primitive; `None` for tool moves.
    pub cycle: Option<u32>,
}

/// Compile one primitive into its phase sequence.
pub fn compile(
    primitive: &ControlPrimitive,
    timing: &TimingModel,
    stroke: f64,
    tool_engaged: bool,
) -> Vec<CyclePhase> {
    compile_scheduled(primitive, 0, timing, stroke, tool_engaged)
        .into_iter()
        .map(|s| s.phase)
        .collect()
}

fn compile_scheduled(
    primitive: &ControlPrimitive,
    index: usize,
    timing: &TimingModel,
    stroke: f64,
    tool_engaged: bool,
) -> Vec<ScheduledPhase> {
    let act = timing.actuator_time;
    let mut out = Vec::new();
    let mut push = |kind, maneuver, duration, cycle| {
        out.push(ScheduledPhase {
            phase: CyclePhase {
                kind,
                maneuver,
                duration,
            },
            primitive: index,
            cycle,
        })
    };
    match primitive.turn_direction() {
        None => {
            let m = Maneuver::Straight;
            if tool_engaged {
                push(PhaseKind::LowerTool, m, act, None);
            }
            let pull = TimingModel::slide_duration(stroke, timing.traction_speed);
            let ret = TimingModel::slide_duration(stroke, timing.return_speed);
            for c in 0..primitive.cycles() {
                push(
                    PhaseKind::SpikeDown {
                        spikes: SpikeSet::Both,
                        mode: SpikeMode::Passive,
                    },
                    m,
                    act,
                    Some(c),
                );
                push(PhaseKind::TractionPull, m, pull, Some(c));
                push(
                    PhaseKind::SpikeUp {
                        spikes: SpikeSet::Both,
                    },
                    m,
                    act,
                    Some(c),
                );
                push(PhaseKind::SlideToFront, m, ret, Some(c));
            }
        }
        Some(direction) => {
            let m = Maneuver::Turn;
            if tool_engaged {
                push(PhaseKind::RaiseTool, m, act, None);
            }
            let near = SpikeSet::from(direction.contraction_side());
            let far = SpikeSet::from(direction.expansion_side());
            let half = TimingModel::slide_duration(stroke, timing.turn_speed);
            for c in 0..primitive.cycles() {
                let down = |spikes| PhaseKind::SpikeDown {
                    spikes,
                    mode: SpikeMode::ActiveDown,
                };
                push(down(near), m, act, Some(c));
                push(PhaseKind::TractionPull, m, half, Some(c));
                push(PhaseKind::SpikeUp { spikes: near }, m, act, Some(c));
                push(down(far), m, act, Some(c));
                push(PhaseKind::TractionPushBack, m, half, Some(c));
                push(PhaseKind::SpikeUp { spikes: far }, m, act, Some(c));
            }
        }
    }
    out
}

/// Compile a whole program. The tool is lowered before straight runs and
/// raised before turns only when its state actually changes.
pub fn compile_program(
    program: &CycleProgram,
    timing: &TimingModel,
    stroke: f64,
) -> Result<Vec<ScheduledPhase>> {
    program.validate()?;
    timing.validate()?;
    let mut tool_lowered = false;
    let mut out = Vec::new();
    for (i, primitive) in program.program.iter().enumerate() {
        let needs_tool_move = program.tool_engaged
            && match primitive {
                ControlPrimitive::Straight { .. } => !tool_lowered,
                _ => tool_lowered || i == 0,
            };
        out.extend(compile_scheduled(
            primitive,
            i,
            timing,
            stroke,
            needs_tool_move,
        ));
        if program.tool_engaged {
            tool_lowered = matches!(primitive, ControlPrimitive::Straight { .. });
        }
    }
    validate_sequence(out.iter().map(|s| &s.phase))?;
    Ok(out)
}

pub fn total_duration<'a>(phases: impl IntoIterator<Item = &'a CyclePhase>) -> f64 {
    phases.into_iter().map(|p| p.duration).sum()
}

/// Check that a phase sequence is well formed, starting with all spikes
/// retracted: positive durations, at least one anchored spike during
/// traction and no anchored spike while the slide returns.
pub fn validate_sequence<'a>(phases: impl IntoIterator<Item = &'a CyclePhase>) -> Result<()> {
    let mut left = SpikeMode::Retracted;
    let mut right = SpikeMode::Retracted;
    for (i, phase) in phases.into_iter().enumerate() {
        if !(phase.duration > 0.0) {
            return Err(Error::InvalidPhase(format!(
                "phase {i} has non-positive duration"
            )));
        }
        match phase.kind {
            PhaseKind::SpikeDown { spikes, mode } => {
                if spikes.contains(AnchorSide::Left) {
                    left = mode;
                }
                if spikes.contains(AnchorSide::Right) {
                    right = mode;
                }
            }
            PhaseKind::SpikeUp { spikes } => {
                if spikes.contains(AnchorSide::Left) {
                    left = SpikeMode::Retracted;
                }
                if spikes.contains(AnchorSide::Right) {
                    right = SpikeMode::Retracted;
                }
            }
            PhaseKind::TractionPull | PhaseKind::TractionPushBack => {
                if !left.is_anchored() && !right.is_anchored() {
                    return Err(Error::InvalidPhase(format!(
                        "phase {i}: traction with no anchored spike"
                    )));
                }
            }
            PhaseKind::SlideToFront => {
                if left.is_anchored() || right.is_anchored() {
                    return Err(Error::InvalidPhase(format!(
                        "phase {i}: slide return with a spike anchored"
                    )));
                }
            }
            PhaseKind::LowerTool | PhaseKind::RaiseTool => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const STROKE: f64 = 1.12;

    #[test]
    fn straight_cycle_takes_about_70_seconds() {
        let t = TimingModel::default();
        let one = compile(&ControlPrimitive::straight(1).unwrap(), &t, STROKE, false);
        assert_abs_diff_eq!(total_duration(&one), 70.0, epsilon = 0.5);
        let with_tool = compile(&ControlPrimitive::straight(1).unwrap(), &t, STROKE, true);
        assert_eq!(with_tool[0].kind, PhaseKind::LowerTool);
        assert_abs_diff_eq!(
            total_duration(&with_tool),
            total_duration(&one) + t.actuator_time,
            epsilon = 1e-12
        );
    }

    #[test]
    fn headland_turn_takes_about_220_seconds() {
        let t = TimingModel::default();
        let phases = compile(&ControlPrimitive::turn_left(3).unwrap(), &t, STROKE, true);
        assert_eq!(phases[0].kind, PhaseKind::RaiseTool);
        let total = total_duration(&phases);
        assert!((total - 220.0).abs() <= 15.0, "turn took {total} s");
    }

    #[test]
    fn zero_cycles_rejected() {
        assert!(matches!(
            ControlPrimitive::straight(0),
            Err(Error::InvalidProgram(_))
        ));
        let err = CycleProgram::from_json(r#"{"program":[{"primitive":"straight","cycles":0}]}"#);
        assert!(err.is_err());
        assert!(CycleProgram::new(vec![], false).is_err());
    }

    #[test]
    fn direction_signs() {
        assert_eq!(direction_of(&ControlPrimitive::turn_left(1).unwrap()), 1);
        assert_eq!(direction_of(&ControlPrimitive::turn_right(1).unwrap()), -1);
        assert_eq!(direction_of(&ControlPrimitive::straight(2).unwrap()), 0);
    }

    #[test]
    fn turn_sequences_mirror() {
        let t = TimingModel::default();
        let l = compile(&ControlPrimitive::turn_left(2).unwrap(), &t, STROKE, false);
        let r = compile(&ControlPrimitive::turn_right(2).unwrap(), &t, STROKE, false);
        assert_eq!(l.len(), r.len());
        let swap = |s: SpikeSet| match s {
            SpikeSet::Left => SpikeSet::Right,
            SpikeSet::Right => SpikeSet::Left,
            SpikeSet::Both => SpikeSet::Both,
        };
        for (a, b) in l.iter().zip(&r) {
            let mirrored = match a.kind {
                PhaseKind::SpikeDown { spikes, mode } => PhaseKind::SpikeDown {
                    spikes: swap(spikes),
                    mode,
                },
                PhaseKind::SpikeUp { spikes } => PhaseKind::SpikeUp {
                    spikes: swap(spikes),
                },
                k => k,
            };
            assert_eq!(mirrored, b.kind);
            assert_eq!(a.duration, b.duration);
        }
        // a left turn contracts on the right spike
        assert_eq!(
            l[0].kind,
            PhaseKind::SpikeDown {
                spikes: SpikeSet::Right,
                mode: SpikeMode::ActiveDown
            }
        );
    }

    #[test]
    fn program_json_round_trip() {
        let text = r#"{"program":[{"primitive":"straight","cycles":5},{"primitive":"turn_left","cycles":3}],"tool_engaged":true}"#;
        let p = CycleProgram::from_json(text).unwrap();
        assert_eq!(p.total_cycles(), 8);
        assert_eq!(serde_json::to_string(&p).unwrap(), text);
    }

    #[test]
    fn program_tool_moves_only_on_change() {
        let t = TimingModel::default();
        let p = CycleProgram::new(
            vec![
                ControlPrimitive::straight(2).unwrap(),
                ControlPrimitive::straight(1).unwrap(),
                ControlPrimitive::turn_left(1).unwrap(),
                ControlPrimitive::turn_right(1).unwrap(),
                ControlPrimitive::straight(1).unwrap(),
            ],
            true,
        )
        .unwrap();
        let phases = compile_program(&p, &t, STROKE).unwrap();
        let tool: Vec<_> = phases
            .iter()
            .filter(|s| matches!(s.phase.kind, PhaseKind::LowerTool | PhaseKind::RaiseTool))
            .map(|s| (s.phase.kind, s.primitive))
            .collect();
        assert_eq!(
            tool,
            vec![
                (PhaseKind::LowerTool, 0),
                (PhaseKind::RaiseTool, 2),
                (PhaseKind::LowerTool, 4)
            ]
        );
    }

    #[test]
    fn malformed_sequence_rejected() {
        let pull = CyclePhase {
            kind: PhaseKind::TractionPull,
            maneuver: Maneuver::Straight,
            duration: 1.0,
        };
        assert!(validate_sequence([&pull]).is_err());
        let down = CyclePhase {
            kind: PhaseKind::SpikeDown {
                spikes: SpikeSet::Left,
                mode: SpikeMode::Passive,
            },
            maneuver: Maneuver::Straight,
            duration: 1.0,
        };
        let ret = CyclePhase {
            kind: PhaseKind::SlideToFront,
            ..pull
        };
        assert!(validate_sequence([&down, &pull]).is_ok());
        assert!(validate_sequence([&down, &ret]).is_err());
    }
}
