//! Translate high-level goals into cycle programs and predict their outcome.

use serde::{Deserialize, Serialize};

use crate::cycle::{compile_program, ControlPrimitive, CycleProgram, TimingModel};
use crate::error::{Error, Result};
use crate::kinematics::{cycle_turn_angle, straight_cycle_advance, TurnDirection};
use crate::sim::{PowerModel, SimConfig};
use crate::soil::effective_slip;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "goal", rename_all = "snake_case")]
pub enum Goal {
    /// Meters of straight travel.
    Advance { distance: f64 },
    /// Degrees, in `(0, 360]`.
    Turn {
        angle: f64,
        direction: TurnDirection,
    },
    /// 180 degree turn into the next row.
    HeadlandTurn { direction: TurnDirection },
    /// Rows of `row_length` meters joined by alternating headland turns,
    /// starting to the left.
    RowMission { row_length: f64, n_rows: u32 },
}

/// Per-cycle figures the planner quantizes against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerCalibration {
    /// Meters per straight cycle.
    pub advance_per_cycle: f64,
    /// Degrees per turn cycle, magnitude.
    pub turn_per_cycle_deg: f64,
    pub timing: TimingModel,
    pub power: PowerModel,
    /// Slide stroke, meters.
    pub stroke: f64,
}

impl Default for PlannerCalibration {
    fn default() -> Self {
        Self::from_config(&SimConfig::default()).expect("default config is valid")
    }
}

impl PlannerCalibration {
    /// Nominal figures of a simulator configuration with the tool lowered.
    pub fn from_config(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let slip = effective_slip(config.draft_force / 2.0, &config.soil);
        let turn = cycle_turn_angle(
            &config.geometry,
            &config.weight_transfer,
            TurnDirection::Left,
        )?;
        Ok(Self {
            advance_per_cycle: straight_cycle_advance(config.geometry.stroke, slip),
            turn_per_cycle_deg: turn.abs().to_degrees(),
            timing: config.timing,
            power: config.power,
            stroke: config.geometry.stroke,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidCalibration(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.advance_per_cycle.is_finite() && self.advance_per_cycle > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "advance_per_cycle must be > 0, got {}",
                self.advance_per_cycle
            )));
        }
        if !(self.turn_per_cycle_deg.is_finite() && self.turn_per_cycle_deg > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "turn_per_cycle_deg must be > 0, got {}",
                self.turn_per_cycle_deg
            )));
        }
        if !(self.stroke.is_finite() && self.stroke > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "stroke must be > 0, got {}",
                self.stroke
            )));
        }
        self.timing.validate()?;
        self.power.validate()
    }
}

/// How far the quantized plan goes past the goal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overshoot {
    pub distance: f64,
    pub angle_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub program: CycleProgram,
    pub overshoot: Overshoot,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub net_advance: f64,
    /// Signed, counterclockwise positive.
    pub net_turn_deg: f64,
    pub duration: f64,
    pub energy_wh: f64,
}

fn cycles_for(amount: f64, per_cycle: f64) -> Result<u32> {
    let n = (amount / per_cycle - 1e-9).ceil().max(1.0);
    if n > u32::MAX as f64 {
        return Err(Error::InvalidGoal(format!(
            "{amount} needs too many cycles"
        )));
    }
    Ok(n as u32)
}

/// Plan `goal` with the tool engaged during straight runs.
pub fn plan(goal: &Goal, calibration: &PlannerCalibration) -> Result<Plan> {
    plan_with_tool(goal, calibration, true)
}

pub fn plan_with_tool(
    goal: &Goal,
    calibration: &PlannerCalibration,
    tool_engaged: bool,
) -> Result<Plan> {
    calibration.validate()?;
    let adv = calibration.advance_per_cycle;
    let turn = calibration.turn_per_cycle_deg;
    let straight = |distance: f64| -> Result<(ControlPrimitive, f64)> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::InvalidGoal(format!(
                "distance must be > 0, got {distance}"
            )));
        }
        let n = cycles_for(distance, adv)?;
        Ok((ControlPrimitive::straight(n)?, n as f64 * adv - distance))
    };
    let rotate = |angle: f64, direction: TurnDirection| -> Result<(ControlPrimitive, f64)> {
        if !(angle.is_finite() && angle > 0.0 && angle <= 360.0) {
            return Err(Error::InvalidGoal(format!(
                "turn angle must lie in (0, 360], got {angle}"
            )));
        }
        let n = cycles_for(angle, turn)?;
        Ok((
            ControlPrimitive::turn(direction, n)?,
            n as f64 * turn - angle,
        ))
    };

    let mut overshoot = Overshoot::default();
    let primitives = match *goal {
        Goal::Advance { distance } => {
            let (p, o) = straight(distance)?;
            overshoot.distance = o;
            vec![p]
        }
        Goal::Turn { angle, direction } => {
            let (p, o) = rotate(angle, direction)?;
            overshoot.angle_deg = o;
            vec![p]
        }
        Goal::HeadlandTurn { direction } => {
            let (p, o) = rotate(180.0, direction)?;
            overshoot.angle_deg = o;
            vec![p]
        }
        Goal::RowMission { row_length, n_rows } => {
            if n_rows == 0 {
                return Err(Error::InvalidGoal(
                    "a mission needs at least one row".into(),
                ));
            }
            let (row, row_over) = straight(row_length)?;
            let mut out = vec![row];
            overshoot.distance = row_over;
            for k in 1..n_rows {
                let direction = if k % 2 == 1 {
                    TurnDirection::Left
                } else {
                    TurnDirection::Right
                };
                let (t, o) = rotate(180.0, direction)?;
                overshoot.angle_deg = overshoot.angle_deg.max(o);
                out.push(t);
                out.push(row);
            }
            out
        }
    };
    Ok(Plan {
        program: CycleProgram::new(primitives, tool_engaged)?,
        overshoot,
    })
}

/// Predicted outcome of `program` from the calibration alone.
pub fn predict(program: &CycleProgram, calibration: &PlannerCalibration) -> Result<Prediction> {
    calibration.validate()?;
    let schedule = compile_program(program, &calibration.timing, calibration.stroke)?;
    let mut net_advance = 0.0;
    let mut net_turn_deg = 0.0;
    for p in &program.program {
        let n = p.cycles() as f64;
        match p.turn_direction() {
            None => net_advance += n * calibration.advance_per_cycle,
            Some(d) => net_turn_deg += d.sign() * n * calibration.turn_per_cycle_deg,
        }
    }
    let duration = schedule.iter().map(|s| s.phase.duration).sum();
    let energy_j: f64 = schedule
        .iter()
        .map(|s| calibration.power.phase_power(&s.phase) * s.phase.duration)
        .sum();
    Ok(Prediction {
        net_advance,
        net_turn_deg,
        duration,
        energy_wh: energy_j / 3600.0,
    })
}
