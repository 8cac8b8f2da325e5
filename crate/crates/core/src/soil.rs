//! Spike penetration, holding force and slip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Actuator position of a spike.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeMode {
    /// Pulled out of the soil.
    #[default]
    Retracted,
    /// Half extended: free to self-penetrate under load.
    Passive,
    /// Forced to full depth by the actuator.
    ActiveDown,
}

impl SpikeMode {
    pub fn is_anchored(self) -> bool {
        !matches!(self, SpikeMode::Retracted)
    }

    pub fn label(self) -> &'static str {
        match self {
            SpikeMode::Retracted => "retracted",
            SpikeMode::Passive => "passive",
            SpikeMode::ActiveDown => "active_down",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "retracted" => Some(SpikeMode::Retracted),
            "passive" => Some(SpikeMode::Passive),
            "active_down" => Some(SpikeMode::ActiveDown),
            _ => None,
        }
    }
}

/// Soil holding law `F = k * d^2` plus slip parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoilModel {
    /// Holding force per squared depth, N/m^2.
    pub holding_coefficient: f64,
    /// Penetration under vehicle weight alone.
    pub self_weight_depth: f64,
    /// Spike length.
    pub max_depth: f64,
    pub base_slip: f64,
    /// Extra slip per unit of load relative to full-depth holding force.
    pub slip_load_gain: f64,
}

impl Default for SoilModel {
    fn default() -> Self {
        Self {
            holding_coefficient: 1.2e5,
            self_weight_depth: 0.02,
            // k * 0.1^2 = 1200 N, the actuator push rating
            max_depth: 0.1,
            base_slip: 0.107,
            slip_load_gain: 0.0,
        }
    }
}

impl SoilModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.holding_coefficient.is_finite() && self.holding_coefficient > 0.0) {
            return Err(Error::InvalidSoil(format!(
                "holding_coefficient must be > 0, got {}",
                self.holding_coefficient
            )));
        }
        if !(self.max_depth.is_finite()
            && self.self_weight_depth >= 0.0
            && self.self_weight_depth <= self.max_depth)
        {
            return Err(Error::InvalidSoil(format!(
                "need 0 <= self_weight_depth ({}) <= max_depth ({})",
                self.self_weight_depth, self.max_depth
            )));
        }
        if !(0.0..1.0).contains(&self.base_slip) {
            return Err(Error::InvalidSoil(format!(
                "base_slip must be in [0, 1), got {}",
                self.base_slip
            )));
        }
        if !(self.slip_load_gain.is_finite() && self.slip_load_gain >= 0.0) {
            return Err(Error::InvalidSoil(format!(
                "slip_load_gain must be >= 0, got {}",
                self.slip_load_gain
            )));
        }
        Ok(())
    }

    /// Holding force at full depth.
    pub fn max_holding_force(&self) -> f64 {
        self.holding_coefficient * self.max_depth * self.max_depth
    }
}

/// Depth a passive spike settles at while carrying `draft_force`.
pub fn passive_penetration_depth(draft_force: f64, soil: &SoilModel) -> Result<f64> {
    if !(draft_force >= 0.0) {
        return Err(Error::InvalidSoil(format!(
            "draft force must be >= 0, got {draft_force}"
        )));
    }
    let needed = (draft_force / soil.holding_coefficient).sqrt();
    // relative slack so F = k * max_depth^2 lands exactly on the boundary
    if needed > soil.max_depth * (1.0 + 1e-12) {
        return Err(Error::TractionLimitExceeded {
            required: draft_force,
            depth: needed,
            max_depth: soil.max_depth,
        });
    }
    Ok(needed.clamp(soil.self_weight_depth, soil.max_depth))
}

pub fn holding_force(depth: f64, mode: SpikeMode, soil: &SoilModel) -> f64 {
    match mode {
        SpikeMode::Retracted => 0.0,
        SpikeMode::Passive => {
            let d = depth.clamp(0.0, soil.max_depth);
            soil.holding_coefficient * d * d
        }
        SpikeMode::ActiveDown => soil.max_holding_force(),
    }
}

pub fn effective_slip(draft_force: f64, soil: &SoilModel) -> f64 {
    let load = (draft_force.max(0.0)) / soil.max_holding_force();
    (soil.base_slip + soil.slip_load_gain * load).clamp(0.0, 1.0 - f64::EPSILON)
}
