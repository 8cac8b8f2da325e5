//! Fit geometry, weight-transfer and slip parameters to observed figures
//! with a bounded coordinate search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    alpha, beta, cycle_turn_angle, straight_cycle_advance, AnchorSide, TurnDirection,
};
use crate::sim::SimConfig;

/// Observed figures to match. Angles are magnitudes in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationTargets {
    pub alpha_deg: Option<f64>,
    pub beta_deg: Option<f64>,
    pub per_cycle_deg: Option<f64>,
    pub advance_m: Option<f64>,
}

impl CalibrationTargets {
    fn count(&self) -> usize {
        [
            self.alpha_deg,
            self.beta_deg,
            self.per_cycle_deg,
            self.advance_m,
        ]
        .iter()
        .filter(|t| t.is_some())
        .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    /// Spike distance at full contraction; the extended distance follows the
    /// fixed stroke.
    XContracted,
    SpikeHalfSpacing,
    /// Axial weight-transfer offset, same at both ends of the stroke.
    WeightTransferAxial,
    /// Lateral weight-transfer offset, same at both ends of the stroke.
    WeightTransferLateral,
    BaseSlip,
}

impl FreeParam {
    fn bounds(self) -> (f64, f64) {
        match self {
            FreeParam::XContracted => (1e-3, 10.0),
            FreeParam::SpikeHalfSpacing => (0.0, 5.0),
            FreeParam::WeightTransferAxial | FreeParam::WeightTransferLateral => (-1.0, 1.0),
            FreeParam::BaseSlip => (0.0, 0.999),
        }
    }

    fn get(self, c: &SimConfig) -> f64 {
        match self {
            FreeParam::XContracted => c.geometry.x_contracted,
            FreeParam::SpikeHalfSpacing => c.geometry.spike_half_spacing,
            FreeParam::WeightTransferAxial => c.weight_transfer.y_contracted,
            FreeParam::WeightTransferLateral => c.weight_transfer.z_contracted,
            FreeParam::BaseSlip => c.soil.base_slip,
        }
    }

    fn set(self, c: &mut SimConfig, v: f64) {
        match self {
            FreeParam::XContracted => {
                c.geometry.x_contracted = v;
                c.geometry.x_extended = v + c.geometry.stroke;
            }
            FreeParam::SpikeHalfSpacing => c.geometry.spike_half_spacing = v,
            FreeParam::WeightTransferAxial => {
                c.weight_transfer.y_contracted = v;
                c.weight_transfer.y_extended = v;
            }
            FreeParam::WeightTransferLateral => {
                c.weight_transfer.z_contracted = v;
                c.weight_transfer.z_extended = v;
            }
            FreeParam::BaseSlip => c.soil.base_slip = v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    pub max_iterations: usize,
    /// Accepted residual norm.
    pub tolerance: f64,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-6,
            initial_step: 0.05,
            min_step: 1e-13,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: SimConfig,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Residuals of `config` against `targets`; `None` when the parameters are
/// physically invalid.
pub fn residuals(config: &SimConfig, targets: &CalibrationTargets) -> Option<Vec<f64>> {
    let g = &config.geometry;
    let wt = &config.weight_transfer;
    if g.validate().is_err() || wt.validate(g).is_err() || config.soil.validate().is_err() {
        return None;
    }
    let mut r = Vec::with_capacity(4);
    if let Some(t) = targets.alpha_deg {
        r.push(alpha(g, AnchorSide::Left).abs().to_degrees() - t);
    }
    if let Some(t) = targets.beta_deg {
        r.push(beta(g, wt, AnchorSide::Left).ok()?.abs().to_degrees() - t);
    }
    if let Some(t) = targets.per_cycle_deg {
        r.push(
            cycle_turn_angle(g, wt, TurnDirection::Left)
                .ok()?
                .abs()
                .to_degrees()
                - t,
        );
    }
    if let Some(t) = targets.advance_m {
        r.push(straight_cycle_advance(g.stroke, config.soil.base_slip) - t);
    }
    Some(r)
}

fn cost(config: &SimConfig, targets: &CalibrationTargets) -> f64 {
    residuals(config, targets).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum())
}

/// Minimize squared target residuals over `free`, starting from `base`.
pub fn calibrate(
    base: &SimConfig,
    targets: &CalibrationTargets,
    free: &[FreeParam],
    options: &CalibrationOptions,
) -> Result<Calibration> {
    if targets.count() == 0 {
        return Err(Error::InvalidCalibration(
            "no calibration targets given".into(),
        ));
    }
    if free.is_empty() {
        return Err(Error::InvalidCalibration("no free parameters given".into()));
    }
    let mut config = *base;
    let mut best = cost(&config, targets);
    if !best.is_finite() {
        return Err(Error::InvalidCalibration(
            "initial parameters are invalid".into(),
        ));
    }
    let tol2 = options.tolerance * options.tolerance;
    let mut steps: Vec<f64> = vec![options.initial_step; free.len()];
    let mut iterations = 0;

    while best > tol2
        && iterations < options.max_iterations
        && steps.iter().any(|&s| s >= options.min_step)
    {
        iterations += 1;
        for (k, &param) in free.iter().enumerate() {
            let (lo, hi) = param.bounds();
            let v = param.get(&config);
            let mut improved = false;
            for candidate in [v + steps[k], v - steps[k]] {
                let candidate = candidate.clamp(lo, hi);
                if candidate == v {
                    continue;
                }
                let mut trial = config;
                param.set(&mut trial, candidate);
                let c = cost(&trial, targets);
                if c < best {
                    best = c;
                    config = trial;
                    improved = true;
                    break;
                }
            }
            if improved {
                steps[k] *= 1.5;
            } else {
                steps[k] *= 0.5;
            }
        }
    }
    let residual_norm = best.sqrt();
    if residual_norm > options.tolerance {
        return Err(Error::CalibrationFailed {
            residual: residual_norm,
            tolerance: options.tolerance,
            iterations,
        });
    }
    Ok(Calibration {
        config,
        residual_norm,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Bisection on the closed-form angle, independent of the search.
    fn x_contracted_for_alpha(target_deg: f64, s: f64, stroke: f64) -> f64 {
        let f = |x2: f64| {
            ((s / (x2 + stroke)).atan() - (s / x2).atan())
                .abs()
                .to_degrees()
                - target_deg
        };
        let (mut lo, mut hi) = (0.2, 2.0);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn alpha_target_recovers_x_contracted() {
        let oracle = x_contracted_for_alpha(21.0, 0.275, 1.12);
        assert_abs_diff_eq!(oracle, 0.46, epsilon = 0.005);
        let mut base = SimConfig::default();
        crate::calibrate::FreeParam::XContracted.set(&mut base, 0.7);
        let targets = CalibrationTargets {
            alpha_deg: Some(21.0),
            ..Default::default()
        };
        let fit = calibrate(
            &base,
            &targets,
            &[FreeParam::XContracted],
            &CalibrationOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(fit.config.geometry.x_contracted, oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(
            fit.config.geometry.x_extended - fit.config.geometry.x_contracted,
            1.12,
            epsilon = 1e-12
        );
    }

    #[test]
    fn advance_target_recovers_slip() {
        let mut base = SimConfig::default();
        base.soil.base_slip = 0.3;
        let targets = CalibrationTargets {
            advance_m: Some(1.0),
            ..Default::default()
        };
        let fit = calibrate(
            &base,
            &targets,
            &[FreeParam::BaseSlip],
            &CalibrationOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(fit.config.soil.base_slip, 1.0 - 1.0 / 1.12, epsilon = 1e-6);
    }

    #[test]
    fn satisfied_targets_take_no_iterations() {
        let mut base = SimConfig::default();
        base.soil.base_slip = 0.0;
        let targets = CalibrationTargets {
            advance_m: Some(1.12),
            ..Default::default()
        };
        let fit = calibrate(
            &base,
            &targets,
            &[FreeParam::BaseSlip],
            &CalibrationOptions::default(),
        )
        .unwrap();
        assert_eq!(fit.iterations, 0);
        assert_eq!(fit.residual_norm, 0.0);
        assert_eq!(fit.config, base);
    }

    #[test]
    fn unreachable_target_fails() {
        let targets = CalibrationTargets {
            alpha_deg: Some(120.0),
            ..Default::default()
        };
        let err = calibrate(
            &SimConfig::default(),
            &targets,
            &[FreeParam::XContracted],
            &CalibrationOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CalibrationFailed { .. }));
    }

    #[test]
    fn empty_inputs_rejected() {
        let c = SimConfig::default();
        assert!(calibrate(
            &c,
            &CalibrationTargets::default(),
            &[FreeParam::BaseSlip],
            &Default::default()
        )
        .is_err());
        let t = CalibrationTargets {
            advance_m: Some(1.0),
            ..Default::default()
        };
        assert!(calibrate(&c, &t, &[], &Default::default()).is_err());
    }
}
