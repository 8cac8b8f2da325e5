//! Emulated total-station prism and IMU streams, and their fusion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::normalize_angle;
use crate::trajectory::{interpolate, TrajectoryPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSpec {
    /// Hz.
    pub prism_rate: f64,
    /// Per-axis standard deviation, meters.
    pub prism_sigma: f64,
    /// Hz.
    pub imu_rate: f64,
    /// Radians.
    pub imu_yaw_sigma: f64,
    pub rng_seed: u64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            prism_rate: 5.0,
            // +-4 mm read as a 2-sigma envelope
            prism_sigma: 0.002,
            imu_rate: 50.0,
            imu_yaw_sigma: 0.2f64.to_radians(),
            rng_seed: 7,
        }
    }
}

impl SensorSpec {
    pub fn noiseless() -> Self {
        Self {
            prism_sigma: 0.0,
            imu_yaw_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prism_rate > 0.0 && self.imu_rate > 0.0) {
            return Err(Error::InvalidConfig("sensor rates must be > 0".into()));
        }
        if !(self.prism_sigma >= 0.0 && self.imu_yaw_sigma >= 0.0) {
            return Err(Error::InvalidConfig("sensor sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrismSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    /// Radians.
    pub yaw: f64,
}

fn sample_times(t0: f64, t1: f64, rate: f64) -> impl Iterator<Item = f64> {
    let period = 1.0 / rate;
    let n = ((t1 - t0) * rate + 1e-9).floor() as usize;
    (0..=n).map(move |k| t0 + k as f64 * period)
}

fn gaussian(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"))
}

/// Sample a ground-truth trajectory as prism fixes and IMU yaw readings.
pub fn emulate(
    truth: &[TrajectoryPoint],
    spec: &SensorSpec,
) -> Result<(Vec<PrismSample>, Vec<ImuSample>)> {
    spec.validate()?;
    let (first, last) = match (truth.first(), truth.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::InvalidConfig("truth trajectory is empty".into())),
    };
    if truth.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::InvalidConfig(
            "truth trajectory is not time ordered".into(),
        ));
    }
    let mut prism_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut imu_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let pos_noise = gaussian(spec.prism_sigma);
    let yaw_noise = gaussian(spec.imu_yaw_sigma);

    let prism = sample_times(first, last, spec.prism_rate)
        .map(|t| {
            let p = interpolate(truth, t).expect("non-empty");
            let (nx, ny) = match &pos_noise {
                Some(n) => (n.sample(&mut prism_rng), n.sample(&mut prism_rng)),
                None => (0.0, 0.0),
            };
            PrismSample {
                t,
                x: p.x + nx,
                y: p.y + ny,
            }
        })
        .collect();
    let imu = sample_times(first, last, spec.imu_rate)
        .map(|t| {
            let p = interpolate(truth, t).expect("non-empty");
            let n = yaw_noise.as_ref().map_or(0.0, |n| n.sample(&mut imu_rng));
            ImuSample {
                t,
                yaw: normalize_angle(p.heading + n),
            }
        })
        .collect();
    Ok((prism, imu))
}

/// Fuse prism fixes and IMU yaw onto the IMU timeline: positions are
/// linearly interpolated between the bracketing prism fixes, headings are
/// taken from the IMU unchanged.
pub fn fuse(prism: &[PrismSample], imu: &[ImuSample]) -> Result<Vec<TrajectoryPoint>> {
    if prism.is_empty() || imu.is_empty() {
        return Err(Error::NoOverlap);
    }
    if let [only] = prism {
        return Ok(imu
            .iter()
            .map(|s| TrajectoryPoint {
                t: s.t,
                x: only.x,
                y: only.y,
                heading: s.yaw,
            })
            .collect());
    }
    let t0 = prism[0].t;
    let t1 = prism[prism.len() - 1].t;
    let out: Vec<TrajectoryPoint> = imu
        .iter()
        .filter(|s| s.t >= t0 && s.t <= t1)
        .map(|s| {
            let i = prism
                .partition_point(|p| p.t <= s.t)
                .clamp(1, prism.len() - 1);
            let (a, b) = (&prism[i - 1], &prism[i]);
            let w = if b.t > a.t {
                (s.t - a.t) / (b.t - a.t)
            } else {
                0.0
            };
            TrajectoryPoint {
                t: s.t,
                x: a.x + w * (b.x - a.x),
                y: a.y + w * (b.y - a.y),
                heading: s.yaw,
            }
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NoOverlap);
    }
    Ok(out)
}

/// Root-mean-square planar position error of `estimate` against `truth`
/// interpolated at the estimate's timestamps.
pub fn position_rmse(estimate: &[TrajectoryPoint], truth: &[TrajectoryPoint]) -> f64 {
    if estimate.is_empty() {
        return 0.0;
    }
    let sum: f64 = estimate
        .iter()
        .map(|e| {
            let t = interpolate(truth, e.t).expect("non-empty truth");
            (e.x - t.x).powi(2) + (e.y - t.y).powi(2)
        })
        .sum();
    (sum / estimate.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(duration: f64, dt: f64, v: f64) -> Vec<TrajectoryPoint> {
        let n = (duration / dt).round() as usize;
        (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                TrajectoryPoint {
                    t,
                    x: v * t,
                    y: 0.5 * v * t,
                    heading: 0.3,
                }
            })
            .collect()
    }

    #[test]
    fn sample_counts() {
        let truth = line(10.0, 0.1, 0.01);
        let (prism, imu) = emulate(&truth, &SensorSpec::default()).unwrap();
        assert_eq!(prism.len(), 50);
        assert_eq!(imu.len(), 496);
    }

    #[test]
    fn noiseless_samples_on_truth_and_fusion_exact() {
        let truth = line(10.0, 0.1, 0.01);
        let (prism, imu) = emulate(&truth, &SensorSpec::noiseless()).unwrap();
        for p in &prism {
            let t = interpolate(&truth, p.t).unwrap();
            assert!((p.x - t.x).abs() < 1e-12 && (p.y - t.y).abs() < 1e-12);
        }
        let fused = fuse(&prism, &imu).unwrap();
        assert!(position_rmse(&fused, &truth) < 1e-12);
        for (f, i) in fused
            .iter()
            .zip(imu.iter().filter(|i| i.t <= prism.last().unwrap().t))
        {
            assert_eq!(f.t, i.t);
        }
    }

    #[test]
    fn single_prism_fix_is_constant() {
        let prism = [PrismSample {
            t: 1.0,
            x: 2.0,
            y: 3.0,
        }];
        let imu = [
            ImuSample { t: 0.0, yaw: 0.1 },
            ImuSample { t: 2.0, yaw: 0.2 },
        ];
        let fused = fuse(&prism, &imu).unwrap();
        assert_eq!(fused.len(), 2);
        assert!(fused.iter().all(|p| p.x == 2.0 && p.y == 3.0));
    }

    #[test]
    fn disjoint_ranges() {
        let prism = [
            PrismSample {
                t: 0.0,
                x: 0.0,
                y: 0.0,
            },
            PrismSample {
                t: 1.0,
                x: 0.0,
                y: 0.0,
            },
        ];
        let imu = [ImuSample { t: 5.0, yaw: 0.0 }];
        assert!(matches!(fuse(&prism, &imu), Err(Error::NoOverlap)));
    }
}
