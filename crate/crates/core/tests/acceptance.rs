//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use interlock_core::analysis::TurnReport;
use interlock_core::calibrate::{calibrate, CalibrationOptions, CalibrationTargets, FreeParam};
use interlock_core::cycle::{compile, total_duration, ControlPrimitive, CycleProgram, TimingModel};
use interlock_core::kinematics::{
    alpha, beta, normalize_angle, AnchorSide, Point, Pose, RadialPull, VehicleGeometry,
    WeightTransferModel,
};
use interlock_core::sensors::{emulate, fuse, position_rmse, SensorSpec};
use interlock_core::sim::{mean_power, run_program, SimConfig, SimRun};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA_TARGET_DEG: f64 = -21.0;
const ALPHA_TOL_DEG: f64 = 0.5;
const BETA_TARGET_DEG: f64 = 32.0;
const BETA_TOL_DEG: f64 = 0.5;
const CYCLE_TARGET_DEG: f64 = 53.0;
const CYCLE_TOL_DEG: f64 = 1.0;
const ANGLES_MAX_RUNTIME: Duration = Duration::from_secs(1);

const HEADLAND_RANGE_DEG: (f64, f64) = (180.0, 186.0);
const RUN_MAX_RUNTIME: Duration = Duration::from_secs(5);

const ADVANCE_TARGET_M: f64 = 5.00;
const ADVANCE_TOL_M: f64 = 0.05;
const BASE_SLIP: f64 = 0.107;

const FOOTPRINT_TARGET_M: (f64, f64) = (1.2, 1.9);
const TURNING_SPACE_TARGET_M: f64 = 3.02;
const FOOTPRINT_REL_TOL: f64 = 0.20;
const STROKE_M: f64 = 1.12;

const STRAIGHT_CYCLE_S: f64 = 70.0;
const STRAIGHT_CYCLE_TOL_S: f64 = 5.0;
const TURN_180_S: f64 = 220.0;
const TURN_180_TOL_S: f64 = 15.0;

const MEAN_POWER_W: f64 = 75.0;
const MEAN_POWER_REL_TOL: f64 = 0.15;
const TURN_POWER_CAP_W: f64 = 100.0;

const ORACLE_GEOMETRIES: usize = 1000;
const ORACLE_STEPS: usize = 1000;
const ORACLE_TOL_RAD: f64 = 1e-6;

const SMALL_STROKE_CENTER_TOL_M: f64 = 0.01;
const FULL_STROKE_MAX_OFFSET_M: f64 = 0.15;

const FUSION_SPEED_M_S: f64 = 0.01;
const FUSION_RMSE_MAX_M: f64 = 0.005;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn empirical() -> SimConfig {
    let text =
        std::fs::read_to_string(configs_dir().join("empirical.json")).expect("empirical config");
    SimConfig::from_json(&text).expect("empirical config parses")
}

fn program(p: Result<ControlPrimitive, interlock_core::Error>, tool: bool) -> CycleProgram {
    CycleProgram::single(p.unwrap(), tool)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn c01_predicted_angles() -> Outcome {
    let (res, took) = timed(|| {
        let base = SimConfig::default();
        let a = alpha(&base.geometry, AnchorSide::Left).to_degrees();
        let targets = CalibrationTargets {
            beta_deg: Some(BETA_TARGET_DEG),
            ..Default::default()
        };
        let fit = calibrate(
            &base,
            &targets,
            &[FreeParam::WeightTransferAxial],
            &CalibrationOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let b = beta(
            &fit.config.geometry,
            &fit.config.weight_transfer,
            AnchorSide::Left,
        )
        .map_err(|e| e.to_string())?
        .to_degrees();
        Ok::<_, String>((a, b, fit.iterations))
    });
    let (a, b, iters) = res?;
    let sum = a.abs() + b.abs();
    check(
        (a - ALPHA_TARGET_DEG).abs() <= ALPHA_TOL_DEG
            && (b.abs() - BETA_TARGET_DEG).abs() <= BETA_TOL_DEG
            && (sum - CYCLE_TARGET_DEG).abs() <= CYCLE_TOL_DEG
            && took < ANGLES_MAX_RUNTIME,
        format!(
            "alpha {a:.3} deg, beta {b:.3} deg ({iters} iterations), sum {sum:.3} deg, {took:.2?}"
        ),
    )
}

fn headland_run() -> Result<(SimRun, SimConfig), String> {
    let c = empirical();
    let run = run_program(&program(ControlPrimitive::turn_left(3), true), &c)
        .map_err(|e| e.to_string())?;
    Ok((run, c))
}

fn c02_headland_turn() -> Outcome {
    let (res, took) = timed(headland_run);
    let (run, _) = res?;
    let turn = run.net_turn().to_degrees();
    check(
        (HEADLAND_RANGE_DEG.0..=HEADLAND_RANGE_DEG.1).contains(&turn) && took < RUN_MAX_RUNTIME,
        format!("TurnLeft(3) turned {turn:.3} deg in {took:.2?}"),
    )
}

fn c03_straight_advance() -> Outcome {
    let (res, took) = timed(|| {
        let mut c = SimConfig::default();
        c.soil.base_slip = BASE_SLIP;
        run_program(&program(ControlPrimitive::straight(5), true), &c)
    });
    let run = res.map_err(|e| e.to_string())?;
    let d = run.net_advance();
    check(
        (d - ADVANCE_TARGET_M).abs() <= ADVANCE_TOL_M && took < RUN_MAX_RUNTIME,
        format!("Straight(5) advanced {d:.4} m in {took:.2?}"),
    )
}

fn within_rel(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol * target
}

fn c04_footprint() -> Outcome {
    let (run, c) = headland_run()?;
    let report =
        TurnReport::from_telemetry(&run.telemetry, &c.geometry).map_err(|e| e.to_string())?;
    let f = report.footprint;
    let composed = f.extent_x.max(f.extent_y) + STROKE_M;
    check(
        within_rel(f.extent_x, FOOTPRINT_TARGET_M.0, FOOTPRINT_REL_TOL)
            && within_rel(f.extent_y, FOOTPRINT_TARGET_M.1, FOOTPRINT_REL_TOL)
            && (report.turning_space - composed).abs() < 1e-12
            && within_rel(
                report.turning_space,
                TURNING_SPACE_TARGET_M,
                FOOTPRINT_REL_TOL,
            ),
        format!(
            "extents ({:.3}, {:.3}) m, turning space {:.3} m",
            f.extent_x, f.extent_y, report.turning_space
        ),
    )
}

fn c05_timing() -> Outcome {
    let t = TimingModel::default();
    let compiled = total_duration(&compile(
        &ControlPrimitive::straight(1).unwrap(),
        &t,
        STROKE_M,
        false,
    ));
    let c = SimConfig::default();
    let run = run_program(&program(ControlPrimitive::straight(3), false), &c)
        .map_err(|e| e.to_string())?;
    let simulated: Vec<f64> = run
        .cycles
        .iter()
        .map(|r| run.telemetry[r.end_index].t - run.telemetry[r.start_index].t)
        .collect();
    let (turn, _) = headland_run()?;
    let turn_s = turn.duration();
    let straight_ok = std::iter::once(compiled)
        .chain(simulated.iter().copied())
        .all(|d| (d - STRAIGHT_CYCLE_S).abs() <= STRAIGHT_CYCLE_TOL_S);
    check(
        straight_ok && (turn_s - TURN_180_S).abs() <= TURN_180_TOL_S,
        format!(
            "straight cycle {compiled:.2} s compiled, {:.2} s simulated; 180 deg turn {turn_s:.1} s",
            simulated[0]
        ),
    )
}

fn c06_power() -> Outcome {
    let c = SimConfig::default();
    let run = run_program(&program(ControlPrimitive::straight(5), true), &c)
        .map_err(|e| e.to_string())?;
    let mean = mean_power(&run.telemetry, None).map_err(|e| e.to_string())?;
    let (turn, _) = headland_run()?;
    let right = run_program(&program(ControlPrimitive::turn_right(3), true), &c)
        .map_err(|e| e.to_string())?;
    let peak = turn
        .telemetry
        .iter()
        .chain(&right.telemetry)
        .map(|s| s.power)
        .fold(0.0, f64::max);
    check(
        within_rel(mean, MEAN_POWER_W, MEAN_POWER_REL_TOL) && peak <= TURN_POWER_CAP_W,
        format!("straight mean {mean:.2} W, turn peak {peak:.2} W"),
    )
}

fn random_geometry(rng: &mut ChaCha8Rng) -> VehicleGeometry {
    let s = rng.random_range(0.02..0.6);
    let x_contracted = rng.random_range(0.15..1.2);
    let stroke = rng.random_range(0.05..1.6);
    VehicleGeometry::with_spikes(s, x_contracted + stroke, x_contracted).unwrap()
}

fn c07_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let radial = RadialPull::default();
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_GEOMETRIES {
        let g = random_geometry(&mut rng);
        let start = Pose::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-3.1..3.1),
        );
        let side = if rng.random_bool(0.5) {
            AnchorSide::Left
        } else {
            AnchorSide::Right
        };
        // contraction against the closed-form alpha
        let spike = start.to_world(g.spike_in_frame(side, g.stroke));
        let end = radial
            .integrate(start, spike, g.stroke, ORACLE_STEPS)
            .map_err(|e| e.to_string())?;
        worst = worst.max((normalize_angle(end.heading - start.heading) - alpha(&g, side)).abs());
        // expansion on the opposite spike against the closed-form beta
        let wt = WeightTransferModel::uniform(
            rng.random_range(-0.1..0.1),
            rng.random_range(0.0..0.02f64).min(g.spike_half_spacing),
        );
        if wt.validate(&g).is_ok() {
            let (x3, x4, _, s4) = wt.derived(&g);
            let far = side.opposite();
            let spike = start.to_world(Point::new(x4, far.lateral_sign() * s4));
            let end = radial
                .integrate(start, spike, -(x3 - x4), ORACLE_STEPS)
                .map_err(|e| e.to_string())?;
            let b = beta(&g, &wt, side).map_err(|e| e.to_string())?;
            worst = worst.max((normalize_angle(end.heading - start.heading) - b).abs());
        }
    }
    check(
        worst < ORACLE_TOL_RAD,
        format!(
            "{ORACLE_GEOMETRIES} geometries at {ORACLE_STEPS} steps, worst error {worst:.2e} rad"
        ),
    )
}

fn c08_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for _ in 0..ORACLE_GEOMETRIES {
        let g = random_geometry(&mut rng);
        for side in [AnchorSide::Left, AnchorSide::Right] {
            if beta(&g, &WeightTransferModel::ZERO, side).map_err(|e| e.to_string())?
                != alpha(&g, side)
            {
                mismatches += 1;
            }
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} inexact cases over {ORACLE_GEOMETRIES} geometries"),
    )
}

/// Fitted center of rotation in the initial frame, relative to the initial
/// spike midpoint.
fn center_offset(config: &SimConfig, p: ControlPrimitive) -> Result<Point, String> {
    let run = run_program(&CycleProgram::single(p, false), config).map_err(|e| e.to_string())?;
    let report =
        TurnReport::from_telemetry(&run.telemetry, &config.geometry).map_err(|e| e.to_string())?;
    let center = report.fitted_center.ok_or("no center fitted")?;
    let g = &config.geometry;
    let frame = config.initial_pose.offset_by(-g.reference_point);
    Ok(frame.to_local(center) - g.spike_midpoint_in_frame(g.stroke))
}

fn c09_center_of_rotation() -> Outcome {
    let small = SimConfig {
        geometry: VehicleGeometry::with_spikes(0.275, 0.47, 0.46).unwrap(),
        weight_transfer: WeightTransferModel::ZERO,
        dt: 0.02,
        ..SimConfig::default()
    };
    let near = center_offset(&small, ControlPrimitive::turn_right(12).unwrap())?.norm();
    let c = empirical();
    let left = center_offset(&c, ControlPrimitive::turn_left(3).unwrap())?;
    let right = center_offset(&c, ControlPrimitive::turn_right(3).unwrap())?;
    check(
        near <= SMALL_STROKE_CENTER_TOL_M
            && left.y > 0.0
            && right.y < 0.0
            && left.norm() <= FULL_STROKE_MAX_OFFSET_M
            && right.norm() <= FULL_STROKE_MAX_OFFSET_M,
        format!(
            "small stroke {:.2} mm from midpoint; full stroke lateral offset {:+.3} m (left), {:+.3} m (right)",
            near * 1e3,
            left.y,
            right.y
        ),
    )
}

fn c10_sensor_fusion() -> Outcome {
    let mut c = SimConfig::default();
    c.timing.traction_speed = FUSION_SPEED_M_S;
    let run = run_program(&program(ControlPrimitive::straight(5), true), &c)
        .map_err(|e| e.to_string())?;
    let truth = run.trajectory_points();
    let spec = SensorSpec::default();
    let (prism, imu) = emulate(&truth, &spec).map_err(|e| e.to_string())?;
    let fused = fuse(&prism, &imu).map_err(|e| e.to_string())?;
    let rmse = position_rmse(&fused, &truth);
    check(
        spec.prism_sigma == 0.002 && spec.prism_rate == 5.0 && rmse <= FUSION_RMSE_MAX_M,
        format!("{} fused samples, rmse {:.2} mm", fused.len(), rmse * 1e3),
    )
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut c = SimConfig::default();
    c.grip_loss.probability = 0.3;
    let config = dir.path().join("config.json");
    std::fs::write(&config, c.to_json_pretty()).map_err(|e| e.to_string())?;
    let prog = configs_dir().join("programs/headland_mission.json");
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_interlock-sim"))
            .args(["simulate", "--seed", "42", "--config"])
            .arg(&config)
            .arg("--program")
            .arg(&prog)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "simulate failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        files.push(std::fs::read(out.join("telemetry.csv")).map_err(|e| e.to_string())?);
    }
    check(
        files[0] == files[1] && !files[0].is_empty(),
        format!(
            "{} bytes, identical: {}",
            files[0].len(),
            files[0] == files[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 predicted angles", c01_predicted_angles),
        ("2 headland turn", c02_headland_turn),
        ("3 straight advance", c03_straight_advance),
        ("4 footprint", c04_footprint),
        ("5 timing", c05_timing),
        ("6 power", c06_power),
        ("7 oracle equivalence", c07_oracle_equivalence),
        ("8 reduction", c08_reduction),
        ("9 center of rotation", c09_center_of_rotation),
        ("10 sensor fusion", c10_sensor_fusion),
        ("11 determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
