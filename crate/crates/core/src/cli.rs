//! Command-line front end of `interlock-sim`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::TurnReport;
use crate::calibrate::{calibrate, CalibrationOptions, CalibrationTargets, FreeParam};
use crate::cycle::{ControlPrimitive, CycleProgram};
use crate::error::{Error, Result};
use crate::io;
use crate::kinematics::TurnDirection;
use crate::planner::{plan_with_tool, predict, Goal, PlannerCalibration};
use crate::sensors::{emulate, fuse, position_rmse, SensorSpec};
use crate::sim::{run_program, RunSummary, SimConfig};

pub const SEED_ENV: &str = "INTERLOCK_SIM_SEED";

#[derive(Parser)]
#[command(
    name = "interlock-sim",
    version,
    about = "Simulate, plan and analyze interlock-drive runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cycle program and write telemetry, trajectory and summary.
    Simulate(SimulateArgs),
    /// Turn a goal into a cycle program with predicted outcome.
    Plan(PlanArgs),
    /// Per-cycle turn angles, center of rotation and footprint of a run.
    Analyze(AnalyzeArgs),
    /// Fit model parameters to observed figures.
    Calibrate(CalibrateArgs),
    /// Fuse prism and IMU logs, or emulate them from a truth trajectory.
    Fuse(FuseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TrajectoryFormat {
    Jsonl,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulator configuration JSON; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cycle program JSON.
    #[arg(long, conflicts_with = "primitive")]
    program: Option<PathBuf>,
    /// Inline primitive such as `straight:5` or `turn_left:3`; repeatable.
    #[arg(long)]
    primitive: Vec<String>,
    /// Engage the tool with inline primitives.
    #[arg(long)]
    tool: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the `INTERLOCK_SIM_SEED` variable and the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run once per seed, each into `<out>/seed-<n>`.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum, default_value = "jsonl")]
    trajectory_format: TrajectoryFormat,
}

#[derive(Args)]
struct PlanArgs {
    #[command(subcommand)]
    goal: GoalCommand,
    /// Planner calibration JSON; derived from the configuration when omitted.
    #[arg(long, global = true)]
    calibration: Option<PathBuf>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Keep the tool raised on straight runs.
    #[arg(long, global = true)]
    no_tool: bool,
    /// Write the cycle program JSON here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Left,
    Right,
}

impl From<Direction> for TurnDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Left => TurnDirection::Left,
            Direction::Right => TurnDirection::Right,
        }
    }
}

#[derive(Subcommand)]
enum GoalCommand {
    Advance {
        #[arg(long)]
        meters: f64,
    },
    Turn {
        #[arg(long)]
        degrees: f64,
        #[arg(long, value_enum)]
        direction: Direction,
    },
    Headland {
        #[arg(long, value_enum, default_value = "left")]
        direction: Direction,
    },
    Mission {
        #[arg(long)]
        row_length: f64,
        #[arg(long)]
        rows: u32,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Telemetry CSV written by `simulate`.
    #[arg(long)]
    telemetry: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FreeArg {
    XContracted,
    SpikeHalfSpacing,
    WeightTransferAxial,
    WeightTransferLateral,
    BaseSlip,
}

impl From<FreeArg> for FreeParam {
    fn from(f: FreeArg) -> Self {
        match f {
            FreeArg::XContracted => FreeParam::XContracted,
            FreeArg::SpikeHalfSpacing => FreeParam::SpikeHalfSpacing,
            FreeArg::WeightTransferAxial => FreeParam::WeightTransferAxial,
            FreeArg::WeightTransferLateral => FreeParam::WeightTransferLateral,
            FreeArg::BaseSlip => FreeParam::BaseSlip,
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// Targets JSON with any of `alpha_deg`, `beta_deg`, `per_cycle_deg`,
    /// `advance_m`.
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameters to fit; chosen from the targets when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    free: Vec<FreeArg>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the calibrated configuration here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long, requires = "imu", conflicts_with = "truth")]
    prism: Option<PathBuf>,
    #[arg(long, requires = "prism")]
    imu: Option<PathBuf>,
    /// Truth trajectory JSONL to emulate the sensors from.
    #[arg(long, required_unless_present = "prism")]
    truth: Option<PathBuf>,
    /// Sensor specification JSON for emulation.
    #[arg(long)]
    sensors: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the emulated prism.csv and imu.csv.
    #[arg(long)]
    emit_dir: Option<PathBuf>,
    /// Fused trajectory JSONL.
    #[arg(long)]
    out: PathBuf,
}

/// Run the CLI and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Plan(a) => plan_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Fuse(a) => fuse_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                3
            }
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::from_json(&io::read_to_string(p)?)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display()))),
        None => Ok(SimConfig::default()),
    }
}

fn parse_primitive(spec: &str) -> Result<ControlPrimitive> {
    let bad =
        || Error::InvalidProgram(format!("primitive {spec:?} is not of the form kind:cycles"));
    let (kind, n) = spec.split_once(':').ok_or_else(bad)?;
    let n: u32 = n.trim().parse().map_err(|_| bad())?;
    match kind.trim() {
        "straight" => ControlPrimitive::straight(n),
        "turn_left" => ControlPrimitive::turn_left(n),
        "turn_right" => ControlPrimitive::turn_right(n),
        _ => Err(bad()),
    }
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::InvalidConfig(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(None),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = io::create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut config = load_config(a.config.as_deref())?;
    if let Some(dt) = a.dt {
        config.dt = dt;
    }
    let program = match &a.program {
        Some(p) => CycleProgram::from_json(&io::read_to_string(p)?)?,
        None if !a.primitive.is_empty() => CycleProgram::new(
            a.primitive
                .iter()
                .map(|s| parse_primitive(s))
                .collect::<Result<_>>()?,
            a.tool,
        )?,
        None => {
            return Err(Error::InvalidProgram(
                "give --program or --primitive".into(),
            ))
        }
    };
    if a.jobs == 0 {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    fs::create_dir_all(&a.out)?;

    if a.seeds.is_empty() {
        if let Some(seed) = a.seed.or(seed_from_env()?) {
            config.rng_seed = seed;
        }
        let summary = simulate_one(&program, &config, &a.out, a.trajectory_format)?;
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let summaries: Vec<RunSummary> = pool.install(|| {
        a.seeds
            .par_iter()
            .map(|&seed| {
                let config = SimConfig {
                    rng_seed: seed,
                    ..config
                };
                let dir = a.out.join(format!("seed-{seed}"));
                fs::create_dir_all(&dir)?;
                simulate_one(&program, &config, &dir, a.trajectory_format)
            })
            .collect::<Result<_>>()
    })?;
    write_json(&a.out.join("summaries.json"), &summaries)?;
    for s in &summaries {
        println!(
            "seed {:>6}  advance {:8.4} m  turn {:9.3} deg  {:7.1} s  {:6.2} W",
            s.seed, s.net_advance, s.net_turn_deg, s.duration, s.mean_power
        );
    }
    Ok(())
}

fn simulate_one(
    program: &CycleProgram,
    config: &SimConfig,
    dir: &Path,
    format: TrajectoryFormat,
) -> Result<RunSummary> {
    let run = run_program(program, config)?;
    io::write_telemetry_csv(io::create(&dir.join("telemetry.csv"))?, &run.telemetry)?;
    let track = run.trajectory_points();
    match format {
        TrajectoryFormat::Jsonl => {
            io::write_trajectory_jsonl(io::create(&dir.join("trajectory.jsonl"))?, &track)?
        }
        TrajectoryFormat::Csv => {
            io::write_trajectory_csv(io::create(&dir.join("trajectory.csv"))?, &track)?
        }
    }
    let summary = RunSummary::new(&run, config)?;
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    program: &'a CycleProgram,
    overshoot: crate::planner::Overshoot,
    prediction: crate::planner::Prediction,
}

fn plan_cmd(a: PlanArgs) -> Result<()> {
    let calibration = match &a.calibration {
        Some(p) => PlannerCalibration::from_json(&io::read_to_string(p)?)?,
        None => PlannerCalibration::from_config(&load_config(a.config.as_deref())?)?,
    };
    let goal = match a.goal {
        GoalCommand::Advance { meters } => Goal::Advance { distance: meters },
        GoalCommand::Turn { degrees, direction } => Goal::Turn {
            angle: degrees,
            direction: direction.into(),
        },
        GoalCommand::Headland { direction } => Goal::HeadlandTurn {
            direction: direction.into(),
        },
        GoalCommand::Mission { row_length, rows } => Goal::RowMission {
            row_length,
            n_rows: rows,
        },
    };
    let plan = plan_with_tool(&goal, &calibration, !a.no_tool)?;
    let prediction = predict(&plan.program, &calibration)?;
    if let Some(out) = &a.out {
        write_json(out, &plan.program)?;
    }
    let output = PlanOutput {
        program: &plan.program,
        overshoot: plan.overshoot,
        prediction,
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let name = a.telemetry.display().to_string();
    let telemetry = io::read_telemetry_csv(io::open(&a.telemetry)?, &name)?;
    let report = TurnReport::from_telemetry(&telemetry, &config.geometry)?;
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    print!("{}", report.table());
    Ok(())
}

fn default_free(targets: &CalibrationTargets) -> Vec<FreeParam> {
    let mut free = Vec::new();
    if targets.alpha_deg.is_some() {
        free.push(FreeParam::XContracted);
    }
    if targets.beta_deg.is_some() || targets.per_cycle_deg.is_some() {
        free.push(FreeParam::WeightTransferAxial);
    }
    if targets.beta_deg.is_some() && targets.per_cycle_deg.is_some() {
        free.push(FreeParam::WeightTransferLateral);
    }
    if targets.advance_m.is_some() {
        free.push(FreeParam::BaseSlip);
    }
    free
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let targets: CalibrationTargets = serde_json::from_str(&io::read_to_string(&a.targets)?)
        .map_err(|e| Error::InvalidCalibration(format!("{}: {e}", a.targets.display())))?;
    let free: Vec<FreeParam> = if a.free.is_empty() {
        default_free(&targets)
    } else {
        a.free.iter().map(|&f| f.into()).collect()
    };
    let mut options = CalibrationOptions::default();
    if let Some(t) = a.tolerance {
        options.tolerance = t;
    }
    let fit = calibrate(&config, &targets, &free, &options)?;
    eprintln!(
        "residual {:.3e} after {} iterations",
        fit.residual_norm, fit.iterations
    );
    match &a.out {
        Some(p) => write_json(p, &fit.config)?,
        None => println!("{}", fit.config.to_json_pretty()),
    }
    Ok(())
}

fn fuse_cmd(a: FuseArgs) -> Result<()> {
    let (prism, imu, truth) = match (&a.prism, &a.imu, &a.truth) {
        (Some(p), Some(i), _) => (
            io::read_prism_csv(io::open(p)?, &p.display().to_string())?,
            io::read_imu_csv(io::open(i)?, &i.display().to_string())?,
            None,
        ),
        (_, _, Some(t)) => {
            let truth = io::read_trajectory_jsonl(io::open(t)?, &t.display().to_string())?;
            let mut spec = match &a.sensors {
                Some(p) => serde_json::from_str(&io::read_to_string(p)?)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?,
                None => SensorSpec::default(),
            };
            if let Some(seed) = a.seed {
                spec.rng_seed = seed;
            }
            let (prism, imu) = emulate(&truth, &spec)?;
            if let Some(dir) = &a.emit_dir {
                fs::create_dir_all(dir)?;
                io::write_prism_csv(io::create(&dir.join("prism.csv"))?, &prism)?;
                io::write_imu_csv(io::create(&dir.join("imu.csv"))?, &imu)?;
            }
            (prism, imu, Some(truth))
        }
        _ => {
            return Err(Error::InvalidConfig(
                "give --prism and --imu, or --truth".into(),
            ))
        }
    };
    let fused = fuse(&prism, &imu)?;
    io::write_trajectory_jsonl(io::create(&a.out)?, &fused)?;
    match truth {
        Some(t) => println!(
            "{} fused samples, position rmse {:.5} m",
            fused.len(),
            position_rmse(&fused, &t)
        ),
        None => println!("{} fused samples", fused.len()),
    }
    Ok(())
}
