//! File formats: telemetry CSV, trajectory JSONL/CSV and sensor CSVs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Pose;
use crate::sensors::{ImuSample, PrismSample};
use crate::sim::{SpikeState, TelemetrySample};
use crate::soil::SpikeMode;
use crate::trajectory::TrajectoryPoint;

pub const TELEMETRY_COLUMNS: [&str; 13] = [
    "t",
    "x",
    "y",
    "heading_deg",
    "slide_offset",
    "phase",
    "spike_left_mode",
    "spike_left_depth",
    "spike_right_mode",
    "spike_right_depth",
    "tool_state",
    "drive_current_a",
    "power_w",
];

#[derive(Serialize, Deserialize)]
struct TelemetryRow {
    t: f64,
    x: f64,
    y: f64,
    heading_deg: f64,
    slide_offset: f64,
    phase: String,
    spike_left_mode: String,
    spike_left_depth: f64,
    spike_right_mode: String,
    spike_right_depth: f64,
    tool_state: String,
    drive_current_a: f64,
    power_w: f64,
}

fn tool_label(lowered: bool) -> &'static str {
    if lowered {
        "lowered"
    } else {
        "raised"
    }
}

impl From<&TelemetrySample> for TelemetryRow {
    fn from(s: &TelemetrySample) -> Self {
        Self {
            t: s.t,
            x: s.pose.x,
            y: s.pose.y,
            heading_deg: s.pose.heading.to_degrees(),
            slide_offset: s.slide_offset,
            phase: s.phase.clone(),
            spike_left_mode: s.left.mode.label().into(),
            spike_left_depth: s.left.depth,
            spike_right_mode: s.right.mode.label().into(),
            spike_right_depth: s.right.depth,
            tool_state: tool_label(s.tool_lowered).into(),
            drive_current_a: s.drive_current,
            power_w: s.power,
        }
    }
}

impl TelemetryRow {
    fn into_sample(self) -> std::result::Result<TelemetrySample, String> {
        let mode =
            |s: &str| SpikeMode::from_label(s).ok_or_else(|| format!("unknown spike mode {s:?}"));
        let tool_lowered = match self.tool_state.as_str() {
            "lowered" => true,
            "raised" => false,
            other => return Err(format!("unknown tool state {other:?}")),
        };
        Ok(TelemetrySample {
            t: self.t,
            pose: Pose::new(self.x, self.y, self.heading_deg.to_radians()),
            slide_offset: self.slide_offset,
            phase: self.phase,
            left: SpikeState {
                mode: mode(&self.spike_left_mode)?,
                depth: self.spike_left_depth,
            },
            right: SpikeState {
                mode: mode(&self.spike_right_mode)?,
                depth: self.spike_right_depth,
            },
            tool_lowered,
            drive_current: self.drive_current_a,
            actuator_current: 0.0,
            power: self.power_w,
        })
    }
}

pub fn write_telemetry_csv<W: Write>(writer: W, telemetry: &[TelemetrySample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in telemetry {
        w.serialize(TelemetryRow::from(s))?;
    }
    w.flush()?;
    Ok(())
}

/// Data rows are numbered from 1; the header is row 0.
fn parse_error(path: &str, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        row,
        message: message.into(),
    }
}

fn csv_rows<R: Read, T: for<'de> Deserialize<'de>>(
    reader: R,
    path: &str,
    columns: &[&str],
) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| parse_error(path, 0, e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != columns {
        return Err(parse_error(
            path,
            0,
            format!(
                "expected columns {}, got {}",
                columns.join(","),
                got.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| parse_error(path, row, e.to_string()))?;
        let value: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(path, row, e.to_string()))?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_telemetry_csv<R: Read>(reader: R, path: &str) -> Result<Vec<TelemetrySample>> {
    let rows: Vec<TelemetryRow> = csv_rows(reader, path, &TELEMETRY_COLUMNS)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| r.into_sample().map_err(|m| parse_error(path, i + 1, m)))
        .collect()
}

pub fn write_trajectory_jsonl<W: Write>(mut writer: W, track: &[TrajectoryPoint]) -> Result<()> {
    for p in track {
        serde_json::to_writer(&mut writer, p)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trajectory_jsonl<R: Read>(reader: R, path: &str) -> Result<Vec<TrajectoryPoint>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_error(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_trajectory_csv<W: Write>(writer: W, track: &[TrajectoryPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in track {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(reader: R, path: &str) -> Result<Vec<TrajectoryPoint>> {
    csv_rows(reader, path, &["t", "x", "y", "heading"])
}

pub fn write_prism_csv<W: Write>(writer: W, samples: &[PrismSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_prism_csv<R: Read>(reader: R, path: &str) -> Result<Vec<PrismSample>> {
    csv_rows(reader, path, &["t", "x", "y"])
}

pub fn write_imu_csv<W: Write>(writer: W, samples: &[ImuSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_imu_csv<R: Read>(reader: R, path: &str) -> Result<Vec<ImuSample>> {
    csv_rows(reader, path, &["t", "yaw"])
}

/// Open `path` for reading, naming it in the error.
pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(BufWriter::new(f))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s)?;
    Ok(s)
}
