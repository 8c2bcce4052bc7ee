//! Sensor log: JSON Lines, a header followed by one frame per line.
//!
//! ```text
//! {"format":"vitaslam-sensor-log","version":1,"seed":42,"frames":3,"sim":{...}}
//! {"cycle":0,"truth":{..},"odom":{..},"collision":false,"deflections":[..24],
//!  "contacts":[{"whisker":3,"point":{"x":..,"y":..}}],
//!  "image":{"width":64,"height":32,"rgb":"<base64>"}}
//! ```
//!
//! Floats are written with round-trip precision, so replay is bit-exact.

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SensorFrame, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Twist};
use crate::tactile::{WhiskCycleData, WhiskerContact, WHISKER_COUNT};
use crate::visual::RgbImage;

pub const LOG_FORMAT: &str = "vitaslam-sensor-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub frames: usize,
    pub sim: SimConfig,
}

impl LogHeader {
    pub fn new(seed: u64, frames: usize, sim: SimConfig) -> Self {
        Self {
            format: LOG_FORMAT.to_owned(),
            version: LOG_VERSION,
            seed,
            frames,
            sim,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ImageRecord {
    width: usize,
    height: usize,
    rgb: String,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    cycle: usize,
    truth: Pose,
    odom: Twist,
    collision: bool,
    deflections: Vec<f64>,
    contacts: Vec<WhiskerContact>,
    image: ImageRecord,
}

/// The log line for one frame (no trailing newline).
pub fn frame_line(frame: &SensorFrame) -> String {
    let rec = FrameRecord {
        cycle: frame.cycle,
        truth: frame.truth,
        odom: frame.odom,
        collision: frame.collision,
        deflections: frame.whisk.deflections.to_vec(),
        contacts: frame.whisk.contacts_head.clone(),
        image: ImageRecord {
            width: frame.rgb.width,
            height: frame.rgb.height,
            rgb: STANDARD.encode(&frame.rgb.pixels),
        },
    };
    serde_json::to_string(&rec).expect("frame records always serialize")
}

fn parse_frame(line: &str) -> std::result::Result<SensorFrame, String> {
    let rec: FrameRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let deflections: [f64; WHISKER_COUNT] = rec
        .deflections
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {WHISKER_COUNT} deflections, got {}", v.len()))?;
    let pixels = STANDARD.decode(rec.image.rgb).map_err(|e| e.to_string())?;
    let rgb =
        RgbImage::new(rec.image.width, rec.image.height, pixels).map_err(|e| e.to_string())?;
    let whisk = WhiskCycleData {
        contacts_head: rec.contacts,
        deflections,
    };
    whisk.validate().map_err(|e| e.to_string())?;
    Ok(SensorFrame {
        cycle: rec.cycle,
        rgb,
        whisk,
        odom: rec.odom,
        truth: rec.truth,
        collision: rec.collision,
    })
}

/// Rolling SHA-256 over frame lines; equal digests mean equal sensor
/// streams.
#[derive(Debug, Clone, Default)]
pub struct StreamHasher(Sha256);

impl StreamHasher {
    pub fn update(&mut self, frame: &SensorFrame) {
        self.0.update(frame_line(frame).as_bytes());
        self.0.update(b"\n");
    }

    pub fn hex(&self) -> String {
        self.0
            .clone()
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn write_log<W: Write>(
    mut w: W,
    header: &LogHeader,
    frames: &[SensorFrame],
) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, header)?;
    writeln!(w)?;
    for f in frames {
        writeln!(w, "{}", frame_line(f))?;
    }
    w.flush()
}

pub fn read_log<R: BufRead>(r: R) -> Result<(LogHeader, Vec<SensorFrame>)> {
    let mut lines = r.lines();
    let parse_err = |line: usize, message: String| Error::LogParse { line, message };
    let first = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty log".into()))?
        .map_err(|e| parse_err(1, e.to_string()))?;
    let header: LogHeader =
        serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format != LOG_FORMAT || header.version != LOG_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported log {} v{}", header.format, header.version),
        ));
    }
    let mut frames = Vec::with_capacity(header.frames);
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line.map_err(|e| parse_err(no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f = parse_frame(&line).map_err(|m| parse_err(no, m))?;
        if f.cycle != frames.len() {
            return Err(parse_err(
                no,
                format!("expected cycle {}, found {}", frames.len(), f.cycle),
            ));
        }
        frames.push(f);
    }
    if frames.len() != header.frames {
        return Err(parse_err(
            frames.len() + 2,
            format!(
                "truncated: header announces {} frames, found {}",
                header.frames,
                frames.len()
            ),
        ));
    }
    Ok((header, frames))
}
