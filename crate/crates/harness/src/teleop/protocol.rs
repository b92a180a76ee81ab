//! Wire format of the teleoperation service.
//!
//! Every message travels as one frame: a 4-byte big-endian unsigned length
//! followed by that many bytes of UTF-8 JSON. The JSON is an object whose
//! `"type"` field names the message.

use std::io::{self, Read, Write};

use irt_core::{Architecture, Disc64, Point64};
use irt_sim::metrics::{inf_as_null, MetricReport, Verdict};
use irt_sim::{ScenarioSpec, Termination};
use serde::{Deserialize, Serialize};

/// Largest accepted frame body in bytes.
pub const MAX_FRAME_LEN: u32 = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("frame of {0} bytes exceeds the limit of {MAX_FRAME_LEN}")]
    TooLarge(u32),
    #[error("connection closed inside a frame")]
    Truncated,
}

/// Client to server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Joystick deflection; vectors longer than one are scaled back to unit length.
    Input { dx: f64, dy: f64 },
    /// Switch the session to another architecture from the next tick on.
    Mode { architecture: Architecture },
}

/// Server to client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StateFrame),
    /// Acknowledges a mode switch.
    Mode { architecture: Architecture },
    End(Box<EndFrame>),
    Error { message: String },
}

/// The world after one tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub session: u64,
    pub step: usize,
    pub architecture: Architecture,
    pub robot: Point64,
    pub crowd: Vec<Point64>,
    pub goal: Point64,
    pub obstacles: Vec<Disc64>,
    /// Waypoint chosen this tick; `null` before the first tick.
    pub action: Option<Point64>,
    pub metrics: LiveMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiveMetrics {
    /// Closest approach so far; `null` while nothing is in range.
    #[serde(with = "inf_as_null")]
    pub min_distance: f64,
    pub path_length: f64,
    /// Simulated seconds.
    pub elapsed: f64,
}

/// Sent once when the episode terminates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndFrame {
    pub session: u64,
    pub termination: Termination,
    pub report: MetricReport,
    pub baselines: Baselines,
    pub verdict: Verdict,
    pub transcript: Transcript,
}

/// Scripted solo runs of the same scenario and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub human_only: MetricReport,
    pub autonomy_only: MetricReport,
}

/// Enough to replay a session exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub spec: ScenarioSpec,
    pub initial_architecture: Architecture,
    pub ticks: Vec<TickInput>,
}

/// The input actually applied at one tick, after clamping and staleness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickInput {
    pub direction: Point64,
    pub architecture: Architecture,
}

/// Serializes `msg` into a complete frame.
pub fn encode<T: Serialize>(msg: &T) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("protocol messages serialize");
    let mut frame = Vec::with_capacity(body.len() + 4);
    frame.extend_from_slice(&(body.len() as u32).to_be_bytes());
    frame.extend_from_slice(&body);
    frame
}

pub fn write_frame<W: Write, T: Serialize>(w: &mut W, msg: &T) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}

/// Reads one frame body. `Ok(None)` is a clean close between frames.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Vec<u8>>, FrameError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(FrameError::Truncated),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME_LEN {
        return Err(FrameError::TooLarge(len));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FrameError::Truncated,
        _ => FrameError::Io(e),
    })?;
    Ok(Some(body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_frame_layout() {
        let frame = encode(&ClientMessage::Input { dx: 1.0, dy: -0.5 });
        let body = br#"{"type":"input","dx":1.0,"dy":-0.5}"#;
        assert_eq!(&frame[..4], &(body.len() as u32).to_be_bytes());
        assert_eq!(&frame[4..], body);
    }

    #[test]
    fn frames_round_trip() {
        let msgs = [
            ClientMessage::Input { dx: 0.25, dy: 0.0 },
            ClientMessage::Mode { architecture: Architecture::Linear },
        ];
        let bytes: Vec<u8> = msgs.iter().flat_map(encode).collect();
        let mut cursor = io::Cursor::new(bytes);
        for m in &msgs {
            let body = read_frame(&mut cursor).unwrap().unwrap();
            assert_eq!(&serde_json::from_slice::<ClientMessage>(&body).unwrap(), m);
        }
        assert!(read_frame(&mut cursor).unwrap().is_none());
    }

    #[test]
    fn oversized_and_truncated_frames_fail() {
        let mut big = io::Cursor::new((MAX_FRAME_LEN + 1).to_be_bytes().to_vec());
        assert!(matches!(read_frame(&mut big), Err(FrameError::TooLarge(_))));
        let mut cut = io::Cursor::new(vec![0, 0, 0, 9, b'{']);
        assert!(matches!(read_frame(&mut cut), Err(FrameError::Truncated)));
        let mut half = io::Cursor::new(vec![0, 0]);
        assert!(matches!(read_frame(&mut half), Err(FrameError::Truncated)));
    }
}
