//! Recorded segments and their 25 fps scene track (the edit decision list).

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::director::SceneMode;

pub const FPS: f64 = 25.0;
pub const GRID_TOLERANCE: f64 = 1e-6;
pub const EDL_MAGIC: &str = "#reclass-edl v1";

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("a segment is already open (started at {0})")]
    AlreadyOpen(f64),
    #[error("no segment is open")]
    NotOpen,
    #[error("time {t} precedes the end of the previous segment at {last}")]
    BeforeLastStop { t: f64, last: f64 },
    #[error("stop at {stop} does not follow start at {start}")]
    EmptySegment { start: f64, stop: f64 },
    #[error("tick at {t} is off the 25 fps grid (expected {expected})")]
    OffGrid { t: f64, expected: f64 },
    #[error("segment {start}..{stop} holds {got} ticks, expected {expected}")]
    TickCount { start: f64, stop: f64, got: usize, expected: usize },
    #[error("cannot export while a segment is open")]
    OpenOnExport,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneTick {
    pub t: f64,
    pub mode: SceneMode,
    pub s2_azimuth: f64,
    pub s2_elevation: f64,
    pub speaker_in_fov: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub stop: Option<f64>,
    pub ticks: Vec<SceneTick>,
}

impl Segment {
    /// Grid time of the `k`-th tick (1-based).
    pub fn grid_time(&self, k: usize) -> f64 {
        self.start + k as f64 / FPS
    }

    pub fn duration(&self) -> Option<f64> {
        self.stop.map(|s| s - self.start)
    }
}

/// Number of ticks a segment of the given span holds.
pub fn expected_ticks(start: f64, stop: f64) -> usize {
    ((stop - start) * FPS).round() as usize
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionEdl {
    pub segments: Vec<Segment>,
}

impl SessionEdl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open_segment(&self) -> Option<&Segment> {
        self.segments.last().filter(|s| s.stop.is_none())
    }

    pub fn is_recording(&self) -> bool {
        self.open_segment().is_some()
    }

    fn last_stop(&self) -> Option<f64> {
        self.segments.iter().rev().find_map(|s| s.stop)
    }

    pub fn start_segment(&mut self, t: f64) -> Result<(), SessionError> {
        if let Some(open) = self.open_segment() {
            return Err(SessionError::AlreadyOpen(open.start));
        }
        if let Some(last) = self.last_stop() {
            if t < last {
                return Err(SessionError::BeforeLastStop { t, last });
            }
        }
        self.segments.push(Segment { start: t, stop: None, ticks: Vec::new() });
        Ok(())
    }

    /// Time of the next tick the open segment expects.
    pub fn next_tick_time(&self) -> Option<f64> {
        self.open_segment().map(|s| s.grid_time(s.ticks.len() + 1))
    }

    /// Appends a tick; it must land on the next point of the segment's grid.
    pub fn log_tick(&mut self, tick: SceneTick) -> Result<(), SessionError> {
        let seg = match self.segments.last_mut() {
            Some(s) if s.stop.is_none() => s,
            _ => return Err(SessionError::NotOpen),
        };
        let expected = seg.grid_time(seg.ticks.len() + 1);
        if (tick.t - expected).abs() > GRID_TOLERANCE {
            return Err(SessionError::OffGrid { t: tick.t, expected });
        }
        seg.ticks.push(tick);
        Ok(())
    }

    /// Closes the open segment. It must already hold
    /// `round((stop - start) * 25)` ticks.
    pub fn stop_segment(&mut self, t: f64) -> Result<(), SessionError> {
        let seg = match self.segments.last_mut() {
            Some(s) if s.stop.is_none() => s,
            _ => return Err(SessionError::NotOpen),
        };
        if t <= seg.start {
            return Err(SessionError::EmptySegment { start: seg.start, stop: t });
        }
        let expected = expected_ticks(seg.start, t);
        if seg.ticks.len() != expected {
            return Err(SessionError::TickCount { start: seg.start, stop: t, got: seg.ticks.len(), expected });
        }
        seg.stop = Some(t);
        Ok(())
    }

    pub fn total_ticks(&self) -> usize {
        self.segments.iter().map(|s| s.ticks.len()).sum()
    }
}

pub fn export_edl(edl: &SessionEdl) -> Result<String, SessionError> {
    let mut out = String::from(EDL_MAGIC);
    out.push('\n');
    for seg in &edl.segments {
        let stop = seg.stop.ok_or(SessionError::OpenOnExport)?;
        let _ = writeln!(out, "segment start={} stop={}", seg.start, stop);
        for t in &seg.ticks {
            let _ = writeln!(
                out,
                "t={} mode={} az={} el={} infov={}",
                t.t,
                t.mode.as_str(),
                t.s2_azimuth,
                t.s2_elevation,
                u8::from(t.speaker_in_fov)
            );
        }
    }
    Ok(out)
}

fn field<'a>(line: usize, tok: Option<&'a str>, key: &str) -> Result<&'a str, SessionError> {
    tok.and_then(|t| t.strip_prefix(key)?.strip_prefix('='))
        .ok_or_else(|| SessionError::Parse { line, msg: format!("expected `{key}=`") })
}

fn num(line: usize, s: &str) -> Result<f64, SessionError> {
    s.parse().map_err(|_| SessionError::Parse { line, msg: format!("bad number `{s}`") })
}

/// Parses an exported EDL, re-checking the grid and tick counts.
pub fn parse_edl(text: &str) -> Result<SessionEdl, SessionError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == EDL_MAGIC => {}
        Some((i, _)) => return Err(SessionError::Parse { line: i + 1, msg: "missing EDL header".into() }),
        None => return Err(SessionError::Parse { line: 1, msg: "missing EDL header".into() }),
    }
    let mut edl = SessionEdl::new();
    let mut pending_stop: Option<f64> = None;
    for (i, raw) in lines {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let head = toks.next();
        if head == Some("segment") {
            if let Some(stop) = pending_stop.take() {
                edl.stop_segment(stop)?;
            }
            let start = num(line, field(line, toks.next(), "start")?)?;
            let stop = num(line, field(line, toks.next(), "stop")?)?;
            edl.start_segment(start)?;
            pending_stop = Some(stop);
        } else {
            let t = num(line, field(line, head, "t")?)?;
            let mode = field(line, toks.next(), "mode")?;
            let mode = SceneMode::parse(mode)
                .ok_or_else(|| SessionError::Parse { line, msg: format!("bad mode `{mode}`") })?;
            let az = num(line, field(line, toks.next(), "az")?)?;
            let el = num(line, field(line, toks.next(), "el")?)?;
            let infov = match field(line, toks.next(), "infov")? {
                "1" => true,
                "0" => false,
                v => return Err(SessionError::Parse { line, msg: format!("bad infov `{v}`") }),
            };
            edl.log_tick(SceneTick { t, mode, s2_azimuth: az, s2_elevation: el, speaker_in_fov: infov })?;
        }
    }
    if let Some(stop) = pending_stop {
        edl.stop_segment(stop)?;
    }
    Ok(edl)
}
