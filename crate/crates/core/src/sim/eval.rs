//! Scoring recognized commands against a ground-truth label track.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::{TruthClass, TruthWindow};
use crate::gesture::{GestureConfig, GestureError, GestureEvent, HoldTimer, PoseLabel};
use crate::skeleton::Trace;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("truth windows {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("class {0} has no instances")]
    EmptyRow(TruthClass),
    #[error(transparent)]
    Gesture(#[from] GestureError),
}

/// Rows are performed classes, columns recognized ones, both in
/// [`TruthClass::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u32; 6]; 6],
}

impl ConfusionMatrix {
    pub fn get(&self, performed: TruthClass, recognized: TruthClass) -> u32 {
        self.counts[performed.index()][recognized.index()]
    }

    pub fn row_sum(&self, c: TruthClass) -> u32 {
        self.counts[c.index()].iter().sum()
    }

    pub fn col_sum(&self, c: TruthClass) -> u32 {
        self.counts.iter().map(|r| r[c.index()]).sum()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u32 {
        (0..6).map(|i| self.counts[i][i]).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal() == self.total()
    }

    /// CSV laid out with performed classes down the side, recognized across
    /// the top, and a trailing Sum row and column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Gesture");
        for c in TruthClass::ALL {
            let _ = write!(out, ",{c}");
        }
        out.push_str(",Sum\n");
        for r in TruthClass::ALL {
            let _ = write!(out, "{r}");
            for c in TruthClass::ALL {
                let _ = write!(out, ",{}", self.get(r, c));
            }
            let _ = writeln!(out, ",{}", self.row_sum(r));
        }
        out.push_str("Sum");
        for c in TruthClass::ALL {
            let _ = write!(out, ",{}", self.col_sum(c));
        }
        let _ = writeln!(out, ",{}", self.total());
        out
    }
}

/// Per-class true-positive rate, `m[c][c] / row_sum[c]`.
pub fn success_rates(m: &ConfusionMatrix) -> Result<Vec<(TruthClass, f64)>, EvalError> {
    TruthClass::ALL
        .into_iter()
        .map(|c| match m.row_sum(c) {
            0 => Err(EvalError::EmptyRow(c)),
            n => Ok((c, m.get(c, c) as f64 / n as f64)),
        })
        .collect()
}

/// Success rates as a two-column CSV with percentages to one decimal.
pub fn rates_csv(rates: &[(TruthClass, f64)]) -> String {
    let mut out = String::from("Gesture,Success rate\n");
    for (c, r) in rates {
        let _ = writeln!(out, "{c},{:.1}%", r * 100.0);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub matrix: ConfusionMatrix,
    pub events: Vec<GestureEvent>,
    /// Events that fired outside every truth window.
    pub stray_events: usize,
}

/// Runs the classifier and hold timer over `trace` and collects events.
pub fn recognize(trace: &Trace, cfg: &GestureConfig) -> Result<Vec<GestureEvent>, GestureError> {
    let mut timer = HoldTimer::new();
    let mut events = Vec::new();
    for f in trace.frames() {
        if let Some(e) = timer.update(f, cfg)? {
            events.push(e);
        }
    }
    Ok(events)
}

fn check_windows(truth: &[TruthWindow]) -> Result<Vec<usize>, EvalError> {
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| truth[a].start.total_cmp(&truth[b].start));
    for pair in order.windows(2) {
        if truth[pair[1]].start <= truth[pair[0]].end {
            return Err(EvalError::Overlap(pair[0], pair[1]));
        }
    }
    Ok(order)
}

/// Scores events against truth windows. Each window takes the first event
/// that fired inside it, or Undefined when none did. A toggle event inside
/// a Start or Stop window counts for that window's own class; inside any
/// other window it counts as Start or Stop according to whether the
/// recorder was off or on just before it.
pub fn score(events: &[GestureEvent], truth: &[TruthWindow]) -> Result<EvalReport, EvalError> {
    check_windows(truth)?;
    let mut recorder_on = Vec::with_capacity(events.len());
    let mut on = false;
    for e in events {
        recorder_on.push(on);
        if e.label == PoseLabel::ToggleRecord {
            on = !on;
        }
    }

    let mut matrix = ConfusionMatrix::default();
    let mut used = vec![false; events.len()];
    for w in truth {
        let hit = events.iter().position(|e| w.start <= e.fired_at && e.fired_at <= w.end);
        let recognized = match hit {
            None => TruthClass::Undefined,
            Some(i) => {
                used[i] = true;
                match events[i].label {
                    PoseLabel::ToggleRecord => match w.class {
                        TruthClass::Start | TruthClass::Stop => w.class,
                        _ if recorder_on[i] => TruthClass::Stop,
                        _ => TruthClass::Start,
                    },
                    PoseLabel::Blackboard => TruthClass::Blackboard,
                    PoseLabel::Canvas => TruthClass::Canvas,
                    PoseLabel::Speaker => TruthClass::Speaker,
                    PoseLabel::Undefined => TruthClass::Undefined,
                }
            }
        };
        matrix.counts[w.class.index()][recognized.index()] += 1;
    }
    let in_window = |e: &GestureEvent| truth.iter().any(|w| w.start <= e.fired_at && e.fired_at <= w.end);
    let stray_events = events.iter().filter(|e| !in_window(e)).count();
    Ok(EvalReport { matrix, events: events.to_vec(), stray_events })
}

pub fn evaluate(trace: &Trace, truth: &[TruthWindow], cfg: &GestureConfig) -> Result<EvalReport, EvalError> {
    check_windows(truth)?;
    let events = recognize(trace, cfg)?;
    score(&events, truth)
}

pub fn run_eval(trace: &Trace, truth: &[TruthWindow], cfg: &GestureConfig) -> Result<ConfusionMatrix, EvalError> {
    evaluate(trace, truth, cfg).map(|r| r.matrix)
}
