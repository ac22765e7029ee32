//! JSONL step traces: one header line, then one line per step.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Action, Event};

pub const TRACE_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("trace does not match the supplied inputs: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: String,
    pub kind: String,
    pub episode: String,
    pub episode_index: usize,
    /// Goals in the replayed task and the wrong-FOUND budget it ran under.
    pub m: usize,
    pub found_budget: u32,
    pub agent: String,
    pub config_hash: String,
    pub world_hash: String,
    pub tool_version: String,
}

impl TraceHeader {
    pub fn new(
        episode: impl Into<String>,
        episode_index: usize,
        m: usize,
        found_budget: u32,
        agent: impl Into<String>,
        config_hash: impl Into<String>,
        world_hash: impl Into<String>,
    ) -> Self {
        Self {
            version: TRACE_VERSION.to_string(),
            kind: "trace".to_string(),
            episode: episode.into(),
            episode_index,
            m,
            found_budget,
            agent: agent.into(),
            config_hash: config_hash.into(),
            world_hash: world_hash.into(),
            tool_version: crate::VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: usize,
    pub action: Action,
    pub x: f64,
    pub y: f64,
    pub theta: u32,
    pub reward: f64,
    /// Goal index after the step.
    pub goal_index: usize,
    pub event: Vec<Event>,
}

/// Receives one record per simulated step.
pub trait TraceSink {
    fn record(&mut self, step: &TraceStep);
}

/// Discards every step.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceStep) {}
}

impl TraceSink for Vec<TraceStep> {
    fn record(&mut self, step: &TraceStep) {
        self.push(step.clone());
    }
}

pub fn trace_to_string(header: &TraceHeader, steps: &[TraceStep]) -> String {
    let mut out = serde_json::to_string(header).expect("header serialises");
    out.push('\n');
    for s in steps {
        out.push_str(&serde_json::to_string(s).expect("step serialises"));
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, header: &TraceHeader, steps: &[TraceStep]) -> Result<(), TraceError> {
    fs::write(path, trace_to_string(header, steps))?;
    Ok(())
}

pub fn parse_trace(text: &str) -> Result<(TraceHeader, Vec<TraceStep>), TraceError> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| TraceError::Schema {
        line: 1,
        message: "empty trace".into(),
    })?;
    let header: TraceHeader = serde_json::from_str(first).map_err(|e| TraceError::Schema {
        line: 1,
        message: e.to_string(),
    })?;
    if header.version != TRACE_VERSION {
        return Err(TraceError::Schema {
            line: 1,
            message: format!("unsupported version {:?}", header.version),
        });
    }
    let steps = lines
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TraceError::Schema {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<TraceStep>, _>>()?;
    Ok((header, steps))
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<TraceStep>), TraceError> {
    parse_trace(&fs::read_to_string(path)?)
}
