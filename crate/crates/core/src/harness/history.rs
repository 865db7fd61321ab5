//! Line-delimited history persistence.
//!
//! A history file is JSON-per-line: a header object first, then one object per
//! task, then one per measurement. The header pins the format version, the
//! three embedding schema ids, and a digest of the generating configuration.
//! Writing is byte-deterministic: tasks keep their given order, measurements
//! follow sorted tensor order, and floats render in exact shortest round-trip
//! form, so identical inputs always produce identical files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{MethodId, MetricVector, PerformanceTensor, TaskDescriptor};
use crate::embedding::{DATA_SCHEMA_ID, HW_SCHEMA_ID, METHOD_SCHEMA_ID};
use crate::error::{Error, Result};

/// Format tag carried in every history header.
pub const HISTORY_FORMAT_VERSION: &str = "accel-history-v1";

/// First line of a history file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryHeader {
    pub format_version: String,
    pub data_schema: String,
    pub method_schema: String,
    pub hw_schema: String,
    /// Digest of the configuration that generated the file, for provenance.
    pub generator_digest: String,
}

impl HistoryHeader {
    fn current(generator_digest: &str) -> Self {
        HistoryHeader {
            format_version: HISTORY_FORMAT_VERSION.to_string(),
            data_schema: DATA_SCHEMA_ID.to_string(),
            method_schema: METHOD_SCHEMA_ID.to_string(),
            hw_schema: HW_SCHEMA_ID.to_string(),
            generator_digest: generator_digest.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MeasurementRecord {
    task_id: String,
    method_id: MethodId,
    hw_id: String,
    throughput_tps: f64,
    latency_s: f64,
    runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum HistoryLine {
    Header(HistoryHeader),
    Task(TaskDescriptor),
    Measurement(MeasurementRecord),
}

/// A fully parsed history file.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub header: HistoryHeader,
    pub tasks: Vec<TaskDescriptor>,
    pub tensor: PerformanceTensor,
}

/// Serializes tasks and measurements to `path`. Every task id referenced by
/// the tensor must appear in `tasks`.
pub fn write_history(
    path: &Path,
    tasks: &[TaskDescriptor],
    tensor: &PerformanceTensor,
    generator_digest: &str,
) -> Result<()> {
    let known: HashMap<&str, ()> = tasks.iter().map(|t| (t.task_id.as_str(), ())).collect();
    for (key, _) in tensor.iter() {
        if !known.contains_key(key.0.as_str()) {
            return Err(Error::validation(format!(
                "tensor references task {:?} absent from the task list",
                key.0
            )));
        }
    }

    let mut out = String::new();
    let mut push = |line: &HistoryLine| -> Result<()> {
        let text = serde_json::to_string(line)
            .map_err(|e| Error::internal(format!("history serialization failed: {e}")))?;
        writeln!(out, "{text}").expect("writing to a String cannot fail");
        Ok(())
    };
    push(&HistoryLine::Header(HistoryHeader::current(generator_digest)))?;
    for task in tasks {
        task.validate()?;
        push(&HistoryLine::Task(task.clone()))?;
    }
    for ((task_id, method_id, hw_id), m) in tensor.iter() {
        push(&HistoryLine::Measurement(MeasurementRecord {
            task_id: task_id.clone(),
            method_id: *method_id,
            hw_id: hw_id.clone(),
            throughput_tps: m.throughput_tps,
            latency_s: m.latency_s,
            runtime_s: m.runtime_s,
        }))?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses a history file, checking the header before any record and reporting
/// malformed lines with their 1-based line number.
pub fn read_history(path: &Path) -> Result<History> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty history file, expected a header line"))?;
    let header = match serde_json::from_str::<HistoryLine>(first) {
        Ok(HistoryLine::Header(h)) => h,
        Ok(_) => return Err(parse_err(1, "first line must be the header object")),
        Err(e) => return Err(parse_err(1, format!("malformed header: {e}"))),
    };
    if header.format_version != HISTORY_FORMAT_VERSION {
        return Err(Error::Version {
            found: header.format_version,
            expected: HISTORY_FORMAT_VERSION.to_string(),
        });
    }
    for (name, found, expected) in [
        ("data", &header.data_schema, DATA_SCHEMA_ID),
        ("method", &header.method_schema, METHOD_SCHEMA_ID),
        ("hardware", &header.hw_schema, HW_SCHEMA_ID),
    ] {
        if found != expected {
            return Err(Error::SchemaMismatch {
                expected: format!("{name} schema {expected}"),
                found: found.clone(),
            });
        }
    }

    let mut tasks: Vec<TaskDescriptor> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut tensor = PerformanceTensor::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: HistoryLine = serde_json::from_str(raw)
            .map_err(|e| parse_err(lineno, format!("malformed record: {e}")))?;
        match line {
            HistoryLine::Header(_) => {
                return Err(parse_err(lineno, "unexpected second header line"));
            }
            HistoryLine::Task(task) => {
                task.validate()
                    .map_err(|e| parse_err(lineno, format!("invalid task: {e}")))?;
                if by_id.contains_key(&task.task_id) {
                    return Err(parse_err(
                        lineno,
                        format!("duplicate task id {:?}", task.task_id),
                    ));
                }
                by_id.insert(task.task_id.clone(), tasks.len());
                tasks.push(task);
            }
            HistoryLine::Measurement(m) => {
                let task = by_id
                    .get(&m.task_id)
                    .map(|i| &tasks[*i])
                    .ok_or_else(|| {
                        parse_err(
                            lineno,
                            format!("measurement references unknown task {:?}", m.task_id),
                        )
                    })?;
                let metrics = MetricVector::new(m.throughput_tps, m.latency_s, m.runtime_s)
                    .map_err(|e| parse_err(lineno, format!("invalid measurement: {e}")))?;
                tensor
                    .insert(task, m.method_id, &m.hw_id, metrics, false)
                    .map_err(|e| parse_err(lineno, format!("rejected measurement: {e}")))?;
            }
        }
    }

    Ok(History {
        header,
        tasks,
        tensor,
    })
}
