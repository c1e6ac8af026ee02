//! Machine-readable command reports.
//!
//! Reports are built as `serde_json::Value` trees, whose objects keep their
//! keys sorted, so the serialized form is canonical and byte-stable.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

/// A named assertion and whether it held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub artifact_version: String,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    /// Human-readable highlights of `results`.
    pub notes: Vec<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

impl VerificationReport {
    /// Status is `pass` exactly when every check holds.
    pub fn new(command: &str, inputs: Value, results: Value, checks: Vec<Check>) -> Self {
        let status = if checks.iter().all(|c| c.passed) {
            Status::Pass
        } else {
            Status::Fail
        };
        VerificationReport {
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            inputs,
            results,
            checks,
            notes: Vec::new(),
            status,
            error: None,
        }
    }

    pub fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes = notes;
        self
    }

    pub fn error(command: &str, message: String) -> Self {
        VerificationReport {
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            inputs: Value::Null,
            results: Value::Null,
            checks: Vec::new(),
            notes: Vec::new(),
            status: Status::Error,
            error: Some(message),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serialization is infallible");
        let mut s = serde_json::to_string_pretty(&v).expect("value serialization is infallible");
        s.push('\n');
        s
    }

    /// One line per check, the notes, then the status.
    pub fn to_text(&self) -> String {
        let mut out = format!("curvprobe {} {}\n", self.artifact_version, self.command);
        if let Some(e) = &self.error {
            out.push_str(&format!("error: {e}\n"));
        }
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            out.push_str(&format!("  [{mark}] {}: {}\n", c.name, c.detail));
        }
        for note in &self.notes {
            out.push_str(&format!("  {note}\n"));
        }
        let status = serde_json::to_value(self.status).expect("status serializes");
        out.push_str(&format!(
            "status: {}\n",
            status.as_str().unwrap_or_default()
        ));
        out
    }
}
