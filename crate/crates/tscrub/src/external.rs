//! Imputation methods backed by a child process.
//!
//! The gapped series goes to the child's stdin, one value per line with an
//! empty line for a gap. The child must print the same number of lines,
//! all of them numbers.

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};

use tscrub_core::impute::{ImputationMethod, ImputeError};
use tscrub_core::MethodId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExternalError {
    #[error("method '{id}': child failed: {reason}")]
    ChildFailed { id: MethodId, reason: String },
    #[error("method '{id}' broke its contract: {reason}")]
    ContractViolation { id: MethodId, reason: String },
}

impl From<ExternalError> for ImputeError {
    fn from(e: ExternalError) -> Self {
        match e {
            ExternalError::ChildFailed { id, reason } => ImputeError::MethodFailed { id, reason },
            ExternalError::ContractViolation { id, reason } => ImputeError::ContractViolation { id, reason },
        }
    }
}

/// Parses `id=command` as given on the command line.
pub fn parse_spec(spec: &str) -> Option<(String, String)> {
    let (id, cmd) = spec.split_once('=')?;
    let (id, cmd) = (id.trim(), cmd.trim());
    (!id.is_empty() && !cmd.is_empty()).then(|| (id.to_string(), cmd.to_string()))
}

fn encode(values: &[Option<f64>]) -> String {
    let mut s = String::with_capacity(values.len() * 8);
    for v in values {
        if let Some(v) = v {
            s.push_str(&v.to_string());
        }
        s.push('\n');
    }
    s
}

/// Runs `command` through `sh -c` once on `values`.
pub fn run_external(id: &MethodId, command: &str, values: &[Option<f64>]) -> Result<Vec<f64>, ExternalError> {
    let failed = |reason: String| ExternalError::ChildFailed {
        id: id.clone(),
        reason,
    };
    let violation = |reason: String| ExternalError::ContractViolation {
        id: id.clone(),
        reason,
    };
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| failed(format!("cannot start '{command}': {e}")))?;
    let input = encode(values);
    let mut stdin = child.stdin.take().expect("stdin is piped");
    // write on another thread so a child that prints before reading cannot deadlock
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
    let output = child
        .wait_with_output()
        .map_err(|e| failed(e.to_string()))?;
    let _ = writer.join();
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        let first = stderr.lines().next().unwrap_or("").trim();
        return Err(failed(format!("{}{}{first}", output.status, if first.is_empty() { "" } else { ": " })));
    }
    let text = String::from_utf8(output.stdout).map_err(|_| violation("output is not UTF-8".into()))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != values.len() {
        return Err(violation(format!(
            "returned {} lines for {} inputs",
            lines.len(),
            values.len()
        )));
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() {
                return Err(violation(format!("line {} is still a gap", i + 1)));
            }
            line.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| violation(format!("line {} is not a finite number: '{line}'", i + 1)))
        })
        .collect()
}

/// Wraps `command` as an imputation method. Calls on one instance are
/// serialized; each call runs a fresh child.
pub fn external_method(id: impl Into<MethodId>, command: impl Into<String>) -> ImputationMethod {
    let id: MethodId = id.into();
    let command: String = command.into();
    let lock = Arc::new(Mutex::new(()));
    let method_id = id.clone();
    ImputationMethod::new(id, move |values: &[Option<f64>]| {
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        run_external(&method_id, &command, values).map_err(ImputeError::from)
    })
}
