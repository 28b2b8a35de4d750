//! Decoded-trace text format.
//!
//! ```text
//! # comment
//! HANDSHAKE-IN CLIENTHELLO
//! VERSION TLS_1_2
//! CIPHERSUITES TLS_RSA_WITH_AES_128_CBC_SHA256 TLS_RSA_WITH_AES_256_CBC_SHA
//!
//! HANDSHAKE-OUT SERVERHELLO
//! --
//! ```
//!
//! One row per line: a key followed by zero or more whitespace-separated
//! values. A blank line ends a message, a `--` line ends a trace, and lines
//! starting with `#` are ignored. Keys must not contain `=`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedRow {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedMessage {
    pub rows: Vec<DecodedRow>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedTrace {
    pub messages: Vec<DecodedMessage>,
}

pub fn parse_traces(text: &str) -> Result<Vec<DecodedTrace>> {
    let mut traces = Vec::new();
    let mut trace = DecodedTrace::default();
    let mut message = DecodedMessage::default();

    fn end_message(trace: &mut DecodedTrace, message: &mut DecodedMessage) {
        if !message.rows.is_empty() {
            trace.messages.push(std::mem::take(message));
        }
    }
    fn end_trace(traces: &mut Vec<DecodedTrace>, trace: &mut DecodedTrace) {
        if !trace.messages.is_empty() {
            traces.push(std::mem::take(trace));
        }
    }

    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            end_message(&mut trace, &mut message);
            continue;
        }
        if line == "--" {
            end_message(&mut trace, &mut message);
            end_trace(&mut traces, &mut trace);
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        if key.contains('=') {
            return Err(Error::Parse { path: None, line: n + 1, message: format!("key `{key}` must not contain '='") });
        }
        message.rows.push(DecodedRow { key: key.to_owned(), values: parts.map(str::to_owned).collect() });
    }
    end_message(&mut trace, &mut message);
    end_trace(&mut traces, &mut trace);

    if traces.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(traces)
}

pub fn parse_trace_file(path: &Path) -> Result<Vec<DecodedTrace>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_traces(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse { path: Some(path.to_owned()), line, message },
        other => other,
    })
}

pub fn serialize_traces(traces: &[DecodedTrace]) -> String {
    let mut out = String::new();
    for trace in traces {
        for message in &trace.messages {
            for row in &message.rows {
                out.push_str(&row.key);
                for v in &row.values {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out.push_str("--\n");
    }
    out
}
