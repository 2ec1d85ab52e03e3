//! Response assertions and the canonical failure messages they produce.
//!
//! Failure messages follow a fixed grammar so that the error-message distance
//! used by clustering compares like with like:
//!
//! ```text
//! expected status in {S}, got T
//! missing field F
//! field F: expected X, got Y
//! missing header H
//! header H: expected X, got Y
//! transport: KIND
//! CONFIG: MESSAGE
//! ```

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde_json::Value;

use crate::endpoint::ExpectedOutput;
use crate::schema::{populate_text, ResourceInstance};

/// Path used when the body itself, not a field of it, mismatches.
pub const ROOT_PATH: &str = "$";
const MAX_RENDERED: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Status { expected: BTreeSet<u16>, got: u16 },
    MissingField(String),
    FieldMismatch { field: String, expected: String, got: String },
    MissingHeader(String),
    HeaderMismatch { name: String, expected: String, got: String },
    Transport(String),
    Config(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Status { expected, got } => {
                f.write_str("expected status in {")?;
                for (i, code) in expected.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{code}")?;
                }
                write!(f, "}}, got {got}")
            }
            Failure::MissingField(field) => write!(f, "missing field {field}"),
            Failure::FieldMismatch { field, expected, got } => write!(f, "field {field}: expected {expected}, got {got}"),
            Failure::MissingHeader(name) => write!(f, "missing header {name}"),
            Failure::HeaderMismatch { name, expected, got } => write!(f, "header {name}: expected {expected}, got {got}"),
            Failure::Transport(kind) => write!(f, "transport: {kind}"),
            Failure::Config(msg) => write!(f, "CONFIG: {msg}"),
        }
    }
}

impl Failure {
    /// Parses a canonical message back. `None` means the text is outside the grammar.
    pub fn parse(message: &str) -> Option<Failure> {
        if message.contains('\n') || message.is_empty() {
            return None;
        }
        if let Some(rest) = message.strip_prefix("expected status in {") {
            let (codes, got) = rest.split_once("}, got ")?;
            let expected = codes
                .split(',')
                .map(|c| c.parse::<u16>().ok())
                .collect::<Option<BTreeSet<u16>>>()?;
            let got = got.parse().ok()?;
            return (!expected.is_empty()).then_some(Failure::Status { expected, got });
        }
        if let Some(field) = message.strip_prefix("missing field ") {
            return (!field.is_empty()).then(|| Failure::MissingField(field.to_owned()));
        }
        if let Some(name) = message.strip_prefix("missing header ") {
            return (!name.is_empty()).then(|| Failure::MissingHeader(name.to_owned()));
        }
        if let Some(kind) = message.strip_prefix("transport: ") {
            return Some(Failure::Transport(kind.to_owned()));
        }
        if let Some(msg) = message.strip_prefix("CONFIG: ") {
            return Some(Failure::Config(msg.to_owned()));
        }
        let mismatch = |rest: &str| -> Option<(String, String, String)> {
            let (subject, rest) = rest.split_once(": expected ")?;
            let (expected, got) = rest.split_once(", got ")?;
            Some((subject.to_owned(), expected.to_owned(), got.to_owned()))
        };
        if let Some(rest) = message.strip_prefix("field ") {
            let (field, expected, got) = mismatch(rest)?;
            return Some(Failure::FieldMismatch { field, expected, got });
        }
        if let Some(rest) = message.strip_prefix("header ") {
            let (name, expected, got) = mismatch(rest)?;
            return Some(Failure::HeaderMismatch { name, expected, got });
        }
        None
    }
}

fn render(v: &Value) -> String {
    let mut s = v.to_string();
    if s.len() > MAX_RENDERED {
        let mut cut = MAX_RENDERED;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push_str("...");
    }
    s
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

fn numbers_equal(a: &serde_json::Number, b: &serde_json::Number) -> bool {
    match (a.as_i64(), b.as_i64()) {
        (Some(x), Some(y)) => x == y,
        _ => a.as_f64() == b.as_f64(),
    }
}

/// Every key of `expected` must be present and equal in `actual`; extra keys are ignored.
/// Arrays must have equal length and match element-wise.
pub fn subset_match(expected: &Value, actual: &Value) -> Result<(), Failure> {
    match_at(expected, actual, "")
}

fn match_at(expected: &Value, actual: &Value, path: &str) -> Result<(), Failure> {
    let mismatch = || Failure::FieldMismatch {
        field: if path.is_empty() { ROOT_PATH.to_owned() } else { path.to_owned() },
        expected: render(expected),
        got: render(actual),
    };
    match (expected, actual) {
        (Value::Object(want), Value::Object(have)) => {
            for (k, v) in want {
                let sub = join(path, k);
                match have.get(k) {
                    None => return Err(Failure::MissingField(sub)),
                    Some(h) => match_at(v, h, &sub)?,
                }
            }
            Ok(())
        }
        (Value::Array(want), Value::Array(have)) if want.len() == have.len() => {
            for (i, (w, h)) in want.iter().zip(have).enumerate() {
                match_at(w, h, &join(path, &i.to_string()))?;
            }
            Ok(())
        }
        (Value::Number(a), Value::Number(b)) if numbers_equal(a, b) => Ok(()),
        (a, b) if a == b && !a.is_number() => Ok(()),
        _ => Err(mismatch()),
    }
}

/// Checks status, then headers, then body. The first failure wins.
pub fn assert_response(
    response: &HttpResponse,
    expected: &ExpectedOutput,
    instance: &ResourceInstance,
) -> Result<(), Failure> {
    if !expected.status.contains(&response.status) {
        return Err(Failure::Status {
            expected: expected.status.clone(),
            got: response.status,
        });
    }
    for (name, template) in &expected.headers {
        let want = populate_text(template, instance).map_err(|e| Failure::Config(e.to_string()))?;
        match response.header(name) {
            None => return Err(Failure::MissingHeader(name.to_ascii_lowercase())),
            Some(got) if got != want => {
                return Err(Failure::HeaderMismatch {
                    name: name.to_ascii_lowercase(),
                    expected: want,
                    got: got.to_owned(),
                })
            }
            Some(_) => {}
        }
    }
    if let Some(template) = &expected.body {
        let want = template.populate(instance).map_err(|e| Failure::Config(e.to_string()))?;
        let have: Value = match serde_json::from_str(&response.body) {
            Ok(v) => v,
            Err(_) => {
                return Err(Failure::FieldMismatch {
                    field: ROOT_PATH.to_owned(),
                    expected: render(&want),
                    got: render(&Value::String(response.body.clone())),
                })
            }
        };
        subset_match(&want, &have)?;
    }
    Ok(())
}
