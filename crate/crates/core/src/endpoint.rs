//! Endpoint descriptions and the scenario nodes enumerated from them.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::{placeholders_in, validate_paths, ResourceSchema, SchemaError, Template, TemplateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Patch,
    Delete,
}

impl HttpMethod {
    pub const ALL: [HttpMethod; 5] = [
        HttpMethod::Get,
        HttpMethod::Post,
        HttpMethod::Put,
        HttpMethod::Patch,
        HttpMethod::Delete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HttpMethod::Get => "GET",
            HttpMethod::Post => "POST",
            HttpMethod::Put => "PUT",
            HttpMethod::Patch => "PATCH",
            HttpMethod::Delete => "DELETE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OutcomeCase {
    Positive,
    Negative,
    Destructive,
}

impl OutcomeCase {
    pub const ALL: [OutcomeCase; 3] = [OutcomeCase::Positive, OutcomeCase::Negative, OutcomeCase::Destructive];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeCase::Positive => "POSITIVE",
            OutcomeCase::Negative => "NEGATIVE",
            OutcomeCase::Destructive => "DESTRUCTIVE",
        }
    }

    fn key(self) -> &'static str {
        match self {
            OutcomeCase::Positive => "positive",
            OutcomeCase::Negative => "negative",
            OutcomeCase::Destructive => "destructive",
        }
    }
}

impl fmt::Display for OutcomeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Status codes accepted when a case does not list its own.
pub fn default_expected_status(method: HttpMethod, case: OutcomeCase) -> BTreeSet<u16> {
    let codes: &[u16] = match (case, method) {
        (OutcomeCase::Positive, HttpMethod::Get) => &[200],
        (OutcomeCase::Positive, HttpMethod::Post) => &[201],
        (OutcomeCase::Positive, HttpMethod::Put) => &[200, 201],
        (OutcomeCase::Positive, HttpMethod::Patch) => &[200],
        (OutcomeCase::Positive, HttpMethod::Delete) => &[200, 204],
        (OutcomeCase::Negative, HttpMethod::Post) => &[409],
        // conditional PUT (`If-Match: *`) against a missing resource
        (OutcomeCase::Negative, HttpMethod::Put) => &[412],
        (OutcomeCase::Negative, _) => &[404],
        (OutcomeCase::Destructive, _) => &[400, 422],
    };
    codes.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RequestInput {
    pub headers: BTreeMap<String, String>,
    pub query: BTreeMap<String, String>,
    /// JSON body, populated structurally.
    pub body: Option<Template>,
    /// Verbatim body text (placeholders interpolated); lets users send non-JSON.
    pub raw_body: Option<String>,
}

impl RequestInput {
    fn is_empty(&self) -> bool {
        self.headers.is_empty() && self.query.is_empty() && self.body.is_none() && self.raw_body.is_none()
    }

    fn placeholders(&self) -> Result<Vec<String>, TemplateError> {
        let mut out = Vec::new();
        for v in self.headers.values().chain(self.query.values()) {
            out.extend(placeholders_in(v)?);
        }
        if let Some(body) = &self.body {
            out.extend(body.placeholders()?);
        }
        if let Some(raw) = &self.raw_body {
            out.extend(placeholders_in(raw)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpectedOutput {
    pub status: BTreeSet<u16>,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    #[serde(default)]
    pub body: Option<Template>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub input: RequestInput,
    pub expected: ExpectedOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointDescription {
    pub resource: String,
    pub method: HttpMethod,
    pub url: String,
    pub cases: BTreeMap<OutcomeCase, CaseSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EndpointError {
    #[error(transparent)]
    Json(#[from] SchemaError),
    #[error("endpoint #{index} ({method} {url}): {reason}")]
    Invalid {
        index: usize,
        method: String,
        url: String,
        reason: String,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEndpoint {
    method: String,
    url: String,
    #[serde(default)]
    cases: BTreeMap<String, RawCase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    #[serde(default)]
    input: RequestInput,
    #[serde(default)]
    expected: RawExpected,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExpected {
    status: Option<Value>,
    #[serde(default)]
    headers: BTreeMap<String, String>,
    body: Option<Template>,
}

/// Parses one resource's endpoints file and checks it against the resource schema.
pub fn parse_endpoints(document: &str, schema: &ResourceSchema) -> Result<Vec<EndpointDescription>, EndpointError> {
    let raw: Vec<RawEndpoint> = serde_json::from_str(document).map_err(|e| SchemaError::from_json(&e))?;
    raw.into_iter()
        .enumerate()
        .map(|(index, ep)| convert_endpoint(index, ep, schema))
        .collect()
}

fn convert_endpoint(index: usize, raw: RawEndpoint, schema: &ResourceSchema) -> Result<EndpointDescription, EndpointError> {
    let fail = |reason: String| EndpointError::Invalid {
        index,
        method: raw.method.clone(),
        url: raw.url.clone(),
        reason,
    };
    let method = HttpMethod::parse(&raw.method).ok_or_else(|| fail(format!("unknown method `{}`", raw.method)))?;
    if !raw.url.starts_with('/') {
        return Err(fail("url must start with `/`".into()));
    }
    let url_fields = placeholders_in(&raw.url).map_err(|e| fail(e.to_string()))?;
    validate_paths(url_fields, schema).map_err(|e| fail(e.to_string()))?;
    if raw.cases.is_empty() {
        return Err(fail("no cases declared".into()));
    }

    let mut cases = BTreeMap::new();
    for (name, case) in &raw.cases {
        let outcome = OutcomeCase::ALL
            .into_iter()
            .find(|c| c.key() == name.to_ascii_lowercase())
            .ok_or_else(|| fail(format!("unknown case `{name}`")))?;
        let status = match &case.expected.status {
            None => default_expected_status(method, outcome),
            Some(v) => parse_status_set(v).map_err(|r| fail(format!("{}: {r}", outcome.key())))?,
        };
        if status.is_empty() {
            return Err(fail(format!("{}: expected status set is empty", outcome.key())));
        }
        if outcome == OutcomeCase::Destructive && case.input.is_empty() {
            return Err(fail("destructive case needs a malformed body, query or header template".into()));
        }
        let mut fields = case.input.placeholders().map_err(|e| fail(e.to_string()))?;
        for v in case.expected.headers.values() {
            fields.extend(placeholders_in(v).map_err(|e| fail(e.to_string()))?);
        }
        if let Some(body) = &case.expected.body {
            fields.extend(body.placeholders().map_err(|e| fail(e.to_string()))?);
        }
        validate_paths(fields, schema).map_err(|e| fail(format!("{}: {e}", outcome.key())))?;
        let spec = CaseSpec {
            input: case.input.clone(),
            expected: ExpectedOutput {
                status,
                headers: case.expected.headers.clone(),
                body: case.expected.body.clone(),
            },
        };
        if cases.insert(outcome, spec).is_some() {
            return Err(fail(format!("case `{}` declared twice", outcome.key())));
        }
    }

    Ok(EndpointDescription {
        resource: schema.name.clone(),
        method,
        url: raw.url.to_owned(),
        cases,
    })
}

fn parse_status_set(v: &Value) -> Result<BTreeSet<u16>, String> {
    let items: Vec<&Value> = match v {
        Value::Array(xs) => xs.iter().collect(),
        single => alloc::vec![single],
    };
    items
        .into_iter()
        .map(|x| match x.as_u64() {
            Some(code) if (100..=599).contains(&code) => Ok(code as u16),
            _ => Err(format!("invalid status code {x}")),
        })
        .collect()
}

/// Index of a node inside its graph.
pub type NodeId = usize;

/// One testable request scenario: (method, outcome case, method index) plus its templates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioNode {
    pub id: NodeId,
    pub resource: String,
    pub method: HttpMethod,
    pub outcome_case: OutcomeCase,
    pub method_index: usize,
    pub url: String,
    pub input: RequestInput,
    pub expected: ExpectedOutput,
}

impl ScenarioNode {
    /// Nodes with equal keys make the same assertion.
    pub fn equivalence_key(&self) -> (HttpMethod, OutcomeCase) {
        (self.method, self.outcome_case)
    }

    /// `resource:METHOD:CASE:index`, the string form used in walk exports.
    pub fn label(&self) -> String {
        format!("{}:{}:{}:{}", self.resource, self.method, self.outcome_case, self.method_index)
    }
}

/// One node per declared case; indices are dense per (resource, method, case), in declaration order.
pub fn enumerate_nodes(endpoints: &[EndpointDescription]) -> Vec<ScenarioNode> {
    let mut counters: BTreeMap<(String, HttpMethod, OutcomeCase), usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    for ep in endpoints {
        for (case, spec) in &ep.cases {
            let slot = counters.entry((ep.resource.clone(), ep.method, *case)).or_insert(0);
            nodes.push(ScenarioNode {
                id: nodes.len(),
                resource: ep.resource.clone(),
                method: ep.method,
                outcome_case: *case,
                method_index: *slot,
                url: ep.url.clone(),
                input: spec.input.clone(),
                expected: spec.expected.clone(),
            });
            *slot += 1;
        }
    }
    nodes
}
