//! Resource schemas, seeded instance generation and `{resource:FIELD}` templates.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;
use serde::Deserialize;
use serde_json::{Map, Number, Value};

const DEFAULT_INT_RANGE: (i64, i64) = (0, 1_000_000);
const DEFAULT_FLOAT_RANGE: (f64, f64) = (0.0, 1.0);

/// Sub-fields of a generated `address` value.
pub const ADDRESS_PARTS: [&str; 4] = ["city", "state", "street", "zip"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: unknown kind `{kind}`")]
    UnknownKind { field: String, kind: String },
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("idField: {0}")]
    IdField(String),
    #[error("schema `{0}`: name must be non-empty")]
    EmptyName(String),
    #[error("instance of `{resource}`: field `{field}` {reason}")]
    Instance {
        resource: String,
        field: String,
        reason: String,
    },
}

impl SchemaError {
    pub(crate) fn from_json(err: &serde_json::Error) -> Self {
        SchemaError::Json {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template `{0}` has an unterminated or empty placeholder")]
    Malformed(String),
    #[error("placeholder `{{resource:{0}}}` names no field of the schema")]
    UnknownField(String),
    #[error("placeholder `{{resource:{0}}}` has no value in the instance")]
    Absent(String),
}

/// The generator vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldType {
    Name,
    Address,
    Email,
    Uuid,
    Integer { min: i64, max: i64 },
    Float { min: f64, max: f64 },
    Boolean,
    Date,
    Enum { choices: Vec<String> },
    Text,
    Object { fields: BTreeMap<String, FieldSpec> },
    Array { items: Box<FieldSpec>, min_len: usize, max_len: usize },
}

impl FieldType {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldType::Name => "name",
            FieldType::Address => "address",
            FieldType::Email => "email",
            FieldType::Uuid => "uuid",
            FieldType::Integer { .. } => "integer",
            FieldType::Float { .. } => "float",
            FieldType::Boolean => "boolean",
            FieldType::Date => "date",
            FieldType::Enum { .. } => "enum",
            FieldType::Text => "text",
            FieldType::Object { .. } => "object",
            FieldType::Array { .. } => "array",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub ty: FieldType,
    pub optional: bool,
}

impl FieldSpec {
    pub fn required(ty: FieldType) -> Self {
        FieldSpec { ty, optional: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSchema {
    pub name: String,
    pub id_field: String,
    pub fields: BTreeMap<String, FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResourceInstance {
    pub resource: String,
    pub values: Map<String, Value>,
}

impl ResourceInstance {
    /// Looks up a dot path such as `address.city` or `tags.0`.
    pub fn lookup(&self, path: &str) -> Option<&Value> {
        let mut parts = path.split('.');
        let mut cur = self.values.get(parts.next()?)?;
        for part in parts {
            cur = match cur {
                Value::Object(map) => map.get(part)?,
                Value::Array(items) => items.get(part.parse::<usize>().ok()?)?,
                _ => return None,
            };
        }
        Some(cur)
    }

    /// String form of a field value, as used in URLs and headers.
    pub fn text_of(&self, path: &str) -> Option<String> {
        self.lookup(path).map(stringify)
    }
}

/// Renders a value for a textual position: strings raw, everything else as compact JSON.
pub fn stringify(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawSchema {
    name: String,
    id_field: Option<Value>,
    fields: BTreeMap<String, RawField>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawField {
    kind: String,
    #[serde(default)]
    optional: bool,
    min: Option<Number>,
    max: Option<Number>,
    choices: Option<Vec<String>>,
    items: Option<Box<RawField>>,
    min_len: Option<usize>,
    max_len: Option<usize>,
    fields: Option<BTreeMap<String, RawField>>,
}

impl RawField {
    fn into_spec(self, path: &str) -> Result<FieldSpec, SchemaError> {
        let invalid = |reason: &str| SchemaError::Invalid {
            field: path.to_owned(),
            reason: reason.to_owned(),
        };
        let RawField {
            kind,
            optional,
            min,
            max,
            choices,
            items,
            min_len,
            max_len,
            fields,
        } = self;

        let mut stray: Vec<&str> = Vec::new();
        let mut reject_unless = |allowed: bool, name: &'static str, present: bool| {
            if present && !allowed {
                stray.push(name);
            }
        };
        let numeric = matches!(kind.as_str(), "integer" | "float");
        reject_unless(numeric, "min", min.is_some());
        reject_unless(numeric, "max", max.is_some());
        reject_unless(kind == "enum", "choices", choices.is_some());
        reject_unless(kind == "array", "items", items.is_some());
        reject_unless(kind == "array", "minLen", min_len.is_some());
        reject_unless(kind == "array", "maxLen", max_len.is_some());
        reject_unless(kind == "object", "fields", fields.is_some());
        if let Some(name) = stray.first() {
            return Err(invalid(&format!("constraint `{name}` does not apply to kind `{kind}`")));
        }

        let ty = match kind.as_str() {
            "name" => FieldType::Name,
            "address" => FieldType::Address,
            "email" => FieldType::Email,
            "uuid" => FieldType::Uuid,
            "boolean" => FieldType::Boolean,
            "date" => FieldType::Date,
            "text" => FieldType::Text,
            "integer" => {
                let as_int = |n: Option<Number>, default: i64, which: &str| match n {
                    None => Ok(default),
                    Some(n) => n
                        .as_i64()
                        .ok_or_else(|| invalid(&format!("`{which}` must be an integer"))),
                };
                let min = as_int(min, DEFAULT_INT_RANGE.0, "min")?;
                let max = as_int(max, DEFAULT_INT_RANGE.1.max(min), "max")?;
                if min > max {
                    return Err(invalid("min must not exceed max"));
                }
                FieldType::Integer { min, max }
            }
            "float" => {
                let min = min.map(|n| n.as_f64().unwrap_or(0.0)).unwrap_or(DEFAULT_FLOAT_RANGE.0);
                let max = max
                    .map(|n| n.as_f64().unwrap_or(0.0))
                    .unwrap_or(if min > DEFAULT_FLOAT_RANGE.1 { min } else { DEFAULT_FLOAT_RANGE.1 });
                if !(min <= max) {
                    return Err(invalid("min must not exceed max"));
                }
                FieldType::Float { min, max }
            }
            "enum" => {
                let choices = choices.unwrap_or_default();
                if choices.is_empty() {
                    return Err(invalid("enum needs at least one choice"));
                }
                for (i, c) in choices.iter().enumerate() {
                    if choices[..i].contains(c) {
                        return Err(invalid(&format!("duplicate enum choice `{c}`")));
                    }
                }
                FieldType::Enum { choices }
            }
            "array" => {
                let items = items.ok_or_else(|| invalid("array needs an `items` spec"))?;
                let items = items.into_spec(&format!("{path}.items"))?;
                let min_len = min_len.unwrap_or(0);
                let max_len = max_len.unwrap_or(min_len.max(3));
                if min_len > max_len {
                    return Err(invalid("minLen must not exceed maxLen"));
                }
                FieldType::Array {
                    items: Box::new(items),
                    min_len,
                    max_len,
                }
            }
            "object" => {
                let raw = fields.ok_or_else(|| invalid("object needs a `fields` map"))?;
                FieldType::Object {
                    fields: convert_fields(raw, Some(path))?,
                }
            }
            _ => {
                return Err(SchemaError::UnknownKind {
                    field: path.to_owned(),
                    kind,
                })
            }
        };
        Ok(FieldSpec { ty, optional })
    }
}

fn convert_fields(
    raw: BTreeMap<String, RawField>,
    parent: Option<&str>,
) -> Result<BTreeMap<String, FieldSpec>, SchemaError> {
    let mut out = BTreeMap::new();
    for (name, field) in raw {
        let path = match parent {
            Some(p) => format!("{p}.{name}"),
            None => name.clone(),
        };
        if name.is_empty() || name.contains('.') {
            return Err(SchemaError::Invalid {
                field: path,
                reason: "field names must be non-empty and contain no `.`".into(),
            });
        }
        let spec = field.into_spec(&path)?;
        out.insert(name, spec);
    }
    Ok(out)
}

/// Parses and validates one resource schema document.
pub fn parse_resource_schema(document: &str) -> Result<ResourceSchema, SchemaError> {
    let raw: RawSchema = serde_json::from_str(document).map_err(|e| SchemaError::from_json(&e))?;
    if raw.name.trim().is_empty() {
        return Err(SchemaError::EmptyName(raw.name));
    }
    let id_field = match raw.id_field {
        None => return Err(SchemaError::IdField("missing".into())),
        Some(Value::String(s)) => s,
        Some(Value::Array(mut ids)) => match (ids.len(), ids.pop()) {
            (1, Some(Value::String(s))) => s,
            (0, _) => return Err(SchemaError::IdField("missing".into())),
            _ => return Err(SchemaError::IdField("multiple fields designated".into())),
        },
        Some(other) => return Err(SchemaError::IdField(format!("expected a field name, got {other}"))),
    };
    let fields = convert_fields(raw.fields, None)?;
    match fields.get(&id_field) {
        None => return Err(SchemaError::IdField(format!("`{id_field}` is not a declared field"))),
        Some(spec) if !matches!(spec.ty, FieldType::Uuid | FieldType::Integer { .. }) => {
            return Err(SchemaError::IdField(format!(
                "`{id_field}` must be of kind uuid or integer, not {}",
                spec.ty.kind()
            )))
        }
        Some(spec) if spec.optional => {
            return Err(SchemaError::IdField(format!("`{id_field}` cannot be optional")))
        }
        Some(_) => {}
    }
    Ok(ResourceSchema {
        name: raw.name,
        id_field,
        fields,
    })
}

fn field_to_json(spec: &FieldSpec) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), spec.ty.kind().into());
    if spec.optional {
        m.insert("optional".into(), true.into());
    }
    match &spec.ty {
        FieldType::Integer { min, max } => {
            m.insert("min".into(), (*min).into());
            m.insert("max".into(), (*max).into());
        }
        FieldType::Float { min, max } => {
            m.insert("min".into(), (*min).into());
            m.insert("max".into(), (*max).into());
        }
        FieldType::Enum { choices } => {
            m.insert("choices".into(), choices.clone().into());
        }
        FieldType::Array { items, min_len, max_len } => {
            m.insert("items".into(), field_to_json(items));
            m.insert("minLen".into(), (*min_len).into());
            m.insert("maxLen".into(), (*max_len).into());
        }
        FieldType::Object { fields } => {
            let children = fields.iter().map(|(k, v)| (k.clone(), field_to_json(v))).collect();
            m.insert("fields".into(), Value::Object(children));
        }
        _ => {}
    }
    Value::Object(m)
}

impl ResourceSchema {
    /// The document form accepted by [`parse_resource_schema`].
    pub fn to_json(&self) -> Value {
        let fields = self.fields.iter().map(|(k, v)| (k.clone(), field_to_json(v))).collect();
        serde_json::json!({
            "name": self.name,
            "idField": self.id_field,
            "fields": Value::Object(fields),
        })
    }

    /// Whether a dot path resolves to a field (or a sub-part of one).
    pub fn resolves(&self, path: &str) -> bool {
        let mut parts = path.split('.');
        let Some(head) = parts.next() else { return false };
        let Some(mut spec) = self.fields.get(head) else { return false };
        while let Some(part) = parts.next() {
            spec = match &spec.ty {
                FieldType::Object { fields } => match fields.get(part) {
                    Some(child) => child,
                    None => return false,
                },
                FieldType::Array { items, .. } if part.parse::<usize>().is_ok() => items,
                FieldType::Address => return ADDRESS_PARTS.contains(&part) && parts.next().is_none(),
                _ => return false,
            };
        }
        true
    }

    /// Checks that an instance carries every required field with a conforming value.
    pub fn validate_instance(&self, instance: &ResourceInstance) -> Result<(), SchemaError> {
        let err = |field: &str, reason: String| SchemaError::Instance {
            resource: self.name.clone(),
            field: field.to_owned(),
            reason,
        };
        if instance.resource != self.name {
            return Err(err("", format!("belongs to `{}`", instance.resource)));
        }
        check_object(&self.fields, &instance.values, "").map_err(|(f, r)| err(&f, r))?;
        match instance.values.get(&self.id_field) {
            Some(Value::String(s)) if s.is_empty() => Err(err(&self.id_field, "is empty".into())),
            _ => Ok(()),
        }
    }
}

fn check_object(
    specs: &BTreeMap<String, FieldSpec>,
    values: &Map<String, Value>,
    prefix: &str,
) -> Result<(), (String, String)> {
    for key in values.keys() {
        if !specs.contains_key(key) {
            return Err((format!("{prefix}{key}"), "is not declared".into()));
        }
    }
    for (name, spec) in specs {
        let path = format!("{prefix}{name}");
        match values.get(name) {
            None if spec.optional => {}
            None => return Err((path, "is missing".into())),
            Some(v) => check_value(&spec.ty, v, &path)?,
        }
    }
    Ok(())
}

fn check_value(ty: &FieldType, v: &Value, path: &str) -> Result<(), (String, String)> {
    let bad = |what: &str| Err((path.to_owned(), format!("is not a valid {what}: {v}")));
    match ty {
        FieldType::Name | FieldType::Text => match v.as_str() {
            Some(s) if !s.trim().is_empty() => Ok(()),
            _ => bad(ty.kind()),
        },
        FieldType::Email => match v.as_str() {
            Some(s) if s.split('@').count() == 2 && !s.starts_with('@') && !s.ends_with('@') => Ok(()),
            _ => bad("email"),
        },
        FieldType::Uuid => match v.as_str().map(uuid::Uuid::try_parse) {
            Some(Ok(_)) => Ok(()),
            _ => bad("uuid"),
        },
        FieldType::Integer { min, max } => match v.as_i64() {
            Some(n) if *min <= n && n <= *max => Ok(()),
            _ => bad("integer in range"),
        },
        FieldType::Float { min, max } => match v.as_f64() {
            Some(x) if *min <= x && x <= *max => Ok(()),
            _ => bad("float in range"),
        },
        FieldType::Boolean => match v {
            Value::Bool(_) => Ok(()),
            _ => bad("boolean"),
        },
        FieldType::Date => match v.as_str() {
            Some(s) if is_iso_date(s) => Ok(()),
            _ => bad("date"),
        },
        FieldType::Enum { choices } => match v.as_str() {
            Some(s) if choices.iter().any(|c| c == s) => Ok(()),
            _ => bad("enum choice"),
        },
        FieldType::Address => match v {
            Value::Object(m)
                if m.len() == ADDRESS_PARTS.len()
                    && ADDRESS_PARTS.iter().all(|p| m.get(*p).and_then(Value::as_str).is_some()) =>
            {
                Ok(())
            }
            _ => bad("address"),
        },
        FieldType::Object { fields } => match v {
            Value::Object(m) => check_object(fields, m, &format!("{path}.")),
            _ => bad("object"),
        },
        FieldType::Array { items, min_len, max_len } => match v {
            Value::Array(xs) if *min_len <= xs.len() && xs.len() <= *max_len => {
                for (i, x) in xs.iter().enumerate() {
                    check_value(&items.ty, x, &format!("{path}.{i}"))?;
                }
                Ok(())
            }
            _ => bad("array of allowed length"),
        },
    }
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let num = |r: core::ops::Range<usize>| s.get(r).and_then(|t| t.parse::<u32>().ok());
    match (num(0..4), num(5..7), num(8..10)) {
        (Some(y), Some(m), Some(d)) => (1..=12).contains(&m) && d >= 1 && d <= days_in_month(y, m),
        _ => false,
    }
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

const FIRST_NAMES: &[&str] = &[
    "Aarav", "Zoe", "Meera", "Lucas", "Ishaan", "Amara", "Noah", "Priya", "Mateo", "Kavya", "Elena",
    "Rohan", "Sofia", "Arjun", "Leila", "Omar",
];
const LAST_NAMES: &[&str] = &[
    "Sharma", "Garcia", "Okafor", "Nguyen", "Patel", "Schmidt", "Rossi", "Tanaka", "Mehta", "Silva",
    "Kowalski", "Haddad", "Verma", "Larsen",
];
const STREETS: &[&str] = &[
    "Maple", "Cedar", "Lake", "Hill", "Station", "Park", "Temple", "Church", "Mill", "River",
];
const STREET_SUFFIXES: &[&str] = &["Street", "Road", "Avenue", "Lane", "Marg"];
const CITIES: &[(&str, &str)] = &[
    ("Bhopal", "MP"),
    ("Indore", "MP"),
    ("Pune", "MH"),
    ("Jaipur", "RJ"),
    ("Chennai", "TN"),
    ("Kochi", "KL"),
    ("Lucknow", "UP"),
    ("Mysuru", "KA"),
];
const WORDS: &[&str] = &[
    "lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing", "elit", "sed", "do",
    "eiusmod", "tempor", "incididunt", "labore", "magna", "aliqua",
];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn generate_value<R: Rng + ?Sized>(ty: &FieldType, rng: &mut R) -> Value {
    match ty {
        FieldType::Name => format!("{} {}", pick(rng, FIRST_NAMES), pick(rng, LAST_NAMES)).into(),
        FieldType::Email => {
            let first = pick(rng, FIRST_NAMES).to_lowercase();
            let last = pick(rng, LAST_NAMES).to_lowercase();
            format!("{first}.{last}{}@example.com", rng.gen_range(1..1000)).into()
        }
        FieldType::Address => {
            let (city, state) = CITIES[rng.gen_range(0..CITIES.len())];
            let street = format!(
                "{} {} {}",
                rng.gen_range(1..500),
                pick(rng, STREETS),
                pick(rng, STREET_SUFFIXES)
            );
            serde_json::json!({
                "street": street,
                "city": city,
                "state": state,
                "zip": format!("{:06}", rng.gen_range(110_000..860_000)),
            })
        }
        FieldType::Uuid => {
            let bytes: [u8; 16] = rng.gen();
            let mut s = String::with_capacity(36);
            let _ = write!(s, "{}", uuid::Builder::from_random_bytes(bytes).into_uuid().hyphenated());
            s.into()
        }
        FieldType::Integer { min, max } => rng.gen_range(*min..=*max).into(),
        FieldType::Float { min, max } => {
            let x = if min == max { *min } else { rng.gen_range(*min..=*max) };
            Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        FieldType::Boolean => rng.gen::<bool>().into(),
        FieldType::Date => {
            let year = rng.gen_range(1970..=2030);
            let month = rng.gen_range(1..=12);
            let day = rng.gen_range(1..=days_in_month(year, month));
            format!("{year:04}-{month:02}-{day:02}").into()
        }
        FieldType::Enum { choices } => choices[rng.gen_range(0..choices.len())].clone().into(),
        FieldType::Text => {
            let n = rng.gen_range(4..=10);
            let words: Vec<&str> = (0..n).map(|_| pick(rng, WORDS)).collect();
            words.join(" ").into()
        }
        FieldType::Object { fields } => Value::Object(generate_fields(fields, rng)),
        FieldType::Array { items, min_len, max_len } => {
            let n = rng.gen_range(*min_len..=*max_len);
            Value::Array((0..n).map(|_| generate_field(items, rng)).collect())
        }
    }
}

fn generate_field<R: Rng + ?Sized>(spec: &FieldSpec, rng: &mut R) -> Value {
    generate_value(&spec.ty, rng)
}

fn generate_fields<R: Rng + ?Sized>(fields: &BTreeMap<String, FieldSpec>, rng: &mut R) -> Map<String, Value> {
    let mut out = Map::new();
    for (name, spec) in fields {
        // the coin is always drawn so one optional field does not shift the stream for the rest
        let present = !spec.optional | rng.gen::<bool>();
        let value = generate_field(spec, rng);
        if present {
            out.insert(name.clone(), value);
        }
    }
    out
}

/// Generates one conforming instance. Same rng state in, same instance out.
pub fn generate_instance<R: Rng + ?Sized>(schema: &ResourceSchema, rng: &mut R) -> ResourceInstance {
    ResourceInstance {
        resource: schema.name.clone(),
        values: generate_fields(&schema.fields, rng),
    }
}

const PLACEHOLDER_OPEN: &str = "{resource:";

enum Piece<'a> {
    Literal(&'a str),
    Field(&'a str),
}

fn split_placeholders(text: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let mut pieces = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find(PLACEHOLDER_OPEN) {
        if start > 0 {
            pieces.push(Piece::Literal(&rest[..start]));
        }
        let after = &rest[start + PLACEHOLDER_OPEN.len()..];
        let end = after.find('}').ok_or_else(|| TemplateError::Malformed(text.to_owned()))?;
        let path = &after[..end];
        if path.is_empty() || path.contains('{') {
            return Err(TemplateError::Malformed(text.to_owned()));
        }
        pieces.push(Piece::Field(path));
        rest = &after[end + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest));
    }
    Ok(pieces)
}

/// Field paths named by the placeholders of a text template.
pub fn placeholders_in(text: &str) -> Result<Vec<String>, TemplateError> {
    Ok(split_placeholders(text)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Field(f) => Some(f.to_owned()),
            Piece::Literal(_) => None,
        })
        .collect())
}

/// Fills a text template (URL, header, query value). Values are stringified.
pub fn populate_text(text: &str, instance: &ResourceInstance) -> Result<String, TemplateError> {
    populate_text_with(text, instance, |s| s.to_owned())
}

/// Like [`populate_text`], with each substituted value passed through `encode`.
pub fn populate_text_with(
    text: &str,
    instance: &ResourceInstance,
    encode: impl Fn(&str) -> String,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    for piece in split_placeholders(text)? {
        match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Field(path) => {
                let v = instance
                    .text_of(path)
                    .ok_or_else(|| TemplateError::Absent(path.to_owned()))?;
                out.push_str(&encode(&v));
            }
        }
    }
    Ok(out)
}

/// A structured template: any JSON value whose strings may hold placeholders.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Template(pub Value);

impl Template {
    pub fn new(value: Value) -> Self {
        Template(value)
    }

    pub fn placeholders(&self) -> Result<Vec<String>, TemplateError> {
        let mut out = Vec::new();
        collect_placeholders(&self.0, &mut out)?;
        Ok(out)
    }

    /// Fails on the first placeholder the schema cannot resolve.
    pub fn validate(&self, schema: &ResourceSchema) -> Result<(), TemplateError> {
        validate_paths(self.placeholders()?, schema)
    }

    /// A string that is exactly one placeholder takes the field's JSON value
    /// (so `"{resource:age}"` becomes a number); mixed strings are interpolated.
    pub fn populate(&self, instance: &ResourceInstance) -> Result<Value, TemplateError> {
        populate_value(&self.0, instance)
    }
}

pub(crate) fn validate_paths(paths: Vec<String>, schema: &ResourceSchema) -> Result<(), TemplateError> {
    match paths.into_iter().find(|p| !schema.resolves(p)) {
        Some(p) => Err(TemplateError::UnknownField(p)),
        None => Ok(()),
    }
}

fn collect_placeholders(v: &Value, out: &mut Vec<String>) -> Result<(), TemplateError> {
    match v {
        Value::String(s) => out.extend(placeholders_in(s)?),
        Value::Array(xs) => {
            for x in xs {
                collect_placeholders(x, out)?;
            }
        }
        Value::Object(m) => {
            for x in m.values() {
                collect_placeholders(x, out)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn populate_value(v: &Value, instance: &ResourceInstance) -> Result<Value, TemplateError> {
    Ok(match v {
        Value::String(s) => {
            let pieces = split_placeholders(s)?;
            match pieces.as_slice() {
                [Piece::Field(path)] => instance
                    .lookup(path)
                    .cloned()
                    .ok_or_else(|| TemplateError::Absent((*path).to_owned()))?,
                _ => Value::String(populate_text(s, instance)?),
            }
        }
        Value::Array(xs) => Value::Array(xs.iter().map(|x| populate_value(x, instance)).collect::<Result<_, _>>()?),
        Value::Object(m) => {
            let mut out = Map::new();
            for (k, x) in m {
                out.insert(k.clone(), populate_value(x, instance)?);
            }
            Value::Object(out)
        }
        other => other.clone(),
    })
}

/// Fills a structured template from an instance.
pub fn populate_template(template: &Template, instance: &ResourceInstance) -> Result<Value, TemplateError> {
    template.populate(instance)
}
