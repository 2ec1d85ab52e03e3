//! Nested bins of failed records over a chosen attribute order.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::record::TestRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Attribute {
    Resource,
    Method,
    MethodIndex,
    OutcomeCase,
    Outcome,
    Url,
    ErrorMessage,
    Iteration,
}

impl Attribute {
    pub const ALL: [Attribute; 8] = [
        Attribute::Resource,
        Attribute::Method,
        Attribute::MethodIndex,
        Attribute::OutcomeCase,
        Attribute::Outcome,
        Attribute::Url,
        Attribute::ErrorMessage,
        Attribute::Iteration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Resource => "resource",
            Attribute::Method => "method",
            Attribute::MethodIndex => "methodIndex",
            Attribute::OutcomeCase => "outcomeCase",
            Attribute::Outcome => "outcome",
            Attribute::Url => "url",
            Attribute::ErrorMessage => "errorMessage",
            Attribute::Iteration => "iteration",
        }
    }

    pub fn parse(name: &str) -> Option<Attribute> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn value_of(self, record: &TestRecord) -> String {
        match self {
            Attribute::Resource => record.resource.clone(),
            Attribute::Method => record.method.as_str().to_owned(),
            Attribute::MethodIndex => format!("{}:{}", record.method, record.method_index),
            Attribute::OutcomeCase => record.outcome_case.as_str().to_owned(),
            Attribute::Outcome => record.outcome.as_str().to_owned(),
            Attribute::Url => record.url_template.clone(),
            Attribute::ErrorMessage => record.error_message.clone(),
            Attribute::Iteration => record.iteration.to_string(),
        }
    }
}

/// Default grouping order: resource, method, outcome case, outcome.
pub fn default_grouping_order() -> Vec<Attribute> {
    alloc::vec![Attribute::Resource, Attribute::Method, Attribute::OutcomeCase, Attribute::Outcome]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub attribute: String,
    pub value: String,
    pub count: usize,
    pub children: Vec<HierarchyNode>,
}

impl HierarchyNode {
    pub fn leaves(&self) -> Vec<&HierarchyNode> {
        if self.children.is_empty() {
            return alloc::vec![self];
        }
        self.children.iter().flat_map(HierarchyNode::leaves).collect()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(HierarchyNode::depth).max().unwrap_or(0)
    }

    /// Follows a chain of values from the root.
    pub fn find(&self, values: &[&str]) -> Option<&HierarchyNode> {
        let mut cur = self;
        for v in values {
            cur = cur.children.iter().find(|c| c.value == *v)?;
        }
        Some(cur)
    }
}

/// Groups records level by level. Children are ordered by descending count, then value.
pub fn hierarchical_grouping(records: &[&TestRecord], order: &[Attribute]) -> HierarchyNode {
    HierarchyNode {
        attribute: "root".into(),
        value: "failed".into(),
        count: records.len(),
        children: group_level(records, order),
    }
}

fn group_level(records: &[&TestRecord], order: &[Attribute]) -> Vec<HierarchyNode> {
    let Some((&attr, rest)) = order.split_first() else {
        return Vec::new();
    };
    let mut bins: BTreeMap<String, Vec<&TestRecord>> = BTreeMap::new();
    for r in records {
        bins.entry(attr.value_of(r)).or_default().push(r);
    }
    let mut children: Vec<HierarchyNode> = bins
        .into_iter()
        .map(|(value, members)| HierarchyNode {
            attribute: attr.name().into(),
            value,
            count: members.len(),
            children: group_level(&members, rest),
        })
        .collect();
    children.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.value.cmp(&b.value)));
    children
}
