//! Per-attribute distances between test records and their weighted mean.
//!
//! Every distance lies in `[0, 1]`, is symmetric, and is zero on identical input.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::endpoint::HttpMethod;
use crate::record::{Outcome, TestRecord};

/// Weights of the five attribute distances. They must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWeights {
    pub outcome: f64,
    pub method: f64,
    pub resource: f64,
    pub url: f64,
    pub error: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        DistanceWeights {
            outcome: 0.2,
            method: 0.2,
            resource: 0.2,
            url: 0.2,
            error: 0.2,
        }
    }
}

impl DistanceWeights {
    pub fn as_array(&self) -> [f64; 5] {
        [self.outcome, self.method, self.resource, self.url, self.error]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

pub fn d_outcome(a: &TestRecord, b: &TestRecord) -> f64 {
    flag(a.outcome != b.outcome)
}

/// 0 for the same method and index, 0.5 for the same method only, else 1.
pub fn d_method(a: &TestRecord, b: &TestRecord) -> f64 {
    method_distance((a.method, a.method_index), (b.method, b.method_index))
}

pub fn d_resource(a: &TestRecord, b: &TestRecord) -> f64 {
    flag(a.resource != b.resource)
}

/// Fraction of differing path segments, aligned by position over the longer path.
pub fn d_url(a: &TestRecord, b: &TestRecord) -> f64 {
    segment_distance(&url_segments(a), &url_segments(b))
}

/// One minus the Jaccard index of the whitespace tokens of the two error messages.
pub fn d_error(a: &TestRecord, b: &TestRecord) -> f64 {
    jaccard_distance(&error_tokens(a), &error_tokens(b))
}

pub fn combined_distance(a: &TestRecord, b: &TestRecord, weights: &DistanceWeights) -> f64 {
    weighted(
        weights,
        [d_outcome(a, b), d_method(a, b), d_resource(a, b), d_url(a, b), d_error(a, b)],
    )
}

fn flag(differs: bool) -> f64 {
    if differs {
        1.0
    } else {
        0.0
    }
}

fn method_distance(a: (HttpMethod, usize), b: (HttpMethod, usize)) -> f64 {
    if a == b {
        0.0
    } else if a.0 == b.0 {
        0.5
    } else {
        1.0
    }
}

fn weighted(weights: &DistanceWeights, d: [f64; 5]) -> f64 {
    let w = weights.as_array();
    let total: f64 = w.iter().zip(d).map(|(w, d)| w * d).sum();
    total.clamp(0.0, 1.0)
}

/// Non-empty path segments of the record's URL in placeholder form, query dropped.
pub fn url_segments(record: &TestRecord) -> Vec<&str> {
    let source = if record.url_template.is_empty() { &record.url } else { &record.url_template };
    let path = source.split_once('?').map_or(source.as_str(), |(p, _)| p);
    path.split('/').filter(|s| !s.is_empty()).collect()
}

fn segment_distance(a: &[&str], b: &[&str]) -> f64 {
    let slots = a.len().max(b.len());
    if slots == 0 {
        return 0.0;
    }
    let differing = (0..slots).filter(|&i| a.get(i) != b.get(i)).count();
    differing as f64 / slots as f64
}

pub fn error_tokens(record: &TestRecord) -> BTreeSet<&str> {
    record.error_message.split_whitespace().collect()
}

fn jaccard_distance(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let common = a.intersection(b).count();
    let union = a.len() + b.len() - common;
    if union == 0 {
        0.0
    } else {
        1.0 - common as f64 / union as f64
    }
}

/// Record attributes pre-split once, for repeated distance queries.
#[derive(Debug, Clone)]
pub struct Features<'a> {
    outcome: Outcome,
    method: (HttpMethod, usize),
    resource: &'a str,
    segments: Vec<&'a str>,
    tokens: BTreeSet<&'a str>,
}

impl<'a> Features<'a> {
    pub fn of(record: &'a TestRecord) -> Self {
        Features {
            outcome: record.outcome,
            method: (record.method, record.method_index),
            resource: &record.resource,
            segments: url_segments(record),
            tokens: error_tokens(record),
        }
    }

    pub fn distance(&self, other: &Features<'_>, weights: &DistanceWeights) -> f64 {
        weighted(
            weights,
            [
                flag(self.outcome != other.outcome),
                method_distance(self.method, other.method),
                flag(self.resource != other.resource),
                segment_distance(&self.segments, &other.segments),
                jaccard_distance(&self.tokens, &other.tokens),
            ],
        )
    }
}
