//! Log analysis: pass/fail ratio, failure hierarchy and clustering.
//!
//! [`analyze`] applies the gates in order: nothing is computed for an empty
//! log, the ratio for any log, the hierarchy once something failed, and
//! clustering only when the failed count exceeds `cluster_gate`.

pub mod dbscan;
pub mod distance;
pub mod hierarchy;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::endpoint::{HttpMethod, OutcomeCase};
use crate::record::{Outcome, TestRecord};

pub use dbscan::{dbscan_by, ClusterLabel};
pub use distance::{combined_distance, d_error, d_method, d_outcome, d_resource, d_url, DistanceWeights, Features};
pub use hierarchy::{default_grouping_order, hierarchical_grouping, Attribute, HierarchyNode};

/// Missing keys take their defaults when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub eps: f64,
    pub min_pts: usize,
    /// Clustering runs only when the failed count is strictly greater than this.
    pub cluster_gate: usize,
    pub weights: DistanceWeights,
    pub grouping_order: Vec<Attribute>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            eps: 0.4,
            min_pts: 7,
            cluster_gate: 100,
            weights: DistanceWeights::default(),
            grouping_order: default_grouping_order(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("eps must be in (0, 1], got {0}")]
    Eps(f64),
    #[error("minPts must be at least 1")]
    MinPts,
    #[error("weights must be non-negative and sum to 1, got sum {0}")]
    Weights(f64),
    #[error("unknown grouping attribute `{0}`")]
    UnknownAttribute(String),
    #[error("grouping order is empty")]
    EmptyOrder,
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(AnalysisError::Eps(self.eps));
        }
        if self.min_pts == 0 {
            return Err(AnalysisError::MinPts);
        }
        let w = self.weights.as_array();
        let sum = self.weights.sum();
        if w.iter().any(|x| !(*x >= 0.0)) || !(sum - 1.0 <= 1e-9 && 1.0 - sum <= 1e-9) {
            return Err(AnalysisError::Weights(sum));
        }
        if self.grouping_order.is_empty() {
            return Err(AnalysisError::EmptyOrder);
        }
        Ok(())
    }

    /// Replaces the grouping order from attribute names.
    pub fn set_grouping_order<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) -> Result<(), AnalysisError> {
        self.grouping_order = names
            .into_iter()
            .map(|n| Attribute::parse(n).ok_or_else(|| AnalysisError::UnknownAttribute(n.into())))
            .collect::<Result<_, _>>()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub fail_ratio: f64,
}

/// Pass/fail counts. `None` for an empty log.
pub fn test_ratio(records: &[TestRecord]) -> Option<RatioSummary> {
    if records.is_empty() {
        return None;
    }
    let failed = records.iter().filter(|r| r.is_failed()).count();
    let total = records.len();
    Some(RatioSummary {
        total,
        passed: total - failed,
        failed,
        fail_ratio: failed as f64 / total as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterAssignment {
    /// Position of the record in the analysed log.
    pub record_index: usize,
    pub label: ClusterLabel,
}

/// DBSCAN over failed records, in log order. `record_index` refers to `records`.
pub fn dbscan(records: &[TestRecord], params: &AnalysisParams) -> Vec<ClusterAssignment> {
    let failed: Vec<usize> = (0..records.len()).filter(|&i| records[i].is_failed()).collect();
    let features: Vec<Features<'_>> = failed.iter().map(|&i| Features::of(&records[i])).collect();
    let labels = dbscan_by(failed.len(), params.eps, params.min_pts, |a, b| {
        features[a].distance(&features[b], &params.weights)
    });
    failed
        .into_iter()
        .zip(labels)
        .map(|(record_index, label)| ClusterAssignment { record_index, label })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Representative {
    pub record_index: usize,
    pub resource: String,
    pub method: HttpMethod,
    pub method_index: usize,
    pub outcome_case: OutcomeCase,
    pub url_template: String,
    pub error_message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterSummary {
    pub label: usize,
    pub size: usize,
    /// First member in log order.
    pub representative: Representative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterParams {
    pub eps: f64,
    pub min_pts: usize,
    pub weights: DistanceWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterReport {
    pub params: ClusterParams,
    pub assignments: Vec<ClusterAssignment>,
    pub summary: Vec<ClusterSummary>,
    pub noise: usize,
}

impl ClusterReport {
    pub fn cluster_count(&self) -> usize {
        self.summary.len()
    }
}

fn summarize(records: &[TestRecord], assignments: &[ClusterAssignment]) -> (Vec<ClusterSummary>, usize) {
    let mut by_label: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut noise = 0;
    for a in assignments {
        match a.label {
            ClusterLabel::Cluster(c) => by_label.entry(c).or_insert((a.record_index, 0)).1 += 1,
            ClusterLabel::Noise => noise += 1,
        }
    }
    let summary = by_label
        .into_iter()
        .map(|(label, (first, size))| {
            let r = &records[first];
            ClusterSummary {
                label,
                size,
                representative: Representative {
                    record_index: first,
                    resource: r.resource.clone(),
                    method: r.method,
                    method_index: r.method_index,
                    outcome_case: r.outcome_case,
                    url_template: r.url_template.clone(),
                    error_message: r.error_message.clone(),
                },
            }
        })
        .collect();
    (summary, noise)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    /// Set when the log held no tests at all.
    pub skipped: bool,
    pub ratio: Option<RatioSummary>,
    pub hierarchy: Option<HierarchyNode>,
    pub clusters: Option<ClusterReport>,
    pub params: AnalysisParams,
}

pub fn analyze(records: &[TestRecord], params: &AnalysisParams) -> Result<AnalysisReport, AnalysisError> {
    params.validate()?;
    let mut report = AnalysisReport {
        skipped: true,
        ratio: None,
        hierarchy: None,
        clusters: None,
        params: params.clone(),
    };
    let Some(ratio) = test_ratio(records) else {
        return Ok(report);
    };
    report.skipped = false;
    report.ratio = Some(ratio);
    if ratio.failed == 0 {
        return Ok(report);
    }
    let failed: Vec<&TestRecord> = records.iter().filter(|r| r.outcome == Outcome::Fail).collect();
    report.hierarchy = Some(hierarchical_grouping(&failed, &params.grouping_order));
    if ratio.failed > params.cluster_gate {
        let assignments = dbscan(records, params);
        let (summary, noise) = summarize(records, &assignments);
        report.clusters = Some(ClusterReport {
            params: ClusterParams {
                eps: params.eps,
                min_pts: params.min_pts,
                weights: params.weights,
            },
            assignments,
            summary,
            noise,
        });
    }
    Ok(report)
}
