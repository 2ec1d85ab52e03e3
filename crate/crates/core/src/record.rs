//! One executed test, as written to and read from the run log.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::endpoint::{HttpMethod, OutcomeCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestRecord {
    pub outcome: Outcome,
    pub resource: String,
    pub method: HttpMethod,
    pub method_index: usize,
    pub outcome_case: OutcomeCase,
    /// Path and query actually requested.
    pub url: String,
    /// The endpoint's URL template, so ids can be compared in placeholder form.
    pub url_template: String,
    /// 1-based.
    pub iteration: usize,
    /// Empty iff the test passed.
    pub error_message: String,
    pub walk_id: usize,
    pub step_index: usize,
}

impl TestRecord {
    pub fn is_failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }

    /// Pass/fail must agree with the presence of an error message.
    pub fn is_consistent(&self) -> bool {
        match self.outcome {
            Outcome::Pass => self.error_message.is_empty(),
            Outcome::Fail => !self.error_message.is_empty(),
        }
    }
}
