use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::AccessibilityReport;
use crate::setfinder::LabeledSet;
use crate::weyl::{ThetaSet, WeylElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub measured: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub detail: String,
    pub runtime_ms: f64,
}

impl CheckResult {
    pub fn new(name: &str, status: Status, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            status,
            measured: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            detail: detail.into(),
            runtime_ms: 0.0,
        }
    }

    pub fn skip(name: &str, reason: impl Into<String>) -> Self {
        Self::new(name, Status::Skip, reason)
    }

    pub fn from_bool(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if pass { Status::Pass } else { Status::Fail }, detail)
    }

    pub fn measure(mut self, key: &str, value: impl Serialize) -> Self {
        self.measured.insert(key.to_string(), serde_json::to_value(value).expect("plain data serializes"));
        self
    }

    pub fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub cells: Vec<usize>,
    pub labels: Vec<WeylElement>,
    pub core_cells: Vec<usize>,
}

impl From<&LabeledSet> for SetSummary {
    fn from(s: &LabeledSet) -> Self {
        Self {
            cells: s.cells.iter().copied().collect(),
            labels: s.weyl_labels.iter().cloned().collect(),
            core_cells: s.core_cells.iter().copied().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    pub theta: ThetaSet,
    pub cells: usize,
    pub radius: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub controls: Vec<Vec<f64>>,
    pub complex_file: Option<String>,
    pub accessibility: AccessibilityReport,
    pub core_points: usize,
    pub control_sets: Vec<SetSummary>,
    pub chain_sets: Vec<SetSummary>,
    /// Recurrent components before labeling, including those without a core.
    pub raw_control_components: usize,
    pub raw_chain_components: usize,
    pub theta_s: Option<ThetaSet>,
    pub theta_phi: Option<ThetaSet>,
    pub flag_type_errors: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub runtime_ms: f64,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The report with every timing field zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.runtime_ms = 0.0;
        r.checks.iter_mut().for_each(|c| c.runtime_ms = 0.0);
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
