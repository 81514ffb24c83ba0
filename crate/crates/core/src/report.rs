//! Structured stability reports with per-condition verdicts.

use serde::{Deserialize, Serialize};

use crate::problem::{CaseInfo, CaseTag};

/// Verdict of a single certificate condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

/// Three-valued aggregate answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

/// The analyzer never certifies absence of Robinson stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobinsonVerdict {
    Yes,
    Unknown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub id: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ConditionVerdict {
    pub fn new(id: &str, verdict: Verdict) -> Self {
        ConditionVerdict {
            id: id.to_string(),
            verdict,
            witness: None,
            detail: None,
        }
    }

    pub fn with_witness(mut self, witness: Option<Vec<f64>>) -> Self {
        self.witness = witness;
        self
    }

    pub fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseSummary {
    pub tag: CaseTag,
    pub lambda: f64,
    pub activity_residual: f64,
}

impl From<&CaseInfo> for CaseSummary {
    fn from(c: &CaseInfo) -> Self {
        CaseSummary {
            tag: c.case_tag,
            lambda: c.lambda,
            activity_residual: c.activity_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaritySummary {
    pub residual: f64,
    pub mfcq_ok: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DeterminantSummary {
    /// det of the objective Hessian (interior test).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core: Option<f64>,
    /// det of the bordered stability matrix (active cases).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bordered: Option<f64>,
}

/// Per-condition verdicts plus the aggregated stability answers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub case: CaseSummary,
    pub stationarity: StationaritySummary,
    pub conditions: Vec<ConditionVerdict>,
    pub lipschitz_like: TriState,
    pub robinson_stable: RobinsonVerdict,
    pub strong_regular: TriState,
    pub determinants: DeterminantSummary,
}

/// Every condition identifier a report can emit. The README's certificate
/// catalog documents each one; tests enforce the correspondence.
pub fn condition_catalog() -> &'static [&'static str] {
    &[
        "MFCQ",
        "Thm3.1(a)",
        "int.C1",
        "int.C2",
        "Thm3.1(b)",
        "bp.C1",
        "bp.C2",
        "(4a)",
        "(4b)",
        "(4c)",
        "(4d)",
        "bz.NEC",
        "qp.int.det",
        "qp.bord.det",
        "qp.z.a",
        "qp.z.b",
        "qp.z.c",
        "qp.z.nec",
        "sr.pos",
        "sr.zero",
        "cf.pos",
        "cf.zero",
    ]
}
