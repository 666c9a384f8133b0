//! Check records and reports shared by the norm validator and the inequality verifier.

use serde::{Deserialize, Serialize};

use crate::constants::Witness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

/// One evaluated claim. `margin` is signed so that a non-negative margin
/// means the claim is satisfied by the computed numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub claim_id: String,
    pub statement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(claim_id: &str, statement: &str, lhs: f64, rhs: f64, margin: f64, verdict: Verdict) -> Self {
        Self {
            claim_id: claim_id.to_string(),
            statement: statement.to_string(),
            p: None,
            lhs,
            rhs,
            margin,
            verdict,
            witness: None,
            note: None,
        }
    }

    pub fn at_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Two claims that cannot both hold for the space at hand, established from
/// analytic arithmetic rather than from search quality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: String,
    pub p: f64,
    pub upper_cap: f64,
    pub lower_demand: f64,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

pub const TENSION_KIND: &str = "internal-tension";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub space: String,
    pub p_grid: Vec<f64>,
    pub checks: Vec<Check>,
    pub findings: Vec<Finding>,
    pub summary: Verdict,
}

impl InequalityReport {
    pub fn new(space: String, p_grid: Vec<f64>) -> Self {
        Self { space, p_grid, checks: Vec::new(), findings: Vec::new(), summary: Verdict::Holds }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
        self.summarize();
    }

    pub fn extend(&mut self, other: InequalityReport) {
        self.checks.extend(other.checks);
        self.findings.extend(other.findings);
        self.summarize();
    }

    pub fn add_finding(&mut self, finding: Finding) {
        self.findings.push(finding);
    }

    /// Violated beats inconclusive beats holds. Findings do not change the
    /// verdict of individual checks; they are reported alongside.
    pub fn summarize(&mut self) {
        let verdicts = self.checks.iter().map(|c| c.verdict);
        self.summary = verdicts.fold(Verdict::Holds, |acc, v| match (acc, v) {
            (Verdict::Violated, _) | (_, Verdict::Violated) => Verdict::Violated,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Holds,
        });
    }

    pub fn violations(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Violated)
    }

    pub fn find(&self, claim_id: &str) -> impl Iterator<Item = &Check> {
        let id = claim_id.to_string();
        self.checks.iter().filter(move |c| c.claim_id == id)
    }

    /// No violated check and no tension finding. Inconclusive checks are allowed.
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty() && self.violations().next().is_none()
    }
}
