//! Re-verification: run the identical detection pipeline on the patched
//! source and certify that every fixable original finding is gone and no new
//! finding of the four classes appeared.

use crate::analysis::analyze;
use crate::detectors::{detect_and_filter, Finding, Thresholds, VulnClass};
use crate::frontend::{parse, print, ParseError};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Identity used to match findings across versions: spans shift under
/// canonical printing, so matching never relies on byte offsets.
pub type FindingKey = (VulnClass, String, String, usize);

#[derive(Debug, Clone, Serialize)]
pub struct FindingStatus {
    pub class: &'static str,
    pub contract: String,
    pub function: String,
    pub ordinal: usize,
    pub fixable: bool,
    pub status: &'static str, // "eliminated" | "residual" | "introduced"
}

#[derive(Debug)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub original: Vec<Finding>,
    pub residual: Vec<Finding>,
    pub eliminated: BTreeSet<FindingKey>,
    pub introduced: BTreeSet<FindingKey>,
    pub statuses: Vec<FindingStatus>,
    /// Set when the patched text failed to parse (the codegen failure mode).
    pub parse_failure: Option<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Compare findings of the original and patched units, using the exact same
/// detector + ensemble + post-processing configuration as phase I.
pub fn verify(
    original_findings: &[Finding],
    patched_source: &str,
    path: &str,
    thresholds: &Thresholds,
) -> VerificationReport {
    let patched_unit = match parse(patched_source, path) {
        Ok(unit) => unit,
        Err(e) => return parse_failure_report(original_findings, e),
    };
    // printing then reparsing must also hold; a patch that canonicalizes to
    // invalid text is a failed patch even if the tree looked fine
    if let Ok(printed) = print(&patched_unit) {
        if let Err(e) = parse(&printed, path) {
            return parse_failure_report(original_findings, e);
        }
    }

    let analyses = match analyze(&patched_unit) {
        Ok(a) => a,
        Err(e) => {
            return VerificationReport {
                verdict: Verdict::Fail,
                original: original_findings.to_vec(),
                residual: Vec::new(),
                eliminated: BTreeSet::new(),
                introduced: BTreeSet::new(),
                statuses: Vec::new(),
                parse_failure: Some(e.to_string()),
            }
        }
    };
    let patched_findings = detect_and_filter(&analyses, patched_source, thresholds);

    let original_keys: BTreeSet<FindingKey> =
        original_findings.iter().map(|f| f.identity()).collect();
    let patched_keys: BTreeSet<FindingKey> =
        patched_findings.iter().map(|f| f.identity()).collect();

    let eliminated: BTreeSet<FindingKey> =
        original_keys.difference(&patched_keys).cloned().collect();
    let introduced: BTreeSet<FindingKey> =
        patched_keys.difference(&original_keys).cloned().collect();

    let fixable_originals: BTreeSet<FindingKey> =
        original_findings.iter().filter(|f| f.fixable).map(|f| f.identity()).collect();
    let all_fixed = fixable_originals.iter().all(|k| eliminated.contains(k));
    let verdict = if all_fixed && introduced.is_empty() { Verdict::Pass } else { Verdict::Fail };

    let mut statuses = Vec::new();
    for f in original_findings {
        let key = f.identity();
        statuses.push(FindingStatus {
            class: f.class.name(),
            contract: key.1.clone(),
            function: key.2.clone(),
            ordinal: key.3,
            fixable: f.fixable,
            status: if eliminated.contains(&key) { "eliminated" } else { "residual" },
        });
    }
    for f in &patched_findings {
        let key = f.identity();
        if introduced.contains(&key) {
            statuses.push(FindingStatus {
                class: f.class.name(),
                contract: key.1.clone(),
                function: key.2.clone(),
                ordinal: key.3,
                fixable: f.fixable,
                status: "introduced",
            });
        }
    }

    // residual = (originals \ eliminated) ∪ introduced
    let residual: Vec<Finding> = patched_findings
        .into_iter()
        .filter(|f| {
            let key = f.identity();
            original_keys.contains(&key) || introduced.contains(&key)
        })
        .collect();

    VerificationReport {
        verdict,
        original: original_findings.to_vec(),
        residual,
        eliminated,
        introduced,
        statuses,
        parse_failure: None,
    }
}

fn parse_failure_report(original: &[Finding], error: ParseError) -> VerificationReport {
    VerificationReport {
        verdict: Verdict::Fail,
        original: original.to_vec(),
        residual: Vec::new(),
        eliminated: BTreeSet::new(),
        introduced: BTreeSet::new(),
        statuses: Vec::new(),
        parse_failure: Some(error.to_string()),
    }
}
