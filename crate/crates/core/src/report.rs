//! Report structures (stable-ordered JSON and a text summary) and a unified
//! diff between canonical prints.

use crate::detectors::Finding;
use crate::patcher::{PatchRecord, PatchStatus};
use crate::verifier::{FindingStatus, VerificationReport};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FindingReport {
    pub class: &'static str,
    pub file: String,
    pub line: usize,
    pub span: (usize, usize),
    pub contract: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    pub description: String,
    pub votes: Vec<&'static str>,
    pub fixable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<&'static str>,
}

impl FindingReport {
    pub fn from_finding(finding: &Finding, file: &str) -> Self {
        FindingReport {
            class: finding.class.name(),
            file: file.to_string(),
            line: finding.site.line,
            span: (finding.site.span.start(), finding.site.span.end()),
            contract: finding.site.contract.clone(),
            function: finding.site.function.clone(),
            description: finding.site.description.clone(),
            votes: finding.votes.iter().map(|v| v.as_str()).collect(),
            fixable: finding.fixable,
            reason: finding.unfixable_reason.map(|r| r.as_str()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSummary {
    pub verdict: &'static str,
    pub eliminated: usize,
    pub introduced: usize,
    pub residual: usize,
    pub findings: Vec<FindingStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_failure: Option<String>,
}

impl VerificationSummary {
    pub fn from_report(report: &VerificationReport) -> Self {
        VerificationSummary {
            verdict: if report.passed() { "pass" } else { "fail" },
            eliminated: report.eliminated.len(),
            introduced: report.introduced.len(),
            residual: report.residual.len()
                + report
                    .statuses
                    .iter()
                    .filter(|s| s.status == "residual")
                    .count()
                    .saturating_sub(report.residual.len()),
            findings: report.statuses.clone(),
            parse_failure: report.parse_failure.clone(),
        }
    }
}

/// Per-contract-file entry of the batch report. Timing lives only in the
/// text summary so JSON output stays byte-identical across runs.
#[derive(Debug, Clone, Serialize)]
pub struct FileReport {
    pub file: String,
    pub status: &'static str, // "ok" | "syntax-error" | "unsupported" | "io-error"
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub findings: Vec<FindingReport>,
    pub patches: Vec<PatchRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patched_file: Option<String>,
    pub changed_lines: usize,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct BatchReport {
    pub contracts: Vec<FileReport>,
}

impl BatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// Per-phase elapsed milliseconds for the text summary.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PhaseTimings {
    pub detection_ms: u128,
    pub patch_ms: u128,
    pub verification_ms: u128,
}

pub fn text_summary(report: &BatchReport, timings: &[(String, PhaseTimings)]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for file in &report.contracts {
        let fixed = file
            .patches
            .iter()
            .filter(|p| p.status == PatchStatus::Applied && p.edits > 0)
            .count();
        let failed =
            file.patches.iter().filter(|p| p.status != PatchStatus::Applied).count();
        let timing = timings.iter().find(|(name, _)| name == &file.file).map(|(_, t)| *t);
        let _ = write!(out, "{}: ", file.file);
        match file.status {
            "ok" => {
                let verdict = file
                    .verification
                    .as_ref()
                    .map(|v| v.verdict)
                    .unwrap_or("-");
                let _ = write!(
                    out,
                    "findings={} fixed={} failed={} verdict={}",
                    file.findings.len(),
                    fixed,
                    failed,
                    verdict
                );
                if !file.findings.is_empty() {
                    let mut per_class: std::collections::BTreeMap<&str, usize> =
                        std::collections::BTreeMap::new();
                    for f in &file.findings {
                        *per_class.entry(f.class).or_default() += 1;
                    }
                    let detail: Vec<String> =
                        per_class.iter().map(|(c, n)| format!("{}={}", c, n)).collect();
                    let _ = write!(out, " [{}]", detail.join(" "));
                }
                if let Some(t) = timing {
                    let _ = write!(
                        out,
                        " detect={}ms patch={}ms verify={}ms",
                        t.detection_ms, t.patch_ms, t.verification_ms
                    );
                }
            }
            other => {
                let _ = write!(out, "skipped: {}", other);
                if let Some(e) = &file.error {
                    let _ = write!(out, " ({})", e);
                }
            }
        }
        out.push('\n');
    }
    out
}

// -- unified diff ------------------------------------------------------------------

/// Unified diff of two texts (LCS-based), with the conventional headers.
pub fn unified_diff(original: &str, patched: &str, original_name: &str, patched_name: &str) -> String {
    let a: Vec<&str> = original.lines().collect();
    let b: Vec<&str> = patched.lines().collect();
    let ops = diff_ops(&a, &b);

    let mut out = format!("--- {}\n+++ {}\n", original_name, patched_name);
    let mut hunks: Vec<(usize, usize, usize, usize, Vec<String>)> = Vec::new();

    const CONTEXT: usize = 3;
    let mut i = 0;
    while i < ops.len() {
        if ops[i].0 == ' ' {
            i += 1;
            continue;
        }
        // start of a hunk: back up for context
        let start = i.saturating_sub(CONTEXT);
        let mut end = i;
        let mut gap = 0;
        let mut j = i;
        while j < ops.len() {
            if ops[j].0 == ' ' {
                gap += 1;
                if gap > CONTEXT * 2 {
                    break;
                }
            } else {
                gap = 0;
                end = j;
            }
            j += 1;
        }
        let hunk_end = (end + CONTEXT + 1).min(ops.len());

        let mut a_start = None;
        let mut b_start = None;
        let mut a_count = 0;
        let mut b_count = 0;
        let mut lines = Vec::new();
        for op in &ops[start..hunk_end] {
            match op.0 {
                ' ' => {
                    a_count += 1;
                    b_count += 1;
                    if a_start.is_none() {
                        a_start = op.1;
                        b_start = op.2;
                    }
                    lines.push(format!(" {}", op.3));
                }
                '-' => {
                    a_count += 1;
                    if a_start.is_none() {
                        a_start = op.1;
                        b_start = op.2;
                    }
                    lines.push(format!("-{}", op.3));
                }
                _ => {
                    b_count += 1;
                    if a_start.is_none() {
                        a_start = op.1;
                        b_start = op.2;
                    }
                    lines.push(format!("+{}", op.3));
                }
            }
        }
        hunks.push((a_start.unwrap_or(0) + 1, a_count, b_start.unwrap_or(0) + 1, b_count, lines));
        i = hunk_end;
    }

    for (a_start, a_count, b_start, b_count, lines) in hunks {
        use std::fmt::Write;
        let _ = writeln!(out, "@@ -{},{} +{},{} @@", a_start, a_count, b_start, b_count);
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}

/// Added/removed line counts of a diff over canonical prints; the changed-
/// lines figure reported per patch.
pub fn changed_line_count(original: &str, patched: &str) -> usize {
    let a: Vec<&str> = original.lines().collect();
    let b: Vec<&str> = patched.lines().collect();
    diff_ops(&a, &b).iter().filter(|op| op.0 != ' ').count()
}

type DiffOp<'a> = (char, Option<usize>, Option<usize>, &'a str);

/// Line-level LCS; fine for desk-scale sources.
fn diff_ops<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<DiffOp<'a>> {
    let n = a.len();
    let m = b.len();
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] =
                if a[i] == b[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let mut ops = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            ops.push((' ', Some(i), Some(j), a[i]));
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            ops.push(('-', Some(i), Some(j), a[i]));
            i += 1;
        } else {
            ops.push(('+', Some(i), Some(j), b[j]));
            j += 1;
        }
    }
    while i < n {
        ops.push(('-', Some(i), Some(j), a[i]));
        i += 1;
    }
    while j < m {
        ops.push(('+', Some(i), Some(j), b[j]));
        j += 1;
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_marks_insertions_and_removals() {
        let a = "one\ntwo\nthree\n";
        let b = "one\n2\nthree\nfour\n";
        let d = unified_diff(a, b, "a.sol", "b.sol");
        assert!(d.contains("-two"));
        assert!(d.contains("+2"));
        assert!(d.contains("+four"));
        assert_eq!(changed_line_count(a, b), 3);
    }

    #[test]
    fn identical_texts_produce_empty_hunks() {
        let a = "same\nlines\n";
        let d = unified_diff(a, a, "a", "b");
        assert_eq!(d, "--- a\n+++ b\n");
        assert_eq!(changed_line_count(a, a), 0);
    }
}
