//! One-file pipeline: parse, analyze, detect, optionally patch and verify.
//! The batch driver layers file IO, concurrency, and exit codes on top.

use crate::analysis::analyze;
use crate::detectors::{detect_and_filter, Finding, Thresholds};
use crate::frontend::{parse, print, ParseError};
use crate::patcher::{generate_patches, PatchConfig, PatchOutcome};
use crate::report::PhaseTimings;
use crate::verifier::{verify, VerificationReport};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    DetectOnly,
    Fix,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub thresholds: Thresholds,
    pub patch: PatchConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Fix,
            thresholds: Thresholds::default(),
            patch: PatchConfig::default(),
        }
    }
}

pub struct PipelineResult {
    pub findings: Vec<Finding>,
    pub patch: Option<PatchOutcome>,
    /// Canonical print of the original, diff baseline for patches.
    pub original_printed: String,
    pub patched_printed: Option<String>,
    pub verification: Option<VerificationReport>,
    pub timings: PhaseTimings,
}

/// Run the pipeline over one source text.
pub fn run_pipeline(
    source: &str,
    path: &str,
    config: &PipelineConfig,
) -> Result<PipelineResult, ParseError> {
    let mut timings = PhaseTimings::default();

    let detect_start = Instant::now();
    let unit = parse(source, path)?;
    let analyses = analyze(&unit).map_err(|e| ParseError::Unsupported {
        construct: e.to_string(),
        line: 1,
        column: 1,
    })?;
    let findings = detect_and_filter(&analyses, source, &config.thresholds);
    drop(analyses);
    timings.detection_ms = detect_start.elapsed().as_millis();

    let original_printed = print(&unit).unwrap_or_default();

    if config.mode == Mode::DetectOnly {
        return Ok(PipelineResult {
            findings,
            patch: None,
            original_printed,
            patched_printed: None,
            verification: None,
            timings,
        });
    }

    let patch_start = Instant::now();
    let outcome = generate_patches(&findings, &unit, &config.patch);
    let patched_printed = print(&outcome.patched).ok();
    timings.patch_ms = patch_start.elapsed().as_millis();

    let verify_start = Instant::now();
    let verification = patched_printed
        .as_ref()
        .map(|text| verify(&findings, text, path, &config.thresholds));
    timings.verification_ms = verify_start.elapsed().as_millis();

    Ok(PipelineResult {
        findings,
        patch: Some(outcome),
        original_printed,
        patched_printed,
        verification,
        timings,
    })
}
