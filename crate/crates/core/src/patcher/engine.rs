//! Patch generation over a whole unit: the four per-class loops in fixed
//! order (unhandled exceptions, reentrancy, input validation, locked ether),
//! re-analyzing after each applied script so positions stay truthful.

use crate::analysis::analyze;
use crate::detectors::{Finding, VulnClass};
use crate::frontend::ast::SourceUnit;
use serde::Serialize;
use std::collections::HashMap;

use super::gas::{estimate_cost, GasEstimate};
use super::lock::{apply_lock, lock_var_of};
use super::reorder::{plan_reorder, reorder_script};
use super::validation::fix_missing_input_validation;
use super::withdraw::fix_locked_ether;
use super::wrap::{finding_key, fix_unhandled_exception};
use super::{apply_edit_script, EditScript, FixPattern, PatchError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReentrancyStrategy {
    PreferReorder,
    ForceLock,
}

#[derive(Debug, Clone)]
pub struct PatchConfig {
    pub reentrancy: ReentrancyStrategy,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig { reentrancy: ReentrancyStrategy::PreferReorder }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PatchStatus {
    Applied,
    /// Finding was marked unfixable in post-processing.
    SkippedUnfixable,
    /// The fix pattern declined (stale or inapplicable site).
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchRecord {
    pub finding: String,
    pub class: &'static str,
    pub pattern: Option<FixPattern>,
    pub edits: usize,
    pub gas_estimate: Option<GasEstimate>,
    pub status: PatchStatus,
    pub note: Option<String>,
}

#[derive(Debug)]
pub struct PatchOutcome {
    pub patched: SourceUnit,
    pub scripts: Vec<EditScript>,
    pub records: Vec<PatchRecord>,
}

/// Alg. order: statement-level wraps first, then reorder/lock, then
/// validation inserts, then withdraw synthesis. Within a class, findings are
/// handled bottom-up by span so earlier edits cannot invalidate later sites.
/// A failed script is recorded and skipped; the rest still apply.
pub fn generate_patches(
    findings: &[Finding],
    unit: &SourceUnit,
    config: &PatchConfig,
) -> PatchOutcome {
    let mut working = unit.clone();
    let mut scripts = Vec::new();
    let mut records = Vec::new();
    let mut lock_vars: HashMap<crate::frontend::ast::NodeId, String> = HashMap::new();

    let class_order = [
        VulnClass::UnhandledException,
        VulnClass::Reentrancy,
        VulnClass::MissingInputValidation,
        VulnClass::LockedEther,
    ];

    for class in class_order {
        let mut class_findings: Vec<&Finding> =
            findings.iter().filter(|f| f.class == class).collect();
        class_findings.sort_by(|a, b| b.site.span.start().cmp(&a.site.span.start()));

        for finding in class_findings {
            let key = finding_key(finding);
            if !finding.fixable {
                records.push(PatchRecord {
                    finding: key,
                    class: class.name(),
                    pattern: None,
                    edits: 0,
                    gas_estimate: None,
                    status: PatchStatus::SkippedUnfixable,
                    note: finding.unfixable_reason.map(|r| r.as_str().to_string()),
                });
                continue;
            }

            let mut note = None;
            let result: Result<EditScript, PatchError> = match class {
                VulnClass::UnhandledException => fix_unhandled_exception(finding, &working),
                VulnClass::MissingInputValidation => {
                    fix_missing_input_validation(finding, &working)
                }
                VulnClass::LockedEther => fix_locked_ether(finding, &working),
                VulnClass::Reentrancy => {
                    let existing = lock_vars.get(&finding.site.contract_id).map(|s| s.as_str());
                    match config.reentrancy {
                        ReentrancyStrategy::ForceLock => {
                            note = Some("lock forced by configuration".to_string());
                            apply_lock(finding, &working, existing)
                        }
                        ReentrancyStrategy::PreferReorder => match analyze(&working) {
                            Ok(analyses) => match plan_reorder(finding, &analyses) {
                                Ok(plan) if plan.blocked.is_none() => {
                                    reorder_script(&plan, &working, finding)
                                }
                                Ok(plan) => {
                                    let reason = plan.blocked.unwrap();
                                    note = Some(format!(
                                        "reorder blocked ({}); fell back to lock",
                                        reason
                                    ));
                                    apply_lock(finding, &working, existing)
                                }
                                Err(e) => Err(e),
                            },
                            Err(e) => Err(PatchError::NotApplicable(e.to_string())),
                        },
                    }
                }
            };

            match result {
                Ok(script) => match apply_edit_script(&working, &script) {
                    Ok(next) => {
                        working = next;
                        if script.pattern == FixPattern::Lock {
                            if let Some(var) = lock_var_of(&script) {
                                lock_vars.entry(finding.site.contract_id).or_insert(var);
                            }
                        }
                        records.push(PatchRecord {
                            finding: script.finding.clone(),
                            class: class.name(),
                            pattern: Some(script.pattern),
                            edits: script.edits.len(),
                            gas_estimate: Some(estimate_cost(&script)),
                            status: PatchStatus::Applied,
                            note,
                        });
                        scripts.push(script);
                    }
                    Err(e) => records.push(PatchRecord {
                        finding: key,
                        class: class.name(),
                        pattern: Some(script.pattern),
                        edits: script.edits.len(),
                        gas_estimate: None,
                        status: PatchStatus::Failed,
                        note: Some(e.to_string()),
                    }),
                },
                Err(e) => records.push(PatchRecord {
                    finding: key,
                    class: class.name(),
                    pattern: None,
                    edits: 0,
                    gas_estimate: None,
                    status: PatchStatus::Failed,
                    note: Some(e.to_string()),
                }),
            }
        }
    }

    PatchOutcome { patched: working, scripts, records }
}
