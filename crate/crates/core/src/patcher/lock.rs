//! Method-level fallback for reentrancy: a contract-wide bool lock that
//! rejects re-entrant invocations of the guarded function.

use crate::detectors::Finding;
use crate::frontend::ast::*;

use super::wrap::finding_key;
use super::{fresh_name, EditKind, EditScript, FixPattern, PatchError};

/// Guard the vulnerable function with a global lock. When `existing_lock`
/// names a lock variable already added to this contract by an earlier script
/// in the same run, it is reused instead of declaring another.
pub fn apply_lock(
    finding: &Finding,
    unit: &SourceUnit,
    existing_lock: Option<&str>,
) -> Result<EditScript, PatchError> {
    let function_id = finding
        .site
        .function_id
        .ok_or_else(|| PatchError::NotApplicable("finding has no function".into()))?;
    let contract_id = finding.site.contract_id;
    unit.contract_by_id(contract_id).ok_or(PatchError::MissingTarget(contract_id))?;

    let mut script = EditScript::new(FixPattern::Lock, finding_key(finding));
    let lock_var = match existing_lock {
        Some(name) => name.to_string(),
        None => {
            let name = fresh_name(unit, "locked");
            let mut ids = IdGen::new();
            let mut factory = NodeFactory::new(&mut ids);
            let decl = factory.state_var(&name, TypeName::Bool, Visibility::Private);
            script.push(EditKind::AddStateVar { contract: contract_id, decl });
            name
        }
    };
    script.push(EditKind::AddModifierGuard { function: function_id, lock_var });
    Ok(script)
}

/// Lock variable a script of this pattern introduced, if any.
pub fn lock_var_of(script: &EditScript) -> Option<String> {
    script.edits.iter().find_map(|e| match &e.kind {
        EditKind::AddModifierGuard { lock_var, .. } => Some(lock_var.clone()),
        _ => None,
    })
}
