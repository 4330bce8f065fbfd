//! Statement-level fix: wrap a bare ether-transfer statement in `require()`
//! so a failed transfer reverts the transaction.

use crate::detectors::Finding;
use crate::frontend::ast::*;

use super::{EditKind, EditScript, FixPattern, PatchError};

pub fn fix_unhandled_exception(finding: &Finding, unit: &SourceUnit) -> Result<EditScript, PatchError> {
    let stmt_id = finding
        .site
        .statement
        .ok_or_else(|| PatchError::NotApplicable("finding has no statement site".into()))?;
    let stmt = unit
        .statement_by_id(stmt_id)
        .ok_or(PatchError::MissingTarget(stmt_id))?;

    let Statement::Expr(expr_stmt) = stmt else {
        return Err(PatchError::NotApplicable(
            "call result is already consumed (captured by a declaration)".into(),
        ));
    };
    // the site call must be the whole statement expression, not an operand
    if expr_stmt.expr.id() != finding.site.node {
        if let Expression::Call(call) = &expr_stmt.expr {
            if let Expression::Identifier(callee) = &call.callee {
                if callee.name == "require" || callee.name == "assert" {
                    return Err(PatchError::NotApplicable("call is already wrapped".into()));
                }
            }
        }
        return Err(PatchError::NotApplicable("call result is already consumed".into()));
    }

    let mut script =
        EditScript::new(FixPattern::Require, finding_key(finding));
    script.push(EditKind::WrapInRequire { stmt: stmt_id });
    Ok(script)
}

pub(crate) fn finding_key(finding: &Finding) -> String {
    let (class, contract, function, ordinal) = finding.identity();
    if function.is_empty() {
        format!("{}@{}", class.name(), contract)
    } else {
        format!("{}@{}.{}#{}", class.name(), contract, function, ordinal)
    }
}
