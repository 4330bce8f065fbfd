//! Missing-input-validation detection for public/external function
//! parameters. Single strategy: a parameter counts as validated only when it
//! is a direct operand of a comparison inside require/assert, or of an
//! if-condition guarding a revert, before its first other use. Use as a mere
//! mapping index does not validate.

use crate::analysis::locations::AbstractLocation;
use crate::analysis::Analyses;
use crate::frontend::ast::*;

use super::{line_of, DetectorName, DetectorVote, Site, UnfixableReason, VulnClass};

pub fn detect_missing_input_validation(analyses: &Analyses, src: &str) -> Vec<DetectorVote> {
    let mut votes = Vec::new();
    for mc in &analyses.merged {
        for function in &mc.contract.functions {
            if function.body.is_none()
                || function.kind != FunctionKind::Regular
                || !matches!(function.visibility, Visibility::Public | Visibility::External)
            {
                continue;
            }
            for (ordinal, param) in function.params.iter().enumerate() {
                let Some(name) = &param.name else { continue };
                if is_validated(function, param, analyses) {
                    continue;
                }
                votes.push(DetectorVote {
                    detector: DetectorName::Dataflow,
                    class: VulnClass::MissingInputValidation,
                    site: Site {
                        node: param.id,
                        statement: None,
                        span: param.span,
                        line: line_of(src, param.span.start()),
                        contract: mc.contract.name.clone(),
                        contract_id: mc.contract.id,
                        function: Some(function.display_name().to_string()),
                        function_id: Some(function.id),
                        ordinal,
                        description: format!("parameter {} is never validated", name),
                    },
                    note: None,
                });
            }
        }
    }
    votes
}

/// Validated iff a qualifying check reads the parameter before (or at) its
/// first other use along statement order.
fn is_validated(function: &FunctionDef, param: &VarDecl, analyses: &Analyses) -> bool {
    let name = param.name.as_deref().unwrap_or_default();
    let Some(cfg) = analyses.cfgs.get(&function.id) else { return false };
    let Some(dfg) = analyses.dfgs.get(&function.id) else { return false };

    let scope = &analyses.scopes[&function.id];
    let home = scope.home_locations.get(&param.id).copied().unwrap_or(DataLocation::Memory);
    let loc = AbstractLocation::new(param.id, home);

    let points = cfg.points_in_order();
    let mut first_check: Option<usize> = None;
    let mut first_other_use: Option<usize> = None;
    for (i, point) in points.iter().enumerate() {
        let Some(stmt) = analyses.unit.statement_by_id(*point) else { continue };
        if is_qualifying_check(stmt, name) {
            if first_check.is_none() {
                first_check = Some(i);
            }
            continue;
        }
        if first_other_use.is_none() && dfg.reads_of(*point).contains(&loc) {
            first_other_use = Some(i);
        }
    }
    match (first_check, first_other_use) {
        (Some(check), Some(other)) => check <= other,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// require/assert with the parameter as a direct comparison operand, or an
/// if-condition comparing it that guards a revert.
fn is_qualifying_check(stmt: &Statement, param: &str) -> bool {
    match stmt {
        Statement::Expr(e) => {
            let Expression::Call(call) = &e.expr else { return false };
            let Expression::Identifier(callee) = &call.callee else { return false };
            if callee.name != "require" && callee.name != "assert" {
                return false;
            }
            call.args.first().map_or(false, |cond| compares_param(cond, param))
        }
        Statement::If(i) => compares_param(&i.condition, param) && branch_reverts(&i.then_branch),
        _ => false,
    }
}

/// The parameter appears as a direct operand of some comparison inside the
/// condition expression.
pub(crate) fn compares_param(cond: &Expression, param: &str) -> bool {
    let mut found = false;
    walk_exprs(cond, &mut |e| {
        if let Expression::Binary(b) = e {
            if b.op.is_comparison() {
                for side in [&b.left, &b.right] {
                    if let Expression::Identifier(id) = side {
                        if id.name == param {
                            found = true;
                        }
                    }
                }
            }
        }
    });
    found
}

fn branch_reverts(branch: &Statement) -> bool {
    let mut reverts = false;
    let mut check = |s: &Statement| {
        if let Statement::Expr(e) = s {
            if let Expression::Call(c) = &e.expr {
                if let Expression::Identifier(callee) = &c.callee {
                    if callee.name == "revert" {
                        reverts = true;
                    }
                }
            }
        }
    };
    match branch {
        Statement::Block(b) => {
            for s in &b.statements {
                check(s);
            }
        }
        s => check(s),
    }
    reverts
}

/// Only address-typed parameters have a generic check template; everything
/// else is reported but not patched.
pub fn unfixable_reason(finding: &super::Finding, analyses: &Analyses) -> Option<UnfixableReason> {
    let function_id = finding.site.function_id?;
    let function = analyses.function_by_id(function_id)?;
    let param = function.params.iter().find(|p| p.id == finding.site.node)?;
    if param.ty.is_address() {
        None
    } else {
        Some(UnfixableReason::NonAddressParameter)
    }
}
