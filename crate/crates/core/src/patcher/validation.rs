//! Method-level fix: insert `require(<param> != address(0));` at the start
//! of the body for unvalidated address parameters.

use crate::detectors::Finding;
use crate::frontend::ast::*;

use super::wrap::finding_key;
use super::{EditKind, EditScript, FixPattern, PatchError, Position};

pub fn fix_missing_input_validation(
    finding: &Finding,
    unit: &SourceUnit,
) -> Result<EditScript, PatchError> {
    let function_id = finding
        .site
        .function_id
        .ok_or_else(|| PatchError::NotApplicable("finding has no function".into()))?;
    let (_, function) =
        unit.function_by_id(function_id).ok_or(PatchError::MissingTarget(function_id))?;
    let param = function
        .params
        .iter()
        .find(|p| p.id == finding.site.node)
        .ok_or(PatchError::MissingTarget(finding.site.node))?;
    if !param.ty.is_address() {
        return Err(PatchError::NotApplicable("parameter is not address-typed".into()));
    }
    let body = function
        .body
        .as_ref()
        .ok_or_else(|| PatchError::NotApplicable("function has no body".into()))?;
    let name = param.name.clone().unwrap_or_default();

    let mut script = EditScript::new(FixPattern::Require, finding_key(finding));
    if has_zero_address_check(body, &name) {
        // an equivalent check already exists; nothing to do
        return Ok(script);
    }

    let mut ids = IdGen::new();
    let mut factory = NodeFactory::new(&mut ids);
    let param_ref = factory.ident(&name);
    let zero = factory.zero_address();
    let cond = factory.binary(BinaryOp::Ne, param_ref, zero);
    let stmt = factory.require_stmt(cond);
    script.push(EditKind::InsertStatement {
        position: Position::AtIndex { block: body.id, index: 0 },
        node: stmt,
    });
    Ok(script)
}

/// `require(p != address(0))` in either orientation, anywhere in the body.
fn has_zero_address_check(body: &Block, param: &str) -> bool {
    let mut found = false;
    for stmt in &body.statements {
        scan(stmt, param, &mut found);
    }
    return found;

    fn scan(stmt: &Statement, param: &str, found: &mut bool) {
        match stmt {
            Statement::Block(b) => {
                for s in &b.statements {
                    scan(s, param, found);
                }
            }
            Statement::Expr(e) => {
                if let Expression::Call(call) = &e.expr {
                    if let Expression::Identifier(callee) = &call.callee {
                        if (callee.name == "require" || callee.name == "assert")
                            && call.args.first().map_or(false, |c| is_zero_check(c, param))
                        {
                            *found = true;
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn is_zero_check(cond: &Expression, param: &str) -> bool {
        let Expression::Binary(b) = cond else { return false };
        if b.op != BinaryOp::Ne {
            return false;
        }
        let pairs = [(&b.left, &b.right), (&b.right, &b.left)];
        pairs.iter().any(|(side, other)|

            matches!(side, Expression::Identifier(id) if id.name == param)
                && is_zero_address(other))
    }

    fn is_zero_address(expr: &Expression) -> bool {
        match expr {
            Expression::Call(c) => {
                matches!(&c.callee, Expression::ElementaryType(t) if t.ty.is_address())
                    && c.args.len() == 1
                    && matches!(&c.args[0], Expression::Literal(l) if l.text == "0")
            }
            Expression::Literal(l) => l.text == "0" || l.text == "0x0",
            _ => false,
        }
    }
}
