//! Contract-level fix for locked ether: locate (or introduce) an owner and
//! inject an owner-gated function that transfers out the full balance.

use crate::detectors::Finding;
use crate::frontend::ast::*;

use super::wrap::finding_key;
use super::{fresh_name, EditKind, EditScript, FixPattern, PatchError, Position};

pub fn fix_locked_ether(finding: &Finding, unit: &SourceUnit) -> Result<EditScript, PatchError> {
    let contract = unit
        .contract_by_id(finding.site.contract_id)
        .ok_or(PatchError::MissingTarget(finding.site.contract_id))?;
    if contract.kind == ContractKind::Library {
        return Err(PatchError::Unfixable);
    }

    let mut script = EditScript::new(FixPattern::Withdraw, finding_key(finding));

    let owner_name = match find_owner(contract) {
        Some(name) => name,
        None => {
            let name = fresh_name(unit, "owner");
            let mut ids = IdGen::new();
            let mut factory = NodeFactory::new(&mut ids);
            let decl =
                factory.state_var(&name, TypeName::Address { payable: false }, Visibility::Private);
            script.push(EditKind::AddStateVar { contract: contract.id, decl });

            let assign_stmt = {
                let mut ids = IdGen::new();
                let mut factory = NodeFactory::new(&mut ids);
                let target = factory.ident(&name);
                let msg = factory.ident("msg");
                let sender = factory.member(msg, "sender");
                let assign = factory.assign(target, sender);
                factory.expr_stmt(assign)
            };
            match contract.functions.iter().find(|f| f.kind == FunctionKind::Constructor) {
                Some(ctor) => {
                    let body = ctor.body.as_ref().ok_or_else(|| {
                        PatchError::NotApplicable("constructor has no body".into())
                    })?;
                    script.push(EditKind::InsertStatement {
                        position: Position::AtIndex { block: body.id, index: 0 },
                        node: assign_stmt,
                    });
                }
                None => {
                    let mut ids = IdGen::new();
                    let mut factory = NodeFactory::new(&mut ids);
                    let body = factory.block(vec![assign_stmt]);
                    let ctor = factory.function(
                        "",
                        FunctionKind::Constructor,
                        Visibility::Public,
                        Mutability::Nonpayable,
                        Vec::new(),
                        body,
                    );
                    script.push(EditKind::AddFunction { contract: contract.id, def: ctor });
                }
            }
            name
        }
    };

    let withdraw_name = fresh_name(unit, "withdraw");
    let withdraw = build_withdraw(&withdraw_name, &owner_name);
    script.push(EditKind::AddFunction { contract: contract.id, def: withdraw });
    Ok(script)
}

/// An owner is an address state variable named like "owner", or one assigned
/// `msg.sender` in the constructor.
pub fn find_owner(contract: &ContractDef) -> Option<String> {
    for v in &contract.state_vars {
        if !v.ty.is_address() {
            continue;
        }
        if let Some(name) = &v.name {
            if name.to_lowercase().contains("owner") {
                return Some(name.clone());
            }
        }
    }
    let ctor = contract.functions.iter().find(|f| f.kind == FunctionKind::Constructor)?;
    let body = ctor.body.as_ref()?;
    for stmt in &body.statements {
        let Statement::Expr(e) = stmt else { continue };
        let Expression::Assign(a) = &e.expr else { continue };
        let Expression::Identifier(target) = &a.target else { continue };
        let Expression::Member(m) = &a.value else { continue };
        let Expression::Identifier(base) = &m.base else { continue };
        if base.name == "msg" && m.member == "sender" {
            let is_address_state = contract
                .state_vars
                .iter()
                .any(|v| v.name.as_deref() == Some(&target.name) && v.ty.is_address());
            if is_address_state {
                return Some(target.name.clone());
            }
        }
    }
    None
}

/// `function withdraw() public { require(msg.sender == owner); msg.sender.transfer(address(this).balance); }`
fn build_withdraw(name: &str, owner: &str) -> FunctionDef {
    let mut ids = IdGen::new();
    let mut factory = NodeFactory::new(&mut ids);

    let msg = factory.ident("msg");
    let sender = factory.member(msg, "sender");
    let owner_ref = factory.ident(owner);
    let cond = factory.binary(BinaryOp::Eq, sender, owner_ref);
    let guard = factory.require_stmt(cond);

    let msg2 = factory.ident("msg");
    let sender2 = factory.member(msg2, "sender");
    let transfer = factory.member(sender2, "transfer");
    let addr_ty = factory.elementary(TypeName::Address { payable: false });
    let this_ref = factory.ident("this");
    let addr_this = factory.call(addr_ty, vec![this_ref]);
    let balance = factory.member(addr_this, "balance");
    let call = factory.call(transfer, vec![balance]);
    let transfer_stmt = factory.expr_stmt(call);

    let body = factory.block(vec![guard, transfer_stmt]);
    factory.function(
        name,
        FunctionKind::Regular,
        Visibility::Public,
        Mutability::Nonpayable,
        Vec::new(),
        body,
    )
}
