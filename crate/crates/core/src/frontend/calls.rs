//! Syntactic call classification with local type information.

use super::ast::*;

/// What a call expression does, as far as the fix patterns care.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CallKind {
    /// Same-contract function, builtin (`require`, `assert`, `revert`,
    /// hashing), or struct construction.
    Internal,
    /// Method call on a contract-typed or unresolvable receiver, or a bare
    /// low-level `call` without value.
    ExternalContract,
    EtherTransferSend,
    EtherTransferTransfer,
    /// Both `x.call.value(e)(...)` and `x.call{value: e}(...)`.
    EtherTransferCallValue,
    Delegatecall,
}

impl CallKind {
    pub fn is_ether_transfer(&self) -> bool {
        matches!(
            self,
            CallKind::EtherTransferSend
                | CallKind::EtherTransferTransfer
                | CallKind::EtherTransferCallValue
        )
    }

    /// Calls that hand control to foreign code.
    pub fn is_external(&self) -> bool {
        !matches!(self, CallKind::Internal)
    }
}

const BUILTINS: [&str; 8] =
    ["require", "assert", "revert", "keccak256", "sha3", "sha256", "ripemd160", "ecrecover"];

/// Classify a call expression. Resolution is purely syntactic plus local type
/// info from `unit`/`contract`; unresolvable receivers fall back to
/// [`CallKind::ExternalContract`].
pub fn classify_call(expr: &Expression, unit: &SourceUnit, contract: &ContractDef) -> CallKind {
    let Expression::Call(call) = expr else {
        return CallKind::Internal;
    };

    // 0.6 option form: recv.call{value: e}(...)
    if call.options.iter().any(|o| o.name == "value") {
        if let Expression::Member(m) = &call.callee {
            if m.member == "call" {
                return CallKind::EtherTransferCallValue;
            }
            if m.member == "delegatecall" {
                return CallKind::Delegatecall;
            }
        }
        return CallKind::ExternalContract;
    }

    match &call.callee {
        Expression::Member(m) => match m.member.as_str() {
            "send" => CallKind::EtherTransferSend,
            "transfer" => CallKind::EtherTransferTransfer,
            "delegatecall" | "callcode" => CallKind::Delegatecall,
            "call" => CallKind::ExternalContract,
            "value" => {
                // 0.4 chain: recv.call.value(e) — the receiver is `recv.call`
                if let Expression::Member(inner) = &m.base {
                    if inner.member == "call" {
                        return CallKind::EtherTransferCallValue;
                    }
                    if inner.member == "delegatecall" {
                        return CallKind::Delegatecall;
                    }
                }
                CallKind::ExternalContract
            }
            _ => classify_member_call(m, unit, contract),
        },
        // `f(...)(...)`: a value-carrying call already classified through its
        // callee, e.g. `x.call.value(e)(...)`.
        Expression::Call(_) => {
            let inner = classify_call(&call.callee, unit, contract);
            if inner == CallKind::Internal {
                CallKind::ExternalContract
            } else {
                inner
            }
        }
        Expression::Identifier(ident) => {
            if BUILTINS.contains(&ident.name.as_str()) {
                return CallKind::Internal;
            }
            if resolve_function(&ident.name, unit, contract).is_some() {
                return CallKind::Internal;
            }
            if contract.structs.iter().any(|s| s.name == ident.name)
                || base_chain(unit, contract).iter().any(|c| c.structs.iter().any(|s| s.name == ident.name))
            {
                return CallKind::Internal;
            }
            // unresolvable receiver: conservative external, low confidence
            CallKind::ExternalContract
        }
        Expression::ElementaryType(_) => CallKind::Internal,
        _ => CallKind::ExternalContract,
    }
}

fn classify_member_call(m: &MemberAccess, unit: &SourceUnit, contract: &ContractDef) -> CallKind {
    // this.f() where f is declared in the same (merged) contract
    if let Expression::Identifier(base) = &m.base {
        if base.name == "this" {
            if resolve_function(&m.member, unit, contract).is_some() {
                return CallKind::Internal;
            }
            return CallKind::ExternalContract;
        }
        // library-or-contract qualified call: Type.f()
        if let Some(target) = unit.contract_by_name(&base.name) {
            return if target.kind == ContractKind::Library {
                CallKind::Internal
            } else {
                CallKind::ExternalContract
            };
        }
    }
    CallKind::ExternalContract
}

/// True when the classification had to fall back for an unresolvable
/// receiver; surfaces as a low-confidence note on detector votes.
pub fn is_low_confidence(expr: &Expression, unit: &SourceUnit, contract: &ContractDef) -> bool {
    let Expression::Call(call) = expr else { return false };
    match &call.callee {
        Expression::Identifier(ident) => {
            !BUILTINS.contains(&ident.name.as_str())
                && resolve_function(&ident.name, unit, contract).is_none()
                && !contract.structs.iter().any(|s| s.name == ident.name)
                && classify_call(expr, unit, contract) == CallKind::ExternalContract
        }
        _ => false,
    }
}

/// Find a function by name in the contract or its base chain (derived
/// definitions shadow base ones).
pub fn resolve_function<'a>(
    name: &str,
    unit: &'a SourceUnit,
    contract: &'a ContractDef,
) -> Option<&'a FunctionDef> {
    if let Some(f) = contract.functions.iter().find(|f| f.name == name) {
        return Some(f);
    }
    for base in base_chain(unit, contract) {
        if let Some(f) = base.functions.iter().find(|f| f.name == name) {
            return Some(f);
        }
    }
    None
}

/// Base contracts from nearest to farthest. Cycles are cut silently; the
/// parser already rejects multi-base contracts.
pub fn base_chain<'a>(unit: &'a SourceUnit, contract: &'a ContractDef) -> Vec<&'a ContractDef> {
    let mut chain = Vec::new();
    let mut current = contract;
    let mut guard = 0;
    while let Some(base_name) = current.bases.first() {
        guard += 1;
        if guard > 32 {
            break;
        }
        match unit.contract_by_name(base_name) {
            Some(base) if base.id != contract.id => {
                chain.push(base);
                current = base;
            }
            _ => break,
        }
    }
    chain
}
