//! Locked-ether detection at contract scope: the contract can receive ether
//! but has no path that sends any out.

use crate::analysis::{Analyses, MergedContract};
use crate::frontend::ast::*;

use super::{line_of, DetectorName, DetectorVote, Site, UnfixableReason, VulnClass};

const EXIT_TOKENS: [&str; 6] = ["send", "transfer", "call", "value", "delegatecall", "callcode"];

pub fn detect_locked_ether(analyses: &Analyses, src: &str) -> Vec<DetectorVote> {
    let mut votes = Vec::new();
    for mc in &analyses.merged {
        if !mc.has_payable_entry() {
            continue;
        }
        let make_site = |desc: &str| Site {
            node: mc.contract.id,
            statement: None,
            span: mc.contract.span,
            line: line_of(src, mc.contract.span.start()),
            contract: mc.contract.name.clone(),
            contract_id: mc.contract.id,
            function: None,
            function_id: None,
            ordinal: 0,
            description: desc.to_string(),
        };
        let vote = |detector: DetectorName, site: Site| DetectorVote {
            detector,
            class: VulnClass::LockedEther,
            site,
            note: None,
        };

        // syntactic: no transfer-shaped member token anywhere in the chain
        if !has_exit_token(mc) {
            votes.push(vote(
                DetectorName::Syntactic,
                make_site("payable contract without transfer tokens"),
            ));
        }

        // dataflow: no function summary ever sends ether
        let any_transfer = mc
            .functions
            .iter()
            .any(|f| analyses.summaries.get(&f.id).map_or(false, |s| s.makes_ether_transfer));
        if !any_transfer {
            votes.push(vote(
                DetectorName::Dataflow,
                make_site("no method summary sends ether"),
            ));

            // semantic: a delegatecall only rescues the funds when its
            // target resolves to an in-unit contract that can send ether
            if !has_resolvable_delegatecall_exit(mc, analyses) {
                votes.push(vote(
                    DetectorName::Semantic,
                    make_site("no safe exit, delegatecall targets unresolved"),
                ));
            }
        }
    }
    votes
}

fn has_exit_token(mc: &MergedContract) -> bool {
    let mut found = false;
    let mut scan = |stmts: &[Statement]| {
        for s in stmts {
            scan_stmt(s, &mut found);
        }
    };
    for f in &mc.functions {
        if let Some(body) = &f.body {
            scan(&body.statements);
        }
    }
    for m in &mc.modifiers {
        scan(&m.body.statements);
    }
    return found;

    fn scan_stmt(stmt: &Statement, found: &mut bool) {
        match stmt {
            Statement::Block(b) => {
                for s in &b.statements {
                    scan_stmt(s, found);
                }
            }
            Statement::If(i) => {
                scan_exprs(&i.condition, found);
                scan_stmt(&i.then_branch, found);
                if let Some(e) = &i.else_branch {
                    scan_stmt(e, found);
                }
            }
            Statement::While(w) => {
                scan_exprs(&w.condition, found);
                scan_stmt(&w.body, found);
            }
            Statement::For(f) => {
                if let Some(init) = &f.init {
                    scan_stmt(init, found);
                }
                if let Some(c) = &f.condition {
                    scan_exprs(c, found);
                }
                if let Some(u) = &f.update {
                    scan_exprs(u, found);
                }
                scan_stmt(&f.body, found);
            }
            other => {
                for e in statement_exprs(other) {
                    scan_exprs(e, found);
                }
            }
        }
    }

    fn scan_exprs(root: &Expression, found: &mut bool) {
        walk_exprs(root, &mut |e| {
            if let Expression::Member(m) = e {
                if EXIT_TOKENS.contains(&m.member.as_str()) {
                    *found = true;
                }
            }
            if let Expression::Call(c) = e {
                if c.options.iter().any(|o| o.name == "value") {
                    *found = true;
                }
            }
        });
    }
}

/// The Parity pattern check: a delegatecall whose receiver resolves to an
/// in-unit contract with an ether-transferring function counts as an exit.
fn has_resolvable_delegatecall_exit(mc: &MergedContract, analyses: &Analyses) -> bool {
    let mut rescued = false;
    for f in &mc.functions {
        let Some(dfg) = analyses.dfgs.get(&f.id) else { continue };
        for facts in dfg.facts.values() {
            for (call_id, kind) in &facts.external_calls {
                if *kind != crate::frontend::CallKind::Delegatecall {
                    continue;
                }
                if let Some(target) = delegatecall_target_contract(*call_id, f, mc, analyses) {
                    let target_sends = analyses
                        .merged
                        .iter()
                        .find(|m| m.contract.name == target)
                        .map_or(false, |m| {
                            m.functions.iter().any(|tf| {
                                analyses
                                    .summaries
                                    .get(&tf.id)
                                    .map_or(false, |s| s.makes_ether_transfer)
                            })
                        });
                    if target_sends {
                        rescued = true;
                    }
                }
            }
        }
    }
    rescued
}

/// Resolve `x.delegatecall(...)` to a contract name when `x` is a state
/// variable of a contract type declared in this unit.
fn delegatecall_target_contract(
    call_id: crate::frontend::ast::NodeId,
    function: &FunctionDef,
    mc: &MergedContract,
    analyses: &Analyses,
) -> Option<String> {
    let mut receiver_name: Option<String> = None;
    if let Some(body) = &function.body {
        for s in &body.statements {
            let mut visit = |stmt: &Statement| {
                for expr in statement_exprs(stmt) {
                    walk_exprs(expr, &mut |e| {
                        if e.id() != call_id {
                            return;
                        }
                        if let Expression::Call(c) = e {
                            if let Expression::Member(m) = &c.callee {
                                if let Expression::Identifier(base) = &m.base {
                                    receiver_name = Some(base.name.clone());
                                }
                            }
                        }
                    });
                }
            };
            walk_stmts(s, &mut visit);
        }
    }
    let receiver = receiver_name?;
    let decl = mc.state_vars.iter().find(|v| v.name.as_deref() == Some(&receiver))?;
    match &decl.ty {
        TypeName::UserDefined(type_name) => {
            analyses.unit.contract_by_name(type_name).map(|c| c.name.clone())
        }
        _ => None,
    }
}

fn walk_stmts(stmt: &Statement, f: &mut dyn FnMut(&Statement)) {
    f(stmt);
    match stmt {
        Statement::Block(b) => {
            for s in &b.statements {
                walk_stmts(s, f);
            }
        }
        Statement::If(i) => {
            walk_stmts(&i.then_branch, f);
            if let Some(e) = &i.else_branch {
                walk_stmts(e, f);
            }
        }
        Statement::While(w) => walk_stmts(&w.body, f),
        Statement::For(fo) => {
            if let Some(init) = &fo.init {
                walk_stmts(init, f);
            }
            walk_stmts(&fo.body, f);
        }
        _ => {}
    }
}

/// Library-style contracts are not supposed to hold ether; no withdraw is
/// injected for them.
pub fn unfixable_reason(finding: &super::Finding, analyses: &Analyses) -> Option<UnfixableReason> {
    let mc = analyses.merged_for(finding.site.contract_id)?;
    if mc.contract.kind == ContractKind::Library || !mc.has_payable_entry() {
        Some(UnfixableReason::LibraryContract)
    } else {
        None
    }
}
