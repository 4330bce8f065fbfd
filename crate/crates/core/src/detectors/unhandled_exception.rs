//! Unhandled-exception detection for `send()` and value-bearing `call`:
//! their boolean result signals failure and must not be dropped.

use crate::analysis::locations::AbstractLocation;
use crate::analysis::{Analyses, MergedContract};
use crate::frontend::ast::*;
use crate::frontend::{classify_call, CallKind};

use super::{line_of, DetectorName, DetectorVote, Site, UnfixableReason, VulnClass};

/// How the boolean result of one transfer call is consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ResultUse {
    /// Bare expression statement; the result vanishes.
    Dropped,
    /// Captured into a variable (local or state).
    Captured(NodeId),
    /// Direct argument of require/assert or inside an if/while condition.
    Guarded,
    /// Consumed by some other enclosing expression.
    Consumed,
}

pub fn detect_unhandled_exception(analyses: &Analyses, src: &str) -> Vec<DetectorVote> {
    let mut votes = Vec::new();
    for mc in &analyses.merged {
        for function in &mc.contract.functions {
            if function.body.is_none() {
                continue;
            }
            votes.extend(function_votes(analyses, mc, function, src));
        }
    }
    votes
}

fn function_votes(
    analyses: &Analyses,
    mc: &MergedContract,
    function: &FunctionDef,
    src: &str,
) -> Vec<DetectorVote> {
    let mut votes = Vec::new();
    let Some(dfg) = analyses.dfgs.get(&function.id) else { return votes };
    let scope = &analyses.scopes[&function.id];

    let sites = transfer_sites(function, analyses.unit, mc);
    for (ordinal, site) in sites.iter().enumerate() {
        let make_site = |desc: &str| Site {
            node: site.call_id,
            statement: Some(site.stmt_id),
            span: site.span,
            line: line_of(src, site.span.start()),
            contract: mc.contract.name.clone(),
            contract_id: mc.contract.id,
            function: Some(function.display_name().to_string()),
            function_id: Some(function.id),
            ordinal,
            description: desc.to_string(),
        };
        let vote = |detector: DetectorName, site: Site| DetectorVote {
            detector,
            class: VulnClass::UnhandledException,
            site,
            note: None,
        };

        match &site.usage {
            ResultUse::Dropped => {
                votes.push(vote(DetectorName::Syntactic, make_site("transfer result dropped")));
                votes.push(vote(DetectorName::Dataflow, make_site("result has no dataflow use")));
                votes.push(vote(
                    DetectorName::Semantic,
                    make_site("result unused and unguarded"),
                ));
            }
            ResultUse::Captured(_) => {
                let Some(var) = captured_var(site, function, analyses.unit, scope) else {
                    continue;
                };
                let home = scope
                    .home_locations
                    .get(&var)
                    .copied()
                    .unwrap_or(DataLocation::Memory);
                let loc = AbstractLocation::new(var, home);
                let used_later = !dfg.uses_of_def(site.stmt_id, loc).is_empty();
                if !used_later {
                    votes.push(vote(
                        DetectorName::Dataflow,
                        make_site("captured result never read in this function"),
                    ));
                    votes.push(vote(
                        DetectorName::Semantic,
                        make_site("captured result unused and unguarded"),
                    ));
                }
            }
            ResultUse::Guarded | ResultUse::Consumed => {}
        }
    }
    votes
}

pub(crate) struct TransferSite {
    pub call_id: NodeId,
    pub stmt_id: NodeId,
    pub span: Span,
    pub usage: ResultUse,
}

/// Every `send`/value-bearing-`call` site of the function, in source order,
/// with the consumption context of its result.
pub(crate) fn transfer_sites(
    function: &FunctionDef,
    unit: &SourceUnit,
    mc: &MergedContract,
) -> Vec<TransferSite> {
    let mut sites = Vec::new();
    let Some(body) = &function.body else { return sites };
    for stmt in &body.statements {
        collect(stmt, unit, mc, &mut sites);
    }
    sites.sort_by_key(|s| s.span.start());
    return sites;

    fn collect(stmt: &Statement, unit: &SourceUnit, mc: &MergedContract, out: &mut Vec<TransferSite>) {
        match stmt {
            Statement::Block(b) => {
                for s in &b.statements {
                    collect(s, unit, mc, out);
                }
            }
            Statement::If(i) => {
                scan_expr(&i.condition, stmt.id(), true, unit, mc, out, None);
                collect(&i.then_branch, unit, mc, out);
                if let Some(e) = &i.else_branch {
                    collect(e, unit, mc, out);
                }
            }
            Statement::While(w) => {
                scan_expr(&w.condition, stmt.id(), true, unit, mc, out, None);
                collect(&w.body, unit, mc, out);
            }
            Statement::For(f) => {
                if let Some(init) = &f.init {
                    collect(init, unit, mc, out);
                }
                if let Some(c) = &f.condition {
                    scan_expr(c, stmt.id(), true, unit, mc, out, None);
                }
                if let Some(u) = &f.update {
                    scan_expr(u, stmt.id(), false, unit, mc, out, None);
                }
                collect(&f.body, unit, mc, out);
            }
            Statement::Expr(e) => {
                let top = top_level_usage(&e.expr, unit, mc);
                scan_expr(&e.expr, stmt.id(), false, unit, mc, out, top);
            }
            Statement::VarDecl(d) => {
                if let Some(init) = &d.decl.initializer {
                    let top = if is_transfer(init, unit, mc) {
                        Some((init.id(), ResultUse::Captured(d.decl.id)))
                    } else {
                        None
                    };
                    scan_expr(init, stmt.id(), false, unit, mc, out, top);
                }
            }
            Statement::Return(r) => {
                if let Some(v) = &r.value {
                    scan_expr(v, stmt.id(), false, unit, mc, out, None);
                }
            }
            Statement::Emit(e) => {
                for a in &e.args {
                    scan_expr(a, stmt.id(), false, unit, mc, out, None);
                }
            }
            Statement::Placeholder(_) => {}
        }
    }

    /// Classification of the statement's top-level expression, when it is
    /// exactly a transfer call or an assignment capturing one.
    fn top_level_usage(
        expr: &Expression,
        unit: &SourceUnit,
        mc: &MergedContract,
    ) -> Option<(NodeId, ResultUse)> {
        if is_transfer(expr, unit, mc) {
            return Some((expr.id(), ResultUse::Dropped));
        }
        if let Expression::Assign(a) = expr {
            if a.op == AssignOp::Assign && is_transfer(&a.value, unit, mc) {
                if let Expression::Identifier(_) = &a.target {
                    // resolution happens against the function scope later;
                    // carry the target by declaration lookup at vote time
                    return Some((a.value.id(), ResultUse::Captured(NodeId(0))));
                }
            }
        }
        None
    }

    fn is_transfer(expr: &Expression, unit: &SourceUnit, mc: &MergedContract) -> bool {
        matches!(
            classify_call(expr, unit, mc.contract),
            CallKind::EtherTransferSend | CallKind::EtherTransferCallValue
        ) && matches!(expr, Expression::Call(_))
    }

    fn scan_expr(
        expr: &Expression,
        stmt_id: NodeId,
        in_condition: bool,
        unit: &SourceUnit,
        mc: &MergedContract,
        out: &mut Vec<TransferSite>,
        top: Option<(NodeId, ResultUse)>,
    ) {
        walk_exprs(expr, &mut |e| {
            if !is_transfer(e, unit, mc) {
                return;
            }
            let usage = match &top {
                Some((top_id, usage)) if *top_id == e.id() => usage.clone(),
                _ => {
                    if in_condition || guarded_within(expr, e.id()) {
                        ResultUse::Guarded
                    } else {
                        ResultUse::Consumed
                    }
                }
            };
            out.push(TransferSite { call_id: e.id(), stmt_id, span: e.span(), usage });
        });
    }

    /// Whether the call is a direct argument of require/assert somewhere
    /// inside `root`.
    fn guarded_within(root: &Expression, call_id: NodeId) -> bool {
        let mut guarded = false;
        walk_exprs(root, &mut |e| {
            if let Expression::Call(c) = e {
                if let Expression::Identifier(name) = &c.callee {
                    if (name.name == "require" || name.name == "assert")
                        && c.args.iter().any(|a| contains_expr(a, call_id))
                    {
                        guarded = true;
                    }
                }
            }
        });
        guarded
    }

    fn contains_expr(root: &Expression, id: NodeId) -> bool {
        let mut found = false;
        walk_exprs(root, &mut |e| {
            if e.id() == id {
                found = true;
            }
        });
        found
    }
}

/// Resolve the captured variable for assignment-captured sites; declaration
/// captures already carry the declaration id.
pub(crate) fn captured_var(
    site: &TransferSite,
    function: &FunctionDef,
    unit: &SourceUnit,
    scope: &crate::analysis::Scope,
) -> Option<NodeId> {
    match site.usage {
        ResultUse::Captured(id) if id != NodeId(0) => Some(id),
        ResultUse::Captured(_) => {
            let stmt = unit.statement_by_id(site.stmt_id)?;
            let Statement::Expr(e) = stmt else { return None };
            let Expression::Assign(a) = &e.expr else { return None };
            let Expression::Identifier(target) = &a.target else { return None };
            let _ = function;
            scope.resolve(&target.name)
        }
        _ => None,
    }
}

/// A captured result that other code reads counts as handled by the
/// developer's own error path.
pub fn unfixable_reason(finding: &super::Finding, analyses: &Analyses) -> Option<UnfixableReason> {
    let function_id = finding.site.function_id?;
    let function = analyses.function_by_id(function_id)?;
    let mc = analyses.contract_of_function(function_id)?;
    let scope = analyses.scopes.get(&function_id)?;

    let sites = transfer_sites(function, analyses.unit, mc);
    let site = sites.iter().find(|s| s.call_id == finding.site.node)?;
    let var = captured_var(site, function, analyses.unit, scope)?;

    // state-variable capture read by any other function of the contract
    if scope.is_state_var(var) {
        let read_elsewhere = mc.functions.iter().any(|f| {
            f.id != function_id
                && analyses
                    .summaries
                    .get(&f.id)
                    .map_or(false, |s| s.state_vars_read.contains(&var))
        });
        if read_elsewhere {
            return Some(UnfixableReason::ReturnValueHandled);
        }
    }
    None
}
