//! Reentrancy detection: storage writes reachable after an external call.
//!
//! Strategies: syntactic (lexical call-then-state-assignment), dataflow
//! (CFG-reachable storage write, points-to aware, summaries included), and
//! semantic (dataflow minus writes whose execution is controlled by an
//! external call's return value).

use crate::analysis::{Analyses, MergedContract};
use crate::frontend::ast::*;
use crate::frontend::{classify_call, is_low_confidence};

use super::{
    enclosing_conditions, line_of, lock_guard_var, DetectorName, DetectorVote, Site, VulnClass,
};

pub fn detect_reentrancy(analyses: &Analyses, src: &str) -> Vec<DetectorVote> {
    let mut votes = Vec::new();
    for mc in &analyses.merged {
        for function in &mc.contract.functions {
            if function.body.is_none() {
                continue;
            }
            if lock_guard_var(function, mc).is_some() {
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
    let Some(cfg) = analyses.cfgs.get(&function.id) else { return votes };
    let Some(dfg) = analyses.dfgs.get(&function.id) else { return votes };

    let points = cfg.points_in_order();
    let call_sites: Vec<NodeId> = points
        .iter()
        .copied()
        .filter(|p| dfg.facts_of(*p).map_or(false, |f| f.makes_external_call))
        .collect();

    let conditions = enclosing_conditions(function);

    let mut ordinal = 0usize;
    for call_point in call_sites {
        let stmt = analyses.unit.statement_by_id(call_point);
        let site_ordinal = ordinal;
        ordinal += 1;

        // storage writes to state variables reachable from the call
        let reachable = cfg.points_reachable_from(call_point);
        let writes_after: Vec<NodeId> = reachable
            .iter()
            .copied()
            .filter(|q| {
                dfg.writes_of(*q)
                    .iter()
                    .any(|loc| loc.is_storage() && mc.state_var_by_id(loc.decl).is_some())
            })
            .collect();

        let low_conf = stmt.map_or(false, |s| {
            statement_calls(s).iter().any(|e| is_low_confidence(e, analyses.unit, mc.contract))
        });
        let make_site = |desc: &str| Site {
            node: call_point,
            statement: Some(call_point),
            span: stmt.map_or(Span::Synthetic, |s| s.span()),
            line: line_of(src, stmt.map_or(0, |s| s.span().start())),
            contract: mc.contract.name.clone(),
            contract_id: mc.contract.id,
            function: Some(function.display_name().to_string()),
            function_id: Some(function.id),
            ordinal: site_ordinal,
            description: desc.to_string(),
        };
        let vote = |detector: DetectorName, site: Site| DetectorVote {
            detector,
            class: VulnClass::Reentrancy,
            site,
            note: if low_conf { Some("unresolved receiver treated as external".into()) } else { None },
        };

        // syntactic: a direct external/ether call lexically followed by an
        // assignment naming a state variable
        if let Some(stmt) = stmt {
            if statement_calls(stmt)
                .iter()
                .any(|e| classify_call(e, analyses.unit, mc.contract).is_external())
                && lexically_followed_by_state_write(function, mc, stmt.span())
            {
                votes.push(vote(
                    DetectorName::Syntactic,
                    make_site("external call lexically followed by state write"),
                ));
            }
        }

        if writes_after.is_empty() {
            continue;
        }
        // dataflow: some storage write is reachable from the call site
        votes.push(vote(
            DetectorName::Dataflow,
            make_site("storage write reachable after external call"),
        ));

        // semantic: ignore writes controlled by an external call's result
        let uncontrolled = writes_after
            .iter()
            .any(|w| !write_controlled_by_external_call(*w, &conditions, analyses, function.id));
        if uncontrolled {
            votes.push(vote(
                DetectorName::Semantic,
                make_site("state write not guarded by the call result"),
            ));
        }
    }
    votes
}

/// All call expressions evaluated directly by a statement.
pub(crate) fn statement_calls(stmt: &Statement) -> Vec<&Expression> {
    let mut calls = Vec::new();
    for expr in statement_exprs(stmt) {
        walk_exprs(expr, &mut |e| {
            if matches!(e, Expression::Call(_)) {
                calls.push(e);
            }
        });
    }
    calls
}

fn lexically_followed_by_state_write(
    function: &FunctionDef,
    mc: &MergedContract,
    call_span: Span,
) -> bool {
    let mut found = false;
    let Some(body) = &function.body else { return false };
    for s in &body.statements {
        scan(s, call_span, mc, &mut found);
    }
    return found;

    fn scan(stmt: &Statement, call_span: Span, mc: &MergedContract, found: &mut bool) {
        match stmt {
            Statement::Block(b) => {
                for s in &b.statements {
                    scan(s, call_span, mc, found);
                }
            }
            Statement::If(i) => {
                scan(&i.then_branch, call_span, mc, found);
                if let Some(e) = &i.else_branch {
                    scan(e, call_span, mc, found);
                }
            }
            Statement::While(w) => scan(&w.body, call_span, mc, found),
            Statement::For(f) => scan(&f.body, call_span, mc, found),
            Statement::Expr(e) => {
                if stmt.span().start() > call_span.start() {
                    if let Expression::Assign(a) = &e.expr {
                        if let Some(base) = a.target.base_identifier() {
                            if mc
                                .state_vars
                                .iter()
                                .any(|v| v.name.as_deref() == Some(&base.name))
                            {
                                *found = true;
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

fn write_controlled_by_external_call(
    write_point: NodeId,
    conditions: &std::collections::BTreeMap<NodeId, NodeId>,
    analyses: &Analyses,
    function_id: NodeId,
) -> bool {
    let Some(cond_point) = conditions.get(&write_point) else { return false };
    condition_depends_on_external_call(*cond_point, analyses, function_id)
}

pub(crate) fn condition_depends_on_external_call(
    cond_point: NodeId,
    analyses: &Analyses,
    function_id: NodeId,
) -> bool {
    let Some(dfg) = analyses.dfgs.get(&function_id) else { return false };
    let direct = dfg
        .facts_of(cond_point)
        .map_or(false, |f| !f.external_calls.is_empty() || f.makes_external_call);
    if direct {
        return true;
    }
    // the condition reads a value transitively defined by an external call
    dfg.backward_slice(cond_point).iter().any(|d| {
        dfg.facts_of(*d).map_or(false, |f| !f.external_calls.is_empty() || f.makes_external_call)
    })
}

/// Post-processing filter: reasons a voted reentrancy finding cannot be
/// patched automatically.
pub fn unfixable_reason(
    finding: &super::Finding,
    analyses: &Analyses,
) -> Option<super::UnfixableReason> {
    let function_id = finding.site.function_id?;
    let function = analyses.function_by_id(function_id)?;
    let cfg = analyses.cfgs.get(&function_id)?;
    let dfg = analyses.dfgs.get(&function_id)?;
    let mc = analyses.contract_of_function(function_id)?;
    let conditions = enclosing_conditions(function);

    let call_point = finding.site.node;
    let writes_after: Vec<NodeId> = cfg
        .points_reachable_from(call_point)
        .into_iter()
        .filter(|q| {
            dfg.writes_of(*q)
                .iter()
                .any(|loc| loc.is_storage() && mc.state_var_by_id(loc.decl).is_some())
        })
        .collect();

    for w in &writes_after {
        if write_controlled_by_external_call(*w, &conditions, analyses, function_id) {
            return Some(super::UnfixableReason::ExternalCallControlsWrite);
        }
    }
    for w in &writes_after {
        let direct = dfg.facts_of(*w).map_or(false, |f| f.reads_timestamp);
        let transitive = dfg
            .backward_slice(*w)
            .iter()
            .any(|d| dfg.facts_of(*d).map_or(false, |f| f.reads_timestamp));
        if direct || transitive {
            return Some(super::UnfixableReason::TimestampDependentWrite);
        }
    }
    None
}
